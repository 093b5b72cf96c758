#pragma once

#include "rpmdp/cmdp.hpp"
#include "rpmdp/rng.hpp"
#include "rpmdp/threat.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rpmdp {

// ---------------------------------------------------------------------------
// Random dense instances for property sweeps and oracle comparisons.

struct RandomCmdpConfig {
    int n_states = 5;
    int n_actions = 3;
    int horizon = 4;
    double gamma = 0.95;
    double beta = 0.9;
    double hazard_density = 0.2; // chance a (s, a) pair is dangerous (d = 1)
    double dirichlet = 1.0;      // concentration of transition rows
    bool uniform_initial = false; // default: start pinned to state 0
    std::uint64_t seed = 0;
};

Cmdp random_cmdp(const RandomCmdpConfig& cfg);

// Random stochastic policy with Dirichlet(1) rows.
Policy random_policy(int horizon, int n_states, int n_actions, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Apple gathering on a small field.  Deterministic moves {stay, N, S, E, W};
// walking into the border stays put.  Entering a cell with an uncollected
// apple pays apple_reward and sets its bit in the state; a step that ends on
// a bomb cell is one unit of danger, every step it does (the episode
// continues, so lingering there keeps accumulating discounted danger).

struct GatherConfig {
    int width = 6;
    int height = 6;
    int start_x = 0, start_y = 0;
    std::vector<std::array<int, 2>> apples; // at most 8
    std::vector<std::array<int, 2>> bombs;
    int horizon = 24;
    double gamma = 1.0;
    double beta = 0.95;
    double apple_reward = 10.0;
};

// Layout characters: '#' border filler (outside the field is implicit), '.'
// floor, 'S' start, 'A' apple, 'B' bomb.
GatherConfig gather_from_layout(const std::vector<std::string>& rows);

struct GatherEnv {
    GatherConfig config;
    Cmdp cmdp;
    int n_cells = 0;
    int n_apples = 0;

    int cell(int x, int y) const { return y * config.width + x; }
    int state_of(int x, int y, unsigned collected_mask) const {
        return static_cast<int>(cell(x, y) * (1u << n_apples) + collected_mask);
    }
    int cell_of_state(int s) const { return s >> n_apples; }
    unsigned mask_of_state(int s) const { return s & ((1u << n_apples) - 1); }
};

GatherEnv grid_gather(const GatherConfig& cfg);

// ---------------------------------------------------------------------------
// Loop driving with momentum.  The track is a closed band of cells; the car
// state is (cell, heading, speed in {0,1,2}) plus one absorbing crashed
// state.  The 9 actions combine steering {left, straight, right} with
// acceleration {-1, 0, +1}; the car first turns, then moves speed' cells one
// at a time along its heading, and touching anything off the track crashes
// (danger 1, crash penalty, absorbed).  Reward is the geodesic progress made
// along the loop, minus a stop penalty when the car ends a step standing.

struct CircuitConfig {
    std::vector<std::string> layout; // '#' off-track, '.' track, 'S' start line
    int horizon = 40;
    double gamma = 1.0;
    double beta = 0.9;
    double crash_penalty = -200.0;
    double stop_penalty = -1.0;
};

// Rectangular ring of the given outer size and band width; the start line
// sits on the left edge, mid-height.  narrow_len > 0 blocks that many cells
// of every lane except the outermost along the bottom straight, pinching the
// track to width 1 there.
std::vector<std::string> ring_layout(int outer_w, int outer_h, int band,
                                     int narrow_len = 0);

struct CircuitEnv {
    CircuitConfig config;
    Cmdp cmdp;
    int n_track_cells = 0;
    int loop_length = 0;   // max progress value + 1
    int crashed_state = 0; // absorbing state index
    int start_state = 0;

    std::vector<int> track_x, track_y;  // per track-cell coordinates
    std::vector<int> progress;          // per track-cell forward position
    int state_of(int track_cell, int heading, int speed) const {
        return (track_cell * 4 + heading) * 3 + speed;
    }
    int track_cell_of(int s) const { return s / 12; }
    int heading_of(int s) const { return (s / 3) % 4; }
    int speed_of(int s) const { return s % 3; }
};

CircuitEnv grid_circuit(const CircuitConfig& cfg);

// ---------------------------------------------------------------------------
// Crossing a field of wandering obstacles.  The agent walks toward an exit
// corner while obstacles random-walk independently of it; corner safety
// zones absorb obstacles that touch them.  A step collides when agent and
// obstacle land on the same cell or swap cells.  Danger values are per-step
// collision probabilities and transitions are conditioned on survival, so
// accident-mode threat tables are exact collision probabilities; sampled
// episodes draw the obstacle moves directly and detect collisions exactly.
//
// The same model is exposed three ways: per-obstacle subsystem models
// (agent x one obstacle) whose threat tables the joint policy composes, a
// full joint model when the obstacle count keeps it small, and a sampling
// simulator for any obstacle count.

struct JamConfig {
    int width = 5;
    int height = 5;
    int exit_x = 4, exit_y = 0;
    int agent_x = 0, agent_y = 4;
    std::vector<std::array<int, 2>> obstacles;
    std::vector<std::uint8_t> obstacle_immobile; // optional, one flag per obstacle
    std::vector<std::array<int, 2>> zones;       // default: the non-exit corners
    bool default_zones = true;
    bool momentum = false; // adds velocity in {-1,0,1}^2 to agent and obstacles
    int horizon = 15;
    double gamma = 1.0;
    double beta = 0.95;
    double goal_reward = 10.0;
    double stop_penalty = -0.05;
    double collision_penalty = -50.0;
    double shaping_weight = 1.0; // per unit of exit-distance decrease
};

struct JamStep {
    double reward = 0.0;
    bool collided = false;
    bool reached_exit = false;
};

class JamEnv {
  public:
    explicit JamEnv(JamConfig cfg);

    const JamConfig& config() const { return cfg_; }
    int n_actions() const { return n_actions_; }
    int n_agent_states() const { return n_agent_; } // motion states, no terminal
    int n_obstacle_states() const { return n_obstacle_; }

    // Subsystem model for obstacle n: states are (agent motion state,
    // obstacle state) pairs plus one terminal, rewards are zero, danger is
    // the per-step collision probability with that obstacle.  All mobile
    // obstacles share the same tables; only the start state differs.
    Cmdp subsystem_cmdp(int n) const;
    int subsystem_state(int agent_state, int obstacle_state) const;

    // Joint model over all obstacles; throws when the state space would
    // exceed max_states.
    Cmdp joint_cmdp(std::size_t max_states = 200000) const;
    int joint_state(int agent_state, std::span<const int> obstacle_states) const;
    void decode_joint(int s, int& agent_state, std::vector<int>& obstacle_states) const;

    // Lift an agent-state policy table (n_agent x actions, one slice per
    // step) onto the joint or subsystem state space.
    Policy lift_agent_policy(const Policy& agent_pi, int n_states_target) const;

    // Threat tables computed directly from the factored dynamics for a
    // policy that reads only the agent state.  They match the dense models'
    // indexing and values entry for entry, but skip materializing the
    // transition array, which stops fitting in memory once momentum
    // multiplies the state count.
    ThreatTable pair_threat(int n, const Policy& agent_pi,
                            ThreatMode mode = ThreatMode::accident) const;
    ThreatTable joint_threat(const Policy& agent_pi,
                             ThreatMode mode = ThreatMode::accident,
                             std::size_t max_states = 200000) const;

    // States with positive reach probability at each step, all actions
    // allowed, on the joint space.
    std::vector<std::vector<int>> reachable_joint(std::size_t max_states = 200000) const;

    struct State {
        int agent = 0;              // agent motion state
        std::vector<int> obstacles; // obstacle states
        bool done = false;          // reached the exit
        bool crashed = false;
    };

    State initial_state() const;
    JamStep step(State& st, int action, Rng& rng) const;

    int agent_state_of(int x, int y, int vx = 0, int vy = 0) const;
    int agent_cell_of(int agent_state) const;
    int agent_next_state(int agent_state, int action) const;
    double agent_step_reward(int agent_state, int action) const; // collision-free part
    int obstacle_state_of(int x, int y, int vx = 0, int vy = 0) const;
    int obstacle_gone_state() const { return n_obstacle_ - 1; }
    bool agent_at_exit(int agent_state) const;
    int manhattan_to_exit(int agent_state) const;

  private:
    struct ObstacleOutcome {
        int state = 0; // obstacle state after the move (zones applied)
        int cell = 0;  // cell it lands on this step, -1 once gone
        double prob = 0.0;
    };

    void agent_move(int agent_state, int action, int& next_state, int& next_cell) const;
    // Unconditioned move distribution; outcome cells are pre-zone cells used
    // for collision tests.
    std::vector<ObstacleOutcome> obstacle_moves(int obstacle_state, bool immobile) const;
    bool collides(int a_old_cell, int a_new_cell, int o_old_cell,
                  const ObstacleOutcome& o) const;
    double step_reward(int a_old_cell, int a_new_cell, double collision_prob) const;
    bool is_zone(int cell) const;
    Cmdp pair_cmdp(bool immobile_obstacle, int obstacle_start_state) const;

    JamConfig cfg_;
    int n_actions_ = 0;
    int n_agent_ = 0;
    int n_obstacle_ = 0;
    int exit_cell_ = 0;
    std::vector<std::uint8_t> zone_mask_;
};

// ---------------------------------------------------------------------------
// A one-way corridor whose only hazard sits lead + 1 steps in.  Entering
// looks clean to any planner that scans fewer steps ahead, and once inside
// there is no way back out.  Action 0 waits at the gate, action 1 commits.

Cmdp deep_trap_cmdp(int lead = 2, int horizon = 0);

} // namespace rpmdp
