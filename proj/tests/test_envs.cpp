#include "rpmdp/envs.hpp"
#include "rpmdp/oracle.hpp"
#include "rpmdp/sim.hpp"
#include "rpmdp/threat.hpp"

#include <doctest.h>

using namespace rpmdp;

TEST_CASE("random models validate and depend on their seed") {
    RandomCmdpConfig cfg;
    cfg.seed = 1;
    const Cmdp a = random_cmdp(cfg);
    CHECK(validate(a).ok);
    cfg.seed = 2;
    const Cmdp b = random_cmdp(cfg);
    CHECK(a.transition != b.transition);
    cfg.seed = 1;
    CHECK(random_cmdp(cfg).transition == a.transition);
}

TEST_CASE("gather layouts parse into configs") {
    const GatherConfig cfg = gather_from_layout({
        "S..",
        ".B.",
        "..A",
    });
    CHECK(cfg.width == 3);
    CHECK(cfg.height == 3);
    CHECK(cfg.start_x == 0);
    CHECK(cfg.start_y == 0);
    REQUIRE(cfg.apples.size() == 1);
    CHECK(cfg.apples[0][0] == 2);
    CHECK(cfg.apples[0][1] == 2);
    REQUIRE(cfg.bombs.size() == 1);

    CHECK_THROWS(gather_from_layout({"..", "..."}));  // ragged
    CHECK_THROWS(gather_from_layout({"..", ".."}));   // no start
    CHECK_THROWS(gather_from_layout({"S.", ".X"}));   // bad character
}

TEST_CASE("the gathering field pays each apple once and charges each bomb entry") {
    GatherConfig cfg = gather_from_layout({
        "S.A",
        "...",
        "B..",
    });
    cfg.horizon = 6;
    cfg.gamma = 1.0;
    cfg.beta = 0.5;
    const GatherEnv env = grid_gather(cfg);
    CHECK(validate(env.cmdp).ok);
    CHECK(env.cmdp.n_states == 9 * 2);

    // March east twice, then sit.  The apple pays on entry at step 2 only.
    const int east = 3, stay = 0;
    std::vector<int> acts(static_cast<std::size_t>(cfg.horizon) * env.cmdp.n_states, stay);
    for (int s = 0; s < env.cmdp.n_states; ++s) {
        acts[0 * env.cmdp.n_states + s] = east;
        acts[1 * env.cmdp.n_states + s] = east;
    }
    const Policy pi =
        Policy::deterministic(cfg.horizon, env.cmdp.n_states, env.cmdp.n_actions, acts);
    CHECK(exact_return(env.cmdp, pi) == doctest::Approx(10.0).epsilon(1e-12));

    // Walking into the wall stays put.
    const int west = 4;
    const int start = env.state_of(0, 0, 0);
    CHECK(env.cmdp.transition[env.cmdp.sas(start, west, start)] == 1.0);

    // Stepping onto the bomb is one unit of danger, weighted beta.
    const int south = 2, north = 1;
    const int above_bomb = env.state_of(0, 1, 0);
    CHECK(env.cmdp.danger[env.cmdp.sa(above_bomb, south)] == 1.0);

    // Lingering on the bomb keeps charging, one beta power per step.
    const Policy sit = Policy::deterministic(
        cfg.horizon, env.cmdp.n_states, env.cmdp.n_actions,
        std::vector<int>(static_cast<std::size_t>(cfg.horizon) * env.cmdp.n_states, stay));
    const auto lingering =
        enumerate_threat(env.cmdp, sit, 0, above_bomb, south, ThreatMode::discounted);
    CHECK(lingering.value == doctest::Approx(1.0 - 1.0 / 64.0).epsilon(1e-12));

    // Stepping straight back off leaves exactly the entry charge.
    std::vector<int> retreat(static_cast<std::size_t>(cfg.horizon) * env.cmdp.n_states, stay);
    for (int s = 0; s < env.cmdp.n_states; ++s) retreat[1 * env.cmdp.n_states + s] = north;
    const Policy back = Policy::deterministic(cfg.horizon, env.cmdp.n_states,
                                              env.cmdp.n_actions, retreat);
    const auto once =
        enumerate_threat(env.cmdp, back, 0, above_bomb, south, ThreatMode::discounted);
    CHECK(once.value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ring layouts close into a loop with consistent progress") {
    const auto rows = ring_layout(8, 6, 2);
    const CircuitEnv env = grid_circuit({.layout = rows});
    CHECK(validate(env.cmdp).ok);
    CHECK(env.n_track_cells == 4 * (8 + 6) - 16);
    CHECK(env.loop_length > 0);
    // Start line: between them the two lanes cover progress 0.
    CHECK(env.cmdp.initial[env.start_state] == 1.0);
}

TEST_CASE("driving into the wall crashes and a stopped car is safe") {
    const CircuitEnv env = grid_circuit({.layout = ring_layout(7, 5, 1), .horizon = 12});
    const Cmdp& m = env.cmdp;

    // Accelerating straight at the outer wall from the start line crashes:
    // the start cell is on the left column, so heading west at any speed
    // leaves the track.
    const int start_cell = env.track_cell_of(env.start_state);
    const int west_state = env.state_of(start_cell, 2, 0);
    const int accel_straight = 3 * 1 + 2; // straight steering, +1 speed
    bool crashes = m.transition[m.sas(west_state, accel_straight, env.crashed_state)] == 1.0;
    CHECK(crashes);
    CHECK(m.danger[m.sa(west_state, accel_straight)] == 1.0);
    CHECK(m.reward[m.sa(west_state, accel_straight)] == doctest::Approx(-200.0));

    // Keeping speed 0 never crashes, so the stop policy has zero threat.
    std::vector<int> stop_acts(static_cast<std::size_t>(m.horizon) * m.n_states, 3 * 1 + 0);
    const Policy stop =
        Policy::deterministic(m.horizon, m.n_states, m.n_actions, stop_acts);
    const ThreatTable threat = compute_accident_threat(m, stop);
    for (int t = 0; t < m.horizon; ++t)
        CHECK(threat.state_value(t, env.start_state) == 0.0);
}

TEST_CASE("a lap accumulates loop_length progress") {
    const CircuitEnv env = grid_circuit({.layout = ring_layout(7, 5, 1), .horizon = 40});
    const Cmdp& m = env.cmdp;
    // Drive at speed 1 and follow the lane greedily: pick any action that
    // keeps a positive-progress, non-crashing transition at speed 1.
    int s = env.start_state;
    double gained = 0.0;
    int steps = 0;
    const int lap_target = env.loop_length;
    while (gained < lap_target && steps < 40) {
        int chosen = -1;
        for (int a = 0; a < 9; ++a) {
            if (a % 3 - 1 + env.speed_of(s) != 1) continue; // hold speed 1
            if (m.danger[m.sa(s, a)] > 0.0) continue;
            if (m.reward[m.sa(s, a)] <= 0.0) continue;
            chosen = a;
            break;
        }
        REQUIRE(chosen >= 0);
        gained += m.reward[m.sa(s, chosen)];
        int s2 = 0;
        for (; s2 < m.n_states; ++s2)
            if (m.transition[m.sas(s, chosen, s2)] == 1.0) break;
        s = s2;
        ++steps;
    }
    CHECK(gained == doctest::Approx(lap_target));
    CHECK(env.track_cell_of(s) == env.track_cell_of(env.start_state));
}

TEST_CASE("the narrow section removes inner-lane cells") {
    const auto open = ring_layout(10, 8, 2);
    const auto pinched = ring_layout(10, 8, 2, 3);
    int blocked = 0;
    for (std::size_t y = 0; y < open.size(); ++y)
        for (std::size_t x = 0; x < open[y].size(); ++x)
            if (open[y][x] != pinched[y][x]) {
                CHECK(pinched[y][x] == '#');
                ++blocked;
            }
    CHECK(blocked == 3);
    const CircuitEnv env = grid_circuit({.layout = pinched});
    CHECK(validate(env.cmdp).ok);
}

TEST_CASE("the trap corridor hides its hazard from shallow scans") {
    const Cmdp m = deep_trap_cmdp();
    CHECK(validate(m).ok);
    const Policy commit = Policy::deterministic(
        m.horizon, m.n_states, m.n_actions,
        std::vector<int>(static_cast<std::size_t>(m.horizon) * m.n_states, 1));
    const ThreatTable threat = compute_accident_threat(m, commit);
    CHECK(threat.at(0, 0, 1) == doctest::Approx(1.0)); // committed means doomed
    // Waiting is only safe while the policy keeps waiting.
    CHECK(threat.at(0, 0, 0) == doctest::Approx(1.0));
    const Policy wait = Policy::deterministic(
        m.horizon, m.n_states, m.n_actions,
        std::vector<int>(static_cast<std::size_t>(m.horizon) * m.n_states, 0));
    const ThreatTable patient = compute_accident_threat(m, wait);
    CHECK(patient.at(0, 0, 0) == 0.0);
    CHECK(patient.at(0, 0, 1) == doctest::Approx(1.0)); // the corridor is one way
    // The first two transitions are clean; the hazard sits on the third.
    CHECK(m.danger[m.sa(0, 1)] == 0.0);
    CHECK(m.danger[m.sa(1, 0)] == 0.0);
    CHECK(m.danger[m.sa(2, 0)] == 1.0);
}
