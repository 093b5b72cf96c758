#include "rpmdp/envs.hpp"
#include "rpmdp/experiment.hpp"
#include "rpmdp/threat.hpp"

#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

using namespace rpmdp;

namespace {

// 3x3 field, exit top-right, agent bottom-left, one wanderer mid-right.
// Default zones are the three non-exit corners.
JamConfig small_cfg() {
    JamConfig cfg;
    cfg.width = 3;
    cfg.height = 3;
    cfg.exit_x = 2;
    cfg.exit_y = 0;
    cfg.agent_x = 0;
    cfg.agent_y = 2;
    cfg.obstacles = {{2, 1}};
    cfg.horizon = 6;
    return cfg;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b,
                 double tol) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    CHECK(worst <= tol);
}

} // namespace

TEST_CASE("config validation rejects inconsistent fields") {
    auto cfg = small_cfg();
    cfg.obstacles = {{0, 2}};
    CHECK_THROWS(JamEnv(cfg)); // agent's corner, also a zone

    cfg = small_cfg();
    cfg.obstacles = {{0, 0}};
    CHECK_THROWS(JamEnv(cfg)); // default zones sit on the non-exit corners

    cfg = small_cfg();
    cfg.agent_x = cfg.exit_x;
    cfg.agent_y = cfg.exit_y;
    CHECK_THROWS(JamEnv(cfg));

    cfg = small_cfg();
    cfg.obstacle_immobile = {1, 0};
    CHECK_THROWS(JamEnv(cfg)); // one flag per obstacle

    cfg = small_cfg();
    cfg.obstacles = {{3, 1}};
    CHECK_THROWS(JamEnv(cfg));
}

TEST_CASE("subsystem and single-obstacle joint models share dynamics") {
    const JamEnv env(small_cfg());
    const Cmdp sub = env.subsystem_cmdp(0);
    const Cmdp joint = env.joint_cmdp();
    CHECK(validate(sub).ok);
    CHECK(validate(joint).ok);
    REQUIRE(sub.n_states == joint.n_states);
    check_close(sub.transition, joint.transition, 1e-15);
    check_close(sub.danger, joint.danger, 1e-15);
    CHECK(sub.initial == joint.initial);
    // The subsystem strips rewards; the joint model keeps the task's.
    bool joint_has_reward = false;
    for (double r : joint.reward) joint_has_reward |= r != 0.0;
    CHECK(joint_has_reward);
    for (double r : sub.reward) CHECK(r == 0.0);
}

TEST_CASE("factored threat tables match the dense models") {
    JamConfig cfg = small_cfg();
    cfg.obstacles = {{2, 1}, {1, 1}};
    cfg.obstacle_immobile = {0, 1};
    const JamEnv env(cfg);
    const Policy agent_pi =
        random_policy(cfg.horizon, env.n_agent_states(), env.n_actions(), 21);

    for (const ThreatMode mode : {ThreatMode::accident, ThreatMode::discounted}) {
        for (int n = 0; n < 2; ++n) {
            const Cmdp sub = env.subsystem_cmdp(n);
            const ThreatTable dense = compute_threat(
                sub, env.lift_agent_policy(agent_pi, sub.n_states), mode);
            const ThreatTable sparse = env.pair_threat(n, agent_pi, mode);
            REQUIRE(sparse.n_states == dense.n_states);
            check_close(sparse.values, dense.values, 1e-12);
            check_close(sparse.state_values, dense.state_values, 1e-12);
        }
        const Cmdp joint = env.joint_cmdp();
        const ThreatTable dense = compute_threat(
            joint, env.lift_agent_policy(agent_pi, joint.n_states), mode);
        const ThreatTable sparse = env.joint_threat(agent_pi, mode);
        REQUIRE(sparse.n_states == dense.n_states);
        check_close(sparse.values, dense.values, 1e-12);
        check_close(sparse.state_values, dense.state_values, 1e-12);
    }
}

TEST_CASE("model collision probabilities match the sampling simulator") {
    const JamEnv env(small_cfg());
    const Cmdp joint = env.joint_cmdp();
    const Policy agent_pi =
        random_policy(joint.horizon, env.n_agent_states(), env.n_actions(), 5);
    const ThreatTable threat =
        compute_accident_threat(joint, env.lift_agent_policy(agent_pi, joint.n_states));
    int s0 = 0;
    for (int s = 0; s < joint.n_states; ++s)
        if (joint.initial[s] > 0.0) s0 = s;
    const double predicted = threat.state_value(0, s0);
    CHECK(predicted > 0.0);

    // Drive the true process with the same agent behaviour.
    const int episodes = 40000;
    int collisions = 0;
    for (int ep = 0; ep < episodes; ++ep) {
        Rng rng = Rng::derive(909, ep);
        JamEnv::State st = env.initial_state();
        for (int t = 0; t < joint.horizon && !st.done && !st.crashed; ++t) {
            const int a = rng.sample(agent_pi.row(t, st.agent));
            env.step(st, a, rng);
        }
        if (st.crashed) ++collisions;
    }
    const double observed = static_cast<double>(collisions) / episodes;
    const double se = std::sqrt(predicted * (1.0 - predicted) / episodes);
    CHECK(std::abs(observed - predicted) <= 4.0 * se + 1e-9);
}

TEST_CASE("the joint threat never exceeds the composed subsystem sum") {
    JamConfig cfg = small_cfg();
    cfg.obstacles = {{2, 1}, {1, 1}};
    const JamEnv env(cfg);
    const Policy agent_pi =
        Policy::uniform(cfg.horizon, env.n_agent_states(), env.n_actions());
    const ThreatTable joint_threat = env.joint_threat(agent_pi);
    const ThreatTable sub_threat = env.pair_threat(0, agent_pi);

    int checked = 0;
    int agent = 0;
    std::vector<int> obs;
    for (int s = 0; s + 1 < joint_threat.n_states; ++s) {
        env.decode_joint(s, agent, obs);
        for (int t = 0; t < cfg.horizon; ++t)
            for (int a = 0; a < env.n_actions(); ++a) {
                double total = 0.0;
                for (int n = 0; n < 2; ++n)
                    total += sub_threat.at(t, env.subsystem_state(agent, obs[n]), a);
                CHECK(joint_threat.at(t, s, a) <= std::min(1.0, total) + 1e-10);
                ++checked;
            }
    }
    CHECK(checked > 10000);
}

TEST_CASE("reachability covers the start and respects termination") {
    const JamEnv env(small_cfg());
    const auto reach = env.reachable_joint();
    REQUIRE(static_cast<int>(reach.size()) == env.config().horizon);
    REQUIRE(reach[0].size() == 1);
    int agent = 0;
    std::vector<int> obs;
    env.decode_joint(reach[0][0], agent, obs);
    CHECK(agent == env.agent_state_of(0, 2));
    CHECK(obs[0] == env.obstacle_state_of(2, 1));
    // Growth, then stabilization well below the full product space.
    CHECK(reach[1].size() > reach[0].size());
    const Cmdp joint = env.joint_cmdp();
    for (const auto& layer : reach)
        for (const int s : layer) CHECK(s < joint.n_states);
    // The exit is two steps away, so the terminal state appears from t = 2.
    const int terminal = joint.n_states - 1;
    bool seen = false;
    for (const int s : reach[2]) seen |= s == terminal;
    CHECK(seen);
}

TEST_CASE("safety zones absorb obstacles permanently") {
    const JamEnv env(small_cfg());
    const Cmdp sub = env.subsystem_cmdp(0);
    const int gone = env.obstacle_gone_state();
    for (int as = 0; as < env.n_agent_states(); ++as) {
        if (env.agent_at_exit(as)) continue;
        const int s = env.subsystem_state(as, gone);
        for (int a = 0; a < env.n_actions(); ++a) {
            CHECK(sub.danger[sub.sa(s, a)] == 0.0);
            for (int s2 = 0; s2 + 1 < sub.n_states; ++s2) {
                if (sub.transition[sub.sas(s, a, s2)] == 0.0) continue;
                CHECK(s2 % env.n_obstacle_states() == gone);
            }
        }
    }

    // Empirically, obstacles do get retired.
    int retired = 0;
    for (int ep = 0; ep < 500; ++ep) {
        Rng rng = Rng::derive(31, ep);
        JamEnv::State st = env.initial_state();
        for (int t = 0; t < env.config().horizon && !st.done && !st.crashed; ++t)
            env.step(st, 0, rng);
        if (st.obstacles[0] == gone) ++retired;
    }
    CHECK(retired > 100);
}

TEST_CASE("reaching the exit pays the goal bonus and ends the episode") {
    JamConfig cfg = small_cfg();
    cfg.obstacles = {{1, 1}};
    cfg.obstacle_immobile = {1}; // parked off the walked path
    const JamEnv env(cfg);
    Rng rng(4);
    JamEnv::State st = env.initial_state();
    double total = 0.0;
    const int north = 1, east = 3;
    for (int a : {east, east, north, north}) {
        REQUIRE(!st.done);
        REQUIRE(!st.crashed);
        const JamStep step = env.step(st, a, rng);
        CHECK(!step.collided);
        total += step.reward;
    }
    CHECK(st.done);
    // Shaping telescopes to the initial exit distance, plus the goal bonus.
    CHECK(total == doctest::Approx(4.0 * cfg.shaping_weight + cfg.goal_reward));
    // Steps after the end are no-ops.
    CHECK(env.step(st, east, rng).reward == 0.0);
}

TEST_CASE("immobile obstacles threaten only their own cell") {
    JamConfig cfg = small_cfg();
    cfg.obstacle_immobile = {1};
    const JamEnv env(cfg);
    const Cmdp sub = env.subsystem_cmdp(0);
    const int obs_state = env.obstacle_state_of(2, 1);
    // Far corner: no single move reaches the obstacle, so nothing is risky.
    const int far = env.subsystem_state(env.agent_state_of(0, 2), obs_state);
    for (int a = 0; a < env.n_actions(); ++a) CHECK(sub.danger[sub.sa(far, a)] == 0.0);
    // One cell west of it, stepping east walks straight in.
    const int near = env.subsystem_state(env.agent_state_of(1, 1), obs_state);
    const int east = 3;
    CHECK(sub.danger[sub.sa(near, east)] == 1.0);
    CHECK(sub.danger[sub.sa(near, 0)] == 0.0);
}

TEST_CASE("momentum threat slices move with the agent's velocity") {
    JamConfig cfg;
    cfg.width = 3;
    cfg.height = 3;
    cfg.exit_x = 1;
    cfg.exit_y = 0;
    cfg.agent_x = 1;
    cfg.agent_y = 1;
    cfg.obstacles = {{1, 2}};
    cfg.momentum = true;
    cfg.horizon = 6;
    const JamEnv env(cfg);
    CHECK(env.n_actions() == 9);
    CHECK(env.n_agent_states() == 9 * 9);

    const Policy agent_pi =
        Policy::uniform(cfg.horizon, env.n_agent_states(), env.n_actions());
    const ThreatTable threat = env.pair_threat(0, agent_pi);

    const int resting = env.agent_state_of(1, 1, 0, 0);
    const int moving = env.agent_state_of(1, 1, 1, 0);
    const auto heat_rest = threat_heatmap(env, threat, 0, resting);
    const auto heat_moving = threat_heatmap(env, threat, 0, moving);
    REQUIRE(heat_rest.size() == static_cast<std::size_t>(cfg.width) * cfg.height);

    double shift = 0.0;
    for (std::size_t i = 0; i < heat_rest.size(); ++i)
        shift = std::max(shift, std::abs(heat_rest[i] - heat_moving[i]));
    CHECK(shift > 1e-3);

    // Everything in this layout is mirror symmetric about x = 1, so the
    // resting slice must be too.
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            const double lhs = heat_rest[static_cast<std::size_t>(y) * cfg.width + x];
            const double rhs =
                heat_rest[static_cast<std::size_t>(y) * cfg.width + (cfg.width - 1 - x)];
            CHECK(std::abs(lhs - rhs) <= 1e-10);
        }
}
