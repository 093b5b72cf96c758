#include "rpmdp/envs.hpp"
#include "rpmdp/experiment.hpp"

#include <doctest.h>

#include <cmath>

using namespace rpmdp;

namespace {

// One state, one action, self loop: reward 1 and danger 0.7 every step.
Cmdp hazard_loop() {
    Cmdp m;
    m.n_states = 1;
    m.n_actions = 1;
    m.horizon = 3;
    m.gamma = 1.0;
    m.beta = 0.5;
    m.transition = {1.0};
    m.reward = {1.0};
    m.danger = {0.7};
    m.initial = {1.0};
    return m;
}

} // namespace

TEST_CASE("wilson interval matches hand-computed endpoints") {
    const auto ci = wilson_interval(3, 10);
    CHECK(ci.lo == doctest::Approx(0.10779).epsilon(1e-3));
    CHECK(ci.hi == doctest::Approx(0.60322).epsilon(1e-3));

    const auto none = wilson_interval(0, 10);
    CHECK(none.lo == 0.0);
    CHECK(none.hi == doctest::Approx(0.27753).epsilon(1e-3));

    const auto all = wilson_interval(10, 10);
    CHECK(all.hi >= 1.0 - 1e-12);
    CHECK(all.lo == doctest::Approx(1.0 - 0.27753).epsilon(1e-2));

    const auto empty = wilson_interval(0, 0);
    CHECK(empty.lo == 0.0);
    CHECK(empty.hi == 1.0);

    // The interval always brackets the point estimate.
    for (int k = 0; k <= 20; ++k) {
        const auto c = wilson_interval(k, 20);
        CHECK(c.lo <= static_cast<double>(k) / 20 + 1e-12);
        CHECK(c.hi >= static_cast<double>(k) / 20 - 1e-12);
    }
}

TEST_CASE("evaluate accumulates weighted reward and danger exactly") {
    const Cmdp m = hazard_loop();
    const Policy pi = Policy::uniform(m.horizon, m.n_states, m.n_actions);
    PolicyAgent agent(pi);

    EvalOptions opts;
    opts.episodes = 7;
    opts.stop_on_accident = false;
    EvalResult res = evaluate(m, agent, opts);
    CHECK(res.episodes == 7);
    CHECK(res.avg_return == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(res.avg_danger ==
          doctest::Approx(0.7 * (0.5 + 0.25 + 0.125)).epsilon(1e-15));
    CHECK(res.crashes == 7); // one accident flag per episode
    CHECK(res.crash_rate == 1.0);
    CHECK(res.decisions == 7 * 3);
    CHECK(res.decision_ns_median >= 1.0);
    CHECK(res.goals == 0);

    opts.stop_on_accident = true;
    res = evaluate(m, agent, opts);
    CHECK(res.avg_return == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(res.avg_danger == doctest::Approx(0.35).epsilon(1e-15));
    CHECK(res.decisions == 7); // stopped on the first step every time
    CHECK(res.crash_ci.lo > 0.5);
    CHECK(res.crash_ci.hi == 1.0);

    opts.accident_threshold = 0.9; // danger 0.7 no longer counts
    res = evaluate(m, agent, opts);
    CHECK(res.crashes == 0);
    CHECK(res.decisions == 7 * 3);
}

TEST_CASE("mpc agents run under the evaluation driver") {
    RandomCmdpConfig cfg;
    cfg.hazard_density = 0.0;
    cfg.seed = 61;
    const Cmdp m = random_cmdp(cfg);
    MpcAgent agent(m, 2, 1.0, ThreatMode::discounted);
    EvalOptions opts;
    opts.episodes = 5;
    const EvalResult res = evaluate(m, agent, opts);
    CHECK(res.crashes == 0);
    CHECK(res.decisions == 5 * m.horizon);
    CHECK(agent.stats().branch_evaluations > 0);
}

TEST_CASE("composed agent filters threats and settles ties safely") {
    JamConfig cfg;
    cfg.width = 3;
    cfg.height = 3;
    cfg.exit_x = 2;
    cfg.exit_y = 0;
    cfg.agent_x = 0;
    cfg.agent_y = 2;
    cfg.obstacles = {{0, 1}}; // parked directly north of the agent
    cfg.obstacle_immobile = {1};
    cfg.horizon = 6;
    const JamEnv env(cfg);
    const Policy uniform =
        Policy::uniform(cfg.horizon, env.n_agent_states(), env.n_actions());
    const ThreatTable table = env.pair_threat(0, uniform);
    EvalOptions opts;
    opts.episodes = 4;
    const int north = 1, east = 3;
    Rng rng(2);

    // A threshold below certainty removes the step into the parked obstacle;
    // equally shaped routes tie on reward, and the tie goes to the lower
    // composed threat, away from the obstacle.
    JamComposedAgent careful(env, {&table}, 0.6);
    CHECK(careful.act(0, env.initial_state(), rng) == east);
    EvalResult res = evaluate_jam(env, careful, opts);
    CHECK(res.crashes == 0);
    CHECK(res.goals == 4);
    CHECK(res.avg_return == doctest::Approx(14.0));
    CHECK(res.crash_ci.lo == 0.0);
    CHECK(res.avg_danger == res.crash_rate);
    CHECK(res.decisions == 4 * 4); // four moves per episode, no dawdling

    // An impossible threshold forbids everything; the agent falls back to
    // the least-threatening action, never the certain collision.
    JamComposedAgent cornered(env, {&table}, -1.0);
    CHECK(cornered.act(0, env.initial_state(), rng) == east);
    res = evaluate_jam(env, cornered, opts);
    CHECK(res.crashes == 0);
    for (int t = 0; t < cfg.horizon; ++t) {
        JamEnv::State st = env.initial_state();
        CHECK(cornered.act(t, st, rng) != north);
    }

    // A policy agent on the joint model drives the same simulator.
    const Cmdp joint = env.joint_cmdp();
    const Policy blind = env.lift_agent_policy(uniform, joint.n_states);
    JamPolicyAgent wanderer(env, blind);
    res = evaluate_jam(env, wanderer, opts);
    CHECK(res.crashes + res.goals <= opts.episodes);
    CHECK(res.crash_ci.lo <= res.crash_rate);
    CHECK(res.crash_rate <= res.crash_ci.hi);
}

TEST_CASE("composed agent wants one table per obstacle") {
    JamConfig cfg;
    cfg.width = 3;
    cfg.height = 3;
    cfg.exit_x = 2;
    cfg.exit_y = 0;
    cfg.agent_x = 0;
    cfg.agent_y = 2;
    cfg.obstacles = {{2, 1}, {1, 1}};
    cfg.horizon = 4;
    const JamEnv env(cfg);
    const Policy uniform =
        Policy::uniform(cfg.horizon, env.n_agent_states(), env.n_actions());
    const ThreatTable table = env.pair_threat(0, uniform);
    CHECK_THROWS(JamComposedAgent(env, {&table}, 0.5));
}

TEST_CASE("heatmap rendering is a fixed-width grid") {
    JamConfig cfg;
    cfg.width = 4;
    cfg.height = 3;
    cfg.exit_x = 3;
    cfg.exit_y = 0;
    cfg.agent_x = 0;
    cfg.agent_y = 2;
    cfg.obstacles = {{2, 1}};
    cfg.horizon = 5;
    const JamEnv env(cfg);
    const Policy uniform =
        Policy::uniform(cfg.horizon, env.n_agent_states(), env.n_actions());
    const ThreatTable table = env.pair_threat(0, uniform);
    const auto heat = threat_heatmap(env, table, 0, env.agent_state_of(0, 2));
    REQUIRE(heat.size() == 12);
    for (double v : heat) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    const std::string grid = render_heatmap(env, heat);
    int lines = 0;
    for (char ch : grid) lines += ch == '\n';
    CHECK(lines == cfg.height);
    const std::size_t first = grid.find('\n');
    CHECK(first == 4 * 6 + 3); // four cells, three separators
}
