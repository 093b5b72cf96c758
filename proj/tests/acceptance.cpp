// Acceptance gate for the toolkit.  Each criterion prints exactly one
// PASS/FAIL line; the exit code is the number of failures.  Tolerances and
// runtime budgets are pinned here, not configurable.

#include "rpmdp/baselines.hpp"
#include "rpmdp/cmdp.hpp"
#include "rpmdp/envs.hpp"
#include "rpmdp/experiment.hpp"
#include "rpmdp/oracle.hpp"
#include "rpmdp/planner.hpp"
#include "rpmdp/rng.hpp"
#include "rpmdp/secure.hpp"
#include "rpmdp/sim.hpp"
#include "rpmdp/threat.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

using namespace rpmdp;

namespace {

constexpr double kOracleTol = 1e-10;  // criteria 1, 5
constexpr double kSafetyTol = 1e-10;  // criteria 2, 4
constexpr double kSymTol = 1e-10;     // criterion 8
constexpr double kMpcRatio = 10.0;    // criterion 6c
constexpr int kSeeds = 10;            // criterion 6

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string str(const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Solver tables vs brute-force trajectory enumeration.

Outcome oracle_equivalence() {
    const int kModels = 200;
    double max_err = 0.0;
    for (int i = 0; i < kModels; ++i) {
        RandomCmdpConfig cfg;
        cfg.n_states = 2 + i % 5;
        cfg.n_actions = 1 + i % 3;
        cfg.horizon = 1 + i % 5;
        cfg.gamma = i % 4 == 0 ? 1.0 : 0.95;
        cfg.beta = i % 3 == 0 ? 0.0 : (i % 3 == 1 ? 0.7 : 0.97);
        cfg.hazard_density = 0.1 + 0.2 * (i % 4);
        cfg.uniform_initial = i % 2 == 1;
        cfg.seed = 1000 + static_cast<std::uint64_t>(i);
        const Cmdp m = random_cmdp(cfg);
        const Policy pi =
            random_policy(m.horizon, m.n_states, m.n_actions, 77 + static_cast<std::uint64_t>(i));
        const ThreatTable disc = compute_threat(m, pi, ThreatMode::discounted);
        const ThreatTable acc = compute_accident_threat(m, pi);
        for (int t = 0; t < m.horizon; ++t)
            for (int s = 0; s < m.n_states; ++s)
                for (int a = 0; a < m.n_actions; ++a) {
                    const double od =
                        enumerate_threat(m, pi, t, s, a, ThreatMode::discounted).value;
                    const double oa =
                        enumerate_threat(m, pi, t, s, a, ThreatMode::accident).value;
                    max_err = std::max(max_err, std::fabs(disc.at(t, s, a) - od));
                    max_err = std::max(max_err, std::fabs(acc.at(t, s, a) - oa));
                }
        max_err = std::max(
            max_err, std::fabs(exact_return(m, pi) - enumerate_return(m, pi).value));
    }
    return {max_err <= kOracleTol,
            str("%d models, max |solver - oracle| = %.2e", kModels, max_err)};
}

// ---------------------------------------------------------------------------
// 2. Every pool member of a certified instance stays within the budget.

Outcome pool_safety_sweep() {
    const int kNeeded = 1000;
    int certified = 0, policies = 0, violations = 0;
    double worst = -1.0; // max threat minus budget over all checked members
    const double budgets[] = {0.1, 0.25, 0.5, 0.8};
    const double betas[] = {0.5, 0.9, 0.99};
    for (int i = 0; certified < kNeeded && i < 20000; ++i) {
        RandomCmdpConfig cfg;
        cfg.n_states = 2 + i % 5;
        cfg.n_actions = 2 + i % 2;
        cfg.horizon = 2 + i % 4;
        cfg.beta = betas[i % 3];
        cfg.hazard_density = 0.1 + 0.1 * (i % 3);
        cfg.uniform_initial = i % 2 == 1;
        cfg.seed = 40000 + static_cast<std::uint64_t>(i);
        const Cmdp m = random_cmdp(cfg);
        const double c = budgets[i % 4];
        const MinThreatResult base = min_threat_policy(m);
        const double x = secure_threshold(c, m.beta, m.horizon);
        bool gate = true;
        for (int s0 = 0; s0 < m.n_states && gate; ++s0)
            if (m.initial[s0] > 0.0) gate = base.table.state_value(0, s0) <= x;
        if (!gate) continue;
        ++certified;
        const SecureSet secure =
            build_secure_set(base.table, std::vector<double>(m.horizon, x));
        std::vector<Policy> members;
        for (int k = 0; k < 3; ++k)
            members.push_back(
                sample_pool_policy(secure, 900 + 7 * static_cast<std::uint64_t>(i) + k));
        members.push_back(solve_restricted(m, secure).policy);
        for (const Policy& pi : members) {
            const ThreatTable tp = compute_threat(m, pi, ThreatMode::discounted);
            ++policies;
            for (int s0 = 0; s0 < m.n_states; ++s0) {
                if (m.initial[s0] == 0.0) continue;
                const double excess = tp.state_value(0, s0) - c;
                worst = std::max(worst, excess);
                if (excess > kSafetyTol) ++violations;
            }
        }
    }
    return {certified >= kNeeded && violations == 0,
            str("%d certified instances, %d pool members, %d violations, worst "
                "threat-budget gap %.2e",
                certified, policies, violations, worst)};
}

// ---------------------------------------------------------------------------
// 3. Deviation-bound certificates hold, and the bound is near tight.

Cmdp crossing_model(double delta, double big, double beta, int horizon) {
    Cmdp m;
    m.n_states = 2;
    m.n_actions = 2;
    m.horizon = horizon;
    m.gamma = 1.0;
    m.beta = beta;
    m.transition = {
        1.0, 0.0, // home, safe
        0.0, 1.0, // home, bold
        1.0, 0.0, // far, either action returns
        1.0, 0.0,
    };
    m.reward = {0.0, 1.0, 0.0, 0.0};
    m.danger = {0.0, delta, big, big};
    m.initial = {1.0, 0.0};
    return m;
}

Outcome certificate_sweep() {
    const int kNeeded = 1000;
    int done = 0, held = 0;
    const double xs_pool[] = {0.15, 0.3, 0.6};
    for (int i = 0; done < kNeeded && i < 20000; ++i) {
        RandomCmdpConfig cfg;
        cfg.n_states = 2 + i % 5;
        cfg.n_actions = 2 + i % 2;
        cfg.horizon = 2 + i % 4;
        cfg.beta = i % 2 == 0 ? 0.85 : 0.99;
        cfg.hazard_density = 0.1 + 0.1 * (i % 3);
        cfg.seed = 70000 + static_cast<std::uint64_t>(i);
        const Cmdp m = random_cmdp(cfg);
        const ThreatMode mode =
            i % 2 == 0 ? ThreatMode::discounted : ThreatMode::accident;
        const Policy eta = i % 3 == 0
                               ? random_policy(m.horizon, m.n_states, m.n_actions,
                                               500 + static_cast<std::uint64_t>(i))
                               : min_threat_policy(m, mode).policy;
        const ThreatTable threat = compute_threat(m, eta, mode);
        const double x = xs_pool[i % 3];
        const SecureSet secure =
            build_secure_set(threat, std::vector<double>(m.horizon, x));
        const Policy pi =
            sample_pool_policy(secure, 1300 + static_cast<std::uint64_t>(i));
        for (int s0 = 0; s0 < m.n_states; ++s0) {
            if (m.initial[s0] == 0.0) continue;
            try {
                const BoundCertificate cert =
                    certify_bound(m, eta, pi, secure, threat, s0);
                ++done;
                if (cert.holds) ++held;
            } catch (const PreconditionViolation&) {
                // preconditions not met; the triple does not count
            }
        }
    }

    // Constructed near-tightness witness: the crossing chain meets the bound
    // with equality at even horizons.
    const Cmdp m = crossing_model(0.1, 1.0, 0.5, 6);
    const Policy eta = Policy::deterministic(
        m.horizon, m.n_states, m.n_actions,
        std::vector<int>(static_cast<std::size_t>(m.horizon) * m.n_states, 0));
    const ThreatTable threat = compute_threat(m, eta);
    const double x = 0.5 * 0.1 + 0.5 * 0.5 * 1.0;
    const SecureSet secure = build_secure_set(threat, std::vector<double>(m.horizon, x));
    std::vector<int> acts(static_cast<std::size_t>(m.horizon) * m.n_states, 0);
    for (int t = 0; t < m.horizon; ++t) acts[t * m.n_states] = 1;
    const Policy bold = Policy::deterministic(m.horizon, m.n_states, m.n_actions, acts);
    const BoundCertificate tight = certify_bound(m, eta, bold, secure, threat, 0);
    const double gap = tight.rhs - tight.lhs;
    const bool tight_ok =
        tight.holds && tight.rhs > 0.0 && gap >= -1e-12 && gap < 0.1 * tight.rhs;

    return {done >= kNeeded && held == done && tight_ok,
            str("%d certified triples, %d hold; tight instance gap %.2e (%.1f%% of "
                "rhs)",
                done, held, gap, 100.0 * gap / tight.rhs)};
}

// ---------------------------------------------------------------------------
// 4. Joint accident threat never exceeds the composed per-obstacle sum.

Outcome composition_bound() {
    JamConfig cfg;
    cfg.obstacles = {{2, 2}, {3, 1}};
    const JamEnv env(cfg);
    const Policy eta =
        Policy::uniform(cfg.horizon, env.n_agent_states(), env.n_actions());
    const ThreatTable joint = env.joint_threat(eta);
    const ThreatTable pair0 = env.pair_threat(0, eta);
    const ThreatTable pair1 = env.pair_threat(1, eta);
    const auto reach = env.reachable_joint();
    const int terminal = joint.n_states - 1;
    long long points = 0, violations = 0;
    double max_excess = -1.0;
    int agent = 0;
    std::vector<int> obstacles;
    for (int t = 0; t < cfg.horizon; ++t)
        for (const int s : reach[t]) {
            if (s == terminal) continue;
            env.decode_joint(s, agent, obstacles);
            for (int a = 0; a < env.n_actions(); ++a) {
                const double composed =
                    pair0.at(t, env.subsystem_state(agent, obstacles[0]), a) +
                    pair1.at(t, env.subsystem_state(agent, obstacles[1]), a);
                const double excess = joint.at(t, s, a) - composed;
                max_excess = std::max(max_excess, excess);
                if (excess > kSafetyTol) ++violations;
                ++points;
            }
        }
    return {points >= 10000 && violations == 0,
            str("%lld reachable (t,state,action) points, %lld violations, max "
                "joint-composed gap %.2e",
                points, violations, max_excess)};
}

// ---------------------------------------------------------------------------
// 5. Restricted-model returns equal base-model returns for pool policies.

Outcome restricted_model_equivalence() {
    const int kNeeded = 100;
    int done = 0;
    double max_err = 0.0;
    for (int i = 0; done < kNeeded && i < 2000; ++i) {
        RandomCmdpConfig cfg;
        cfg.n_states = 3 + i % 4;
        cfg.n_actions = 2 + i % 2;
        cfg.horizon = 2 + i % 4;
        cfg.hazard_density = 0.15;
        cfg.seed = 90000 + static_cast<std::uint64_t>(i);
        const Cmdp m = random_cmdp(cfg);
        const MinThreatResult base = min_threat_policy(m);
        const double x = secure_threshold(0.3 + 0.1 * (i % 3), m.beta, m.horizon);
        const SecureSet secure =
            build_secure_set(base.table, std::vector<double>(m.horizon, x));
        bool usable = true;
        for (int s0 = 0; s0 < m.n_states && usable; ++s0)
            if (m.initial[s0] > 0.0) usable = secure.is_secure(s0);
        if (!usable) continue;
        const Pmdp p = build_pmdp(m, secure, base.table);
        for (int k = 0; k < 5 && done < kNeeded; ++k) {
            const Policy pi = sample_pool_policy(
                secure, 4200 + 11 * static_cast<std::uint64_t>(i) + k);
            max_err = std::max(
                max_err, std::fabs(pmdp_exact_return(p, pi) - exact_return(m, pi)));
            ++done;
        }
    }
    return {done >= kNeeded && max_err <= kOracleTol,
            str("%d pool policies, max |restricted - base| = %.2e", done, max_err)};
}

// ---------------------------------------------------------------------------
// 6. Directional experiment contrasts, 10 seeds each, Wilson intervals.

struct Pooled {
    long long crashes = 0;
    long long episodes = 0;
    WilsonInterval ci;
    double decision_ns = 0.0;
    double crash_rate() const {
        return episodes ? static_cast<double>(crashes) / static_cast<double>(episodes)
                        : 0.0;
    }
};

template <typename MakeAgent>
Pooled pool_dense(const Cmdp& m, int episodes, MakeAgent make) {
    Pooled p;
    std::vector<double> medians;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        auto agent = make(seed);
        const EvalResult r = evaluate(
            m, agent, {.episodes = episodes, .seed = static_cast<std::uint64_t>(seed)});
        p.crashes += r.crashes;
        p.episodes += r.episodes;
        medians.push_back(r.decision_ns_median);
    }
    std::sort(medians.begin(), medians.end());
    p.decision_ns = medians[medians.size() / 2];
    p.ci = wilson_interval(p.crashes, p.episodes);
    return p;
}

template <typename MakeAgent>
Pooled pool_jam(const JamEnv& env, int episodes, MakeAgent make) {
    Pooled p;
    std::vector<double> medians;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        auto agent = make(seed);
        const EvalResult r = evaluate_jam(
            env, agent,
            {.episodes = episodes, .seed = static_cast<std::uint64_t>(seed)});
        p.crashes += r.crashes;
        p.episodes += r.episodes;
        medians.push_back(r.decision_ns_median);
    }
    std::sort(medians.begin(), medians.end());
    p.decision_ns = medians[medians.size() / 2];
    p.ci = wilson_interval(p.crashes, p.episodes);
    return p;
}

std::string ci_str(const Pooled& p) {
    return str("%lld/%lld ci[%.3f, %.3f]", p.crashes, p.episodes, p.ci.lo, p.ci.hi);
}

Outcome directional_contrasts() {
    std::string detail;
    bool pass = true;
    const int kEpisodes = 30;

    // 6a circuit: reward is progress only, so the penalty weight is the
    // learner's sole crash deterrent, mirroring the constrained-vs-penalized
    // contrast.  The planner's safety comes from the danger budget instead.
    {
        CircuitConfig cfg;
        cfg.layout = ring_layout(12, 7, 2);
        cfg.crash_penalty = 0.0;
        const CircuitEnv circuit = grid_circuit(cfg);
        const Cmdp& m = circuit.cmdp;
        const SafetySpec spec{0.05, ThreatMode::discounted};
        const RpSolution sol = rp_solve(m, spec);
        const Pooled rp = pool_dense(m, kEpisodes, [&](int) {
            return PolicyAgent(sol.policy);
        });
        std::vector<Policy> learned;
        for (int seed = 1; seed <= kSeeds; ++seed)
            learned.push_back(
                penalized_q_learn(m, 0.05, 4000, 88000 + static_cast<std::uint64_t>(seed))
                    .policy);
        const Pooled q = pool_dense(m, kEpisodes, [&](int seed) {
            return PolicyAgent(learned[seed - 1]);
        });
        const bool ok = sol.certified && rp.crashes == 0 && q.crashes > 0;
        pass = pass && ok;
        detail += str("\n    6a circuit: rp %s, penalized-q(0.05) %s",
                      ci_str(rp).c_str(), ci_str(q).c_str());
    }

    // 6a obstacle field: two parked obstacles seal both approaches to the
    // exit, so crossing one is the reward optimum; same penalty logic,
    // collision cost zeroed out of the reward.
    JamConfig jam_cfg;
    jam_cfg.height = 2;
    jam_cfg.agent_x = 0;
    jam_cfg.agent_y = 1;
    jam_cfg.obstacles = {{3, 0}, {4, 1}};
    jam_cfg.obstacle_immobile = {1, 1};
    jam_cfg.default_zones = false;
    jam_cfg.collision_penalty = 0.0;
    const JamEnv jam(jam_cfg);
    {
        const double x = accident_threshold(0.1, jam_cfg.horizon, 1.0);
        const Policy blind =
            Policy::uniform(jam_cfg.horizon, jam.n_agent_states(), jam.n_actions());
        const ThreatTable pair0 = jam.pair_threat(0, blind);
        const ThreatTable pair1 = jam.pair_threat(1, blind);
        const std::vector<const ThreatTable*> tables = {&pair0, &pair1};
        const Pooled rp = pool_jam(jam, kEpisodes, [&](int) {
            return JamComposedAgent(jam, tables, x);
        });
        const Cmdp joint = jam.joint_cmdp();
        std::vector<Policy> learned;
        for (int seed = 1; seed <= kSeeds; ++seed)
            learned.push_back(penalized_q_learn(joint, 0.05, 4000,
                                                91000 + static_cast<std::uint64_t>(seed))
                                  .policy);
        const Pooled q = pool_jam(jam, kEpisodes, [&](int seed) {
            return JamPolicyAgent(jam, learned[seed - 1]);
        });
        const bool ok = rp.crashes == 0 && q.crashes > 0;
        pass = pass && ok;
        detail += str("\n    6a field:   rp %s, penalized-q(0.05) %s",
                      ci_str(rp).c_str(), ci_str(q).c_str());
    }

    // 6b transfer: ring reshaped at the same track width and cell count.
    // The planner reuses its baseline and replans on the new geometry; the
    // learner's policy is frozen and indexes the wrong cells.
    {
        CircuitConfig cfg_a;
        cfg_a.layout = ring_layout(12, 7, 2);
        CircuitConfig cfg_b;
        cfg_b.layout = ring_layout(14, 5, 2);
        const Cmdp& a = grid_circuit(cfg_a).cmdp;
        const Cmdp& b = grid_circuit(cfg_b).cmdp;
        const double c = 0.05;
        const SafetySpec spec{c, ThreatMode::discounted};
        const Policy eta_a = min_threat_policy(a).policy;
        RpOptions opts;
        opts.baseline = &eta_a;
        const RpSolution moved = rp_solve(b, spec, opts);
        const Pooled rp = pool_dense(b, kEpisodes, [&](int) {
            return PolicyAgent(moved.policy);
        });
        std::vector<Policy> frozen;
        for (int seed = 1; seed <= kSeeds; ++seed)
            frozen.push_back(penalized_q_learn(a, 0.5, 8000,
                                               95000 + static_cast<std::uint64_t>(seed))
                                 .policy);
        const Pooled q = pool_dense(b, kEpisodes, [&](int seed) {
            return PolicyAgent(frozen[seed - 1]);
        });
        const bool ok =
            moved.certified && rp.crash_rate() <= c && q.crash_rate() > c;
        pass = pass && ok;
        detail += str("\n    6b reshape: rp %s (budget %.2f), frozen-q %s",
                      ci_str(rp).c_str(), c, ci_str(q).c_str());
    }

    // 6c per-decision cost on a full-branching model: the planner answers
    // from its table while the lookahead search re-expands the tree.
    {
        RandomCmdpConfig cfg;
        cfg.n_states = 20;
        cfg.n_actions = 5;
        cfg.horizon = 12;
        cfg.hazard_density = 0.2;
        cfg.seed = 424242;
        const Cmdp m = random_cmdp(cfg);
        const SafetySpec spec{0.5, ThreatMode::discounted};
        const RpSolution sol = rp_solve(m, spec);
        const double cap = secure_threshold(spec.budget, m.beta, m.horizon);
        const Pooled rp = pool_dense(m, kEpisodes, [&](int) {
            return PolicyAgent(sol.policy);
        });
        const Pooled mpc = pool_dense(m, kEpisodes, [&](int) {
            return MpcAgent(m, 3, cap, ThreatMode::discounted);
        });
        const double ratio = mpc.decision_ns / std::max(rp.decision_ns, 1.0);
        const bool ok = ratio >= kMpcRatio;
        pass = pass && ok;
        detail += str("\n    6c cost:    rp %.0f ns/decision, mpc(k=3) %.0f "
                      "ns/decision, ratio %.1fx",
                      rp.decision_ns, mpc.decision_ns, ratio);
    }

    // 6d deep trap: the lure pays off inside a 2-step lookahead while the
    // catastrophe sits just beyond it; full-horizon threat sees through.
    {
        const Cmdp m = deep_trap_cmdp(2);
        const SafetySpec spec{0.2, ThreatMode::discounted};
        const RpSolution sol = rp_solve(m, spec);
        const double cap = secure_threshold(spec.budget, m.beta, m.horizon);
        const Pooled rp = pool_dense(m, kEpisodes, [&](int) {
            return PolicyAgent(sol.policy);
        });
        const Pooled mpc = pool_dense(m, kEpisodes, [&](int) {
            return MpcAgent(m, 2, cap, ThreatMode::discounted);
        });
        const bool ok = rp.crashes == 0 && mpc.crashes > 0;
        pass = pass && ok;
        detail += str("\n    6d trap:    rp %s, mpc(k=2) %s", ci_str(rp).c_str(),
                      ci_str(mpc).c_str());
    }

    return {pass, detail};
}

// ---------------------------------------------------------------------------
// 7. Pointwise threat dominance shrinks the kept action sets.

Outcome secure_monotonicity() {
    const int kPairs = 500;
    int checked = 0, breaks = 0;
    for (int i = 0; i < kPairs; ++i) {
        Rng rng(Rng::derive(606060, static_cast<std::uint64_t>(i)));
        ThreatTable lo;
        lo.horizon = 1 + static_cast<int>(rng.next_int(5));
        lo.n_states = 1 + static_cast<int>(rng.next_int(6));
        lo.n_actions = 1 + static_cast<int>(rng.next_int(4));
        const std::size_t cells = static_cast<std::size_t>(lo.horizon) * lo.n_states *
                                  lo.n_actions;
        lo.values.resize(cells);
        lo.state_values.assign(static_cast<std::size_t>(lo.horizon) * lo.n_states, 0.0);
        ThreatTable hi = lo;
        for (std::size_t k = 0; k < cells; ++k) {
            lo.values[k] = rng.next_double();
            hi.values[k] = lo.values[k] + 0.3 * rng.next_double();
        }
        std::vector<double> xs(lo.horizon);
        for (double& x : xs) x = rng.next_double();
        const SecureSet keep_lo = build_secure_set(lo, xs);
        const SecureSet keep_hi = build_secure_set(hi, xs);
        for (int s = 0; s < lo.n_states; ++s) {
            if (keep_hi.is_secure(s) && !keep_lo.is_secure(s)) ++breaks;
            for (int a = 0; a < lo.n_actions; ++a) {
                ++checked;
                if (keep_hi.action_secure(s, a) && !keep_lo.action_secure(s, a))
                    ++breaks;
            }
        }
    }
    return {breaks == 0,
            str("%d table pairs, %d kept-set inclusions checked, %d monotonicity "
                "breaks",
                kPairs, checked, breaks)};
}

// ---------------------------------------------------------------------------
// 8. Threat maps move with the agent's motion state and keep the mirror
// symmetry of a symmetric field.

Outcome heatmap_sanity() {
    JamConfig cfg;
    cfg.exit_x = 2;
    cfg.exit_y = 0;
    cfg.agent_x = 2;
    cfg.agent_y = 4;
    cfg.obstacles = {{2, 2}};
    cfg.momentum = true;
    cfg.horizon = 10;
    const JamEnv env(cfg);
    const Policy eta =
        Policy::uniform(cfg.horizon, env.n_agent_states(), env.n_actions());
    const ThreatTable pair = env.pair_threat(0, eta);

    auto map_at = [&](int x, int y, int vx, int vy, int t) {
        return threat_heatmap(env, pair, t, env.agent_state_of(x, y, vx, vy));
    };
    auto max_diff = [](const std::vector<double>& a, const std::vector<double>& b) {
        double d = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k)
            d = std::max(d, std::fabs(a[k] - b[k]));
        return d;
    };

    // Non-identity: opposite approach velocities give different fields.
    const double move_right = max_diff(map_at(2, 2, 1, 0, 1), map_at(2, 2, -1, 0, 1));
    const double move_still = max_diff(map_at(2, 2, 1, 0, 1), map_at(2, 2, 0, 0, 1));
    const bool varies = move_right > 1e-6 && move_still > 1e-6;

    // The exit sits on the mirror axis x -> 4 - x, so the whole field is
    // symmetric under it; maps of mirrored motion states must mirror.
    double sym_err = 0.0;
    const int probes[][4] = {
        {2, 4, 0, 0}, {1, 3, 1, 0}, {0, 2, 1, 1}, {3, 1, -1, 0}, {2, 2, 0, -1}};
    for (const auto& p : probes)
        for (const int t : {0, 1, 3}) {
            const auto h = map_at(p[0], p[1], p[2], p[3], t);
            const auto g = map_at(4 - p[0], p[1], -p[2], p[3], t);
            for (int y = 0; y < cfg.height; ++y)
                for (int x = 0; x < cfg.width; ++x)
                    sym_err = std::max(
                        sym_err, std::fabs(h[static_cast<std::size_t>(y) * cfg.width + x] -
                                           g[static_cast<std::size_t>(y) * cfg.width +
                                             (cfg.width - 1 - x)]));
        }
    return {varies && sym_err <= kSymTol,
            str("motion-state deltas %.3g / %.3g, mirror error %.2e", move_right,
                move_still, sym_err)};
}

// ---------------------------------------------------------------------------

struct Criterion {
    const char* name;
    Outcome (*fn)();
    double budget_seconds; // 0 = untimed
};

} // namespace

int main() {
    const Criterion criteria[] = {
        {"oracle equivalence", oracle_equivalence, 60.0},
        {"pool safety sweep", pool_safety_sweep, 300.0},
        {"deviation certificates", certificate_sweep, 300.0},
        {"threat composition", composition_bound, 600.0},
        {"restricted-model equivalence", restricted_model_equivalence, 0.0},
        {"directional contrasts", directional_contrasts, 0.0},
        {"secure-set monotonicity", secure_monotonicity, 0.0},
        {"heatmap sanity", heatmap_sanity, 0.0},
    };
    int failures = 0;
    int index = 0;
    for (const Criterion& c : criteria) {
        ++index;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        if (c.budget_seconds > 0.0 && secs > c.budget_seconds) {
            out.pass = false;
            out.detail += str(" [over %.0fs budget]", c.budget_seconds);
        }
        if (!out.pass) ++failures;
        std::printf("criterion %d (%s): %s [%.1fs] %s\n", index, c.name,
                    out.pass ? "PASS" : "FAIL", secs, out.detail.c_str());
    }
    return failures;
}
