#include "rpmdp/planner.hpp"

#include "rpmdp/sim.hpp"

#include <cmath>
#include <sstream>

namespace rpmdp {

namespace {

constexpr double kTol = 1e-12;

std::vector<double> gamma_powers(double gamma, int T) {
    std::vector<double> pow(T + 1, 1.0);
    for (int k = 1; k <= T; ++k) pow[k] = pow[k - 1] * gamma;
    return pow;
}

void require_secure_shapes(const Cmdp& m, const SecureSet& secure, const char* who) {
    if (secure.horizon != m.horizon || secure.n_states != m.n_states ||
        secure.n_actions != m.n_actions)
        throw std::invalid_argument(std::string(who) + ": secure set shape mismatch");
}

} // namespace

Pmdp build_pmdp(const Cmdp& m, const SecureSet& secure, const ThreatTable& threat,
                Exec exec) {
    require_secure_shapes(m, secure, "build_pmdp");
    if (!threat.compatible_with(m))
        throw std::invalid_argument("build_pmdp: threat table shape mismatch");

    bool any_secure = false;
    for (int s = 0; s < m.n_states; ++s) any_secure |= secure.is_secure(s);
    if (!any_secure)
        throw std::invalid_argument("build_pmdp: the kept region is empty");
    for (int s = 0; s < m.n_states; ++s)
        if (m.initial[s] > 0.0 && !secure.is_secure(s))
            throw std::invalid_argument(
                "build_pmdp: start distribution puts mass outside the kept region");
    for (int t = 0; t < m.horizon; ++t)
        for (int s = 0; s < m.n_states; ++s) {
            const int fb = secure.fallback_at(t, s);
            for (int a = 0; a < m.n_actions; ++a)
                if (threat.at(t, s, a) < threat.at(t, s, fb) - kTol)
                    throw std::invalid_argument(
                        "build_pmdp: fallback entries do not minimize the threat table");
        }

    Pmdp p;
    p.horizon = m.horizon;
    p.n_states = m.n_states;
    p.n_actions = m.n_actions;
    p.gamma = m.gamma;
    p.secure = secure;
    p.reward = m.reward;
    p.initial = m.initial;
    const std::size_t n_roots =
        static_cast<std::size_t>(m.horizon) * m.n_states * m.n_actions;
    p.arrivals.resize(n_roots);
    p.detour_reward.assign(n_roots, 0.0);
    p.truncation.assign(n_roots, 0.0);

    const std::vector<double> gpow = gamma_powers(m.gamma, m.horizon);
    const int S = m.n_states;
    const int A = m.n_actions;
    const int T = m.horizon;

    // Roots are independent; each walks its own detour mass forward.
    for_each_index(static_cast<long long>(T) * S, exec, [&](long long idx) {
        const int t = static_cast<int>(idx / S);
        const int s = static_cast<int>(idx % S);
        if (!secure.is_secure(s)) return;
        std::vector<double> cur(S), next(S);
        for (int a = 0; a < A; ++a) {
            if (!secure.action_secure(s, a)) continue;
            const std::size_t root = p.root(t, s, a);
            if (t == T - 1) {
                // Last decision; nothing can resume afterwards.
                p.truncation[root] = 1.0;
                continue;
            }
            const auto row = m.row(s, a);
            std::copy(row.begin(), row.end(), cur.begin());
            double detour_r = 0.0;
            double trunc = 0.0;
            auto& arr = p.arrivals[root];
            for (int u = t + 1; u < T; ++u) {
                double remaining = 0.0;
                for (int s2 = 0; s2 < S; ++s2) {
                    const double mass = cur[s2];
                    if (mass == 0.0) continue;
                    if (secure.is_secure(s2)) {
                        arr.push_back({u, s2, mass});
                        cur[s2] = 0.0;
                    } else {
                        remaining += mass;
                    }
                }
                if (remaining == 0.0) break;
                std::fill(next.begin(), next.end(), 0.0);
                for (int s2 = 0; s2 < S; ++s2) {
                    const double mass = cur[s2];
                    if (mass == 0.0) continue;
                    const int fb = secure.fallback_at(u, s2);
                    detour_r += mass * gpow[u + 1] * m.reward[m.sa(s2, fb)];
                    const auto fb_row = m.row(s2, fb);
                    for (int s3 = 0; s3 < S; ++s3) next[s3] += mass * fb_row[s3];
                }
                cur.swap(next);
                if (u + 1 == T)
                    for (int s3 = 0; s3 < S; ++s3) trunc += cur[s3];
            }
            p.detour_reward[root] = detour_r;
            p.truncation[root] = trunc;
        }
    });
    return p;
}

namespace {

// Shared backward pass over the restricted model.  Choose picks an action
// value from the kept-action q-values at (t, s).
template <class Choose>
std::vector<double> pmdp_backward(const Pmdp& p, Choose&& choose) {
    const int T = p.horizon;
    const int S = p.n_states;
    const std::vector<double> gpow = gamma_powers(p.gamma, T);
    // J[(u, s)] for u in [0, T]; only kept states are meaningful.
    std::vector<double> J(static_cast<std::size_t>(T + 1) * S, 0.0);
    std::vector<double> q(p.n_actions);
    for (int t = T - 1; t >= 0; --t)
        for (int s = 0; s < S; ++s) {
            if (!p.secure.is_secure(s)) continue;
            for (int a = 0; a < p.n_actions; ++a) {
                if (!p.secure.action_secure(s, a)) continue;
                const std::size_t root = p.root(t, s, a);
                double v = gpow[t + 1] * p.reward[static_cast<std::size_t>(s) * p.n_actions + a] +
                           p.detour_reward[root];
                for (const DetourOutcome& o : p.arrivals[root])
                    v += o.prob * J[static_cast<std::size_t>(o.arrive_t) * S + o.s2];
                q[a] = v;
            }
            J[static_cast<std::size_t>(t) * S + s] = choose(t, s, q);
        }
    return J;
}

} // namespace

PlanResult solve_pmdp(const Pmdp& p) {
    std::vector<int> actions(static_cast<std::size_t>(p.horizon) * p.n_states, 0);
    const std::vector<double> J = pmdp_backward(
        p, [&](int t, int s, const std::vector<double>& q) {
            int best = -1;
            double best_v = 0.0;
            for (int a = 0; a < p.n_actions; ++a) {
                if (!p.secure.action_secure(s, a)) continue;
                if (best < 0 || q[a] > best_v) {
                    best_v = q[a];
                    best = a;
                }
            }
            actions[static_cast<std::size_t>(t) * p.n_states + s] = best;
            return best_v;
        });

    // Complete the policy: fallback everywhere outside the kept region.
    for (int t = 0; t < p.horizon; ++t)
        for (int s = 0; s < p.n_states; ++s)
            if (!p.secure.is_secure(s))
                actions[static_cast<std::size_t>(t) * p.n_states + s] =
                    p.secure.fallback_at(t, s);

    PlanResult out;
    out.policy = Policy::deterministic(p.horizon, p.n_states, p.n_actions, actions);
    for (int s = 0; s < p.n_states; ++s) out.value += p.initial[s] * J[s];
    return out;
}

double pmdp_exact_return(const Pmdp& p, const Policy& pi) {
    if (pi.horizon != p.horizon || pi.n_states != p.n_states ||
        pi.n_actions != p.n_actions)
        throw std::invalid_argument("pmdp_exact_return: policy shape mismatch");
    for (int t = 0; t < p.horizon; ++t)
        for (int s = 0; s < p.n_states; ++s)
            if (p.secure.is_secure(s))
                for (int a = 0; a < p.n_actions; ++a)
                    if (pi.prob(t, s, a) > 0.0 && !p.secure.action_secure(s, a))
                        throw std::invalid_argument(
                            "pmdp_exact_return: policy leaves the kept action set");

    const std::vector<double> J = pmdp_backward(
        p, [&](int t, int s, const std::vector<double>& q) {
            double v = 0.0;
            for (int a = 0; a < p.n_actions; ++a)
                if (p.secure.action_secure(s, a)) v += pi.prob(t, s, a) * q[a];
            return v;
        });
    double value = 0.0;
    for (int s = 0; s < p.n_states; ++s) value += p.initial[s] * J[s];
    return value;
}

PlanResult solve_restricted(const Cmdp& m, const SecureSet& secure, Exec exec) {
    require_secure_shapes(m, secure, "solve_restricted");
    const int S = m.n_states;
    const int T = m.horizon;
    const std::vector<double> gpow = gamma_powers(m.gamma, T);

    std::vector<double> J_next(S, 0.0); // values at t+1
    std::vector<double> J_cur(S, 0.0);
    std::vector<int> actions(static_cast<std::size_t>(T) * S, 0);
    for (int t = T - 1; t >= 0; --t) {
        int* act_row = actions.data() + static_cast<std::size_t>(t) * S;
        for_each_index(S, exec, [&](long long si) {
            const int s = static_cast<int>(si);
            auto q_of = [&](int a) {
                const auto row = m.row(s, a);
                double v = gpow[t + 1] * m.reward[m.sa(s, a)];
                for (int s2 = 0; s2 < S; ++s2) v += row[s2] * J_next[s2];
                return v;
            };
            if (secure.is_secure(s)) {
                int best = -1;
                double best_v = 0.0;
                for (int a = 0; a < m.n_actions; ++a) {
                    if (!secure.action_secure(s, a)) continue;
                    const double v = q_of(a);
                    if (best < 0 || v > best_v) {
                        best_v = v;
                        best = a;
                    }
                }
                act_row[s] = best;
                J_cur[s] = best_v;
            } else {
                const int fb = secure.fallback_at(t, s);
                act_row[s] = fb;
                J_cur[s] = q_of(fb);
            }
        });
        J_cur.swap(J_next);
    }

    PlanResult out;
    out.policy = Policy::deterministic(T, S, m.n_actions, actions);
    for (int s = 0; s < S; ++s) out.value += m.initial[s] * J_next[s];
    return out;
}

PlanResult backward_induction(const Cmdp& m, Exec exec) {
    const int S = m.n_states;
    const int T = m.horizon;
    const std::vector<double> gpow = gamma_powers(m.gamma, T);

    std::vector<double> J_next(S, 0.0); // values at t+1
    std::vector<double> J_cur(S, 0.0);
    std::vector<int> actions(static_cast<std::size_t>(T) * S, 0);
    for (int t = T - 1; t >= 0; --t) {
        int* act_row = actions.data() + static_cast<std::size_t>(t) * S;
        for_each_index(S, exec, [&](long long si) {
            const int s = static_cast<int>(si);
            int best = 0;
            double best_v = 0.0;
            for (int a = 0; a < m.n_actions; ++a) {
                const auto row = m.row(s, a);
                double v = gpow[t + 1] * m.reward[m.sa(s, a)];
                for (int s2 = 0; s2 < S; ++s2) v += row[s2] * J_next[s2];
                if (a == 0 || v > best_v) {
                    best_v = v;
                    best = a;
                }
            }
            act_row[s] = best;
            J_cur[s] = best_v;
        });
        J_cur.swap(J_next);
    }

    PlanResult out;
    out.policy = Policy::deterministic(T, S, m.n_actions, actions);
    for (int s = 0; s < S; ++s) out.value += m.initial[s] * J_next[s];
    return out;
}

RpSolution rp_solve(const Cmdp& m, const SafetySpec& spec, const RpOptions& opts) {
    require_valid(m);
    if (spec.budget < 0.0)
        throw std::invalid_argument("rp_solve: danger budget must be nonnegative");

    RpSolution sol;
    if (opts.baseline != nullptr) {
        require_compatible(m, *opts.baseline, "rp_solve");
        sol.eta = *opts.baseline;
        sol.threat = (opts.mode == ThreatMode::discounted)
                         ? compute_threat(m, sol.eta, opts.exec)
                         : compute_accident_threat(m, sol.eta, opts.exec);
    } else {
        MinThreatResult min_res = min_threat_policy(m, opts.mode, opts.exec);
        sol.eta = std::move(min_res.policy);
        sol.threat = std::move(min_res.table);
    }

    sol.x_star = (opts.mode == ThreatMode::discounted)
                     ? secure_threshold(spec.budget, m.beta, m.horizon)
                     : accident_threshold(spec.budget, m.horizon, opts.deviation_cap);

    // Start gate: the baseline's own initial threat must clear the per-step
    // threshold at every supported start state.
    std::ostringstream diag;
    bool gate_ok = true;
    for (int s0 = 0; s0 < m.n_states; ++s0) {
        if (m.initial[s0] == 0.0) continue;
        if (opts.per_action_gate) {
            for (int a = 0; a < m.n_actions; ++a)
                if (sol.eta.prob(0, s0, a) > 0.0 &&
                    sol.threat.at(0, s0, a) > sol.x_star + kTol) {
                    gate_ok = false;
                    diag << "baseline threat " << sol.threat.at(0, s0, a) << " of action "
                         << a << " at start state " << s0 << " exceeds threshold "
                         << sol.x_star << "; ";
                }
        } else if (sol.threat.state_value(0, s0) > sol.x_star + kTol) {
            gate_ok = false;
            diag << "baseline expected threat " << sol.threat.state_value(0, s0)
                 << " at start state " << s0 << " exceeds threshold " << sol.x_star
                 << "; ";
        }
    }
    if (!gate_ok) {
        diag << "no guarantee is available; returning the baseline policy";
        sol.policy = sol.eta;
        sol.certified = false;
        sol.diagnostic = diag.str();
        sol.secure = build_secure_set(sol.threat,
                                      std::vector<double>(m.horizon, sol.x_star));
        sol.value = exact_return(m, sol.policy);
        return sol;
    }

    sol.secure =
        build_secure_set(sol.threat, std::vector<double>(m.horizon, sol.x_star));
    PlanResult plan = solve_restricted(m, sol.secure, opts.exec);
    sol.policy = std::move(plan.policy);
    sol.value = plan.value;

    // Certify each supported start state and re-check the episode budget
    // against the planned policy's exact threat.
    const ThreatTable threat_pi = (opts.mode == ThreatMode::discounted)
                                      ? compute_threat(m, sol.policy, opts.exec)
                                      : compute_accident_threat(m, sol.policy, opts.exec);
    bool all_hold = true;
    for (int s0 = 0; s0 < m.n_states; ++s0) {
        if (m.initial[s0] == 0.0) continue;
        BoundCertificate cert =
            certify_bound(m, sol.eta, sol.policy, sol.secure, sol.threat, s0);
        if (!cert.holds) {
            all_hold = false;
            diag << "deviation bound does not hold at start state " << s0 << "; ";
        }
        if (threat_pi.state_value(0, s0) > spec.budget + kTol) {
            all_hold = false;
            diag << "planned policy's threat " << threat_pi.state_value(0, s0)
                 << " at start state " << s0 << " exceeds the budget " << spec.budget
                 << "; ";
        }
        sol.certificates.push_back(std::move(cert));
    }
    sol.certified = all_hold;
    sol.diagnostic = diag.str();
    if (!sol.certified) {
        sol.policy = sol.eta;
        sol.value = exact_return(m, sol.policy);
    }
    return sol;
}

} // namespace rpmdp
