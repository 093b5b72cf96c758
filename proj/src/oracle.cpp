#include "rpmdp/oracle.hpp"

namespace rpmdp {

namespace {

struct Enumerator {
    const Cmdp& m;
    const Policy& pi;
    ThreatMode mode;
    const EnumerationOptions& opts;
    long long n_nodes = 0;
    double pruned_mass = 0.0;

    void check_budget() {
        if (++n_nodes > opts.budget)
            throw EnumerationBudgetExceeded("enumeration budget exceeded");
    }

    // Returns (value, mass) summed over suffix trajectories that start by
    // taking a in s at step t.  Value semantics per mode:
    //   discounted: sum over kept suffixes of P * sum_j beta^j d_j, with j
    //               counted from 1 at the (s, a) step itself;
    //   accident:   sum over kept suffixes of P * (1 - prod_j (1 - d_j)).
    std::pair<double, double> threat_suffix(int t, int s, int a, double path_prob) {
        check_budget();
        const double d = m.danger[m.sa(s, a)];
        if (t == m.horizon - 1) {
            const double v = (mode == ThreatMode::discounted) ? m.beta * d : d;
            return {v, 1.0};
        }
        double child_value = 0.0;
        double child_mass = 0.0;
        const auto row = m.row(s, a);
        for (int s2 = 0; s2 < m.n_states; ++s2) {
            if (row[s2] == 0.0) continue;
            for (int a2 = 0; a2 < m.n_actions; ++a2) {
                const double p_branch = pi.prob(t + 1, s2, a2);
                if (p_branch == 0.0) continue;
                const double w = row[s2] * p_branch;
                const double next_path = path_prob * w;
                if (next_path < opts.prune) {
                    pruned_mass += next_path;
                    continue;
                }
                auto [v, mass] = threat_suffix(t + 1, s2, a2, next_path);
                child_value += w * v;
                child_mass += w * mass;
            }
        }
        if (mode == ThreatMode::discounted)
            return {m.beta * (d * child_mass + child_value), child_mass};
        return {d * child_mass + (1.0 - d) * child_value, child_mass};
    }

    // (value, mass) with value = sum over kept suffixes of
    // P * sum_{j>=1} gamma^j r_j, j counted from 1 at the (s, a) step.
    std::pair<double, double> return_suffix(int t, int s, int a, double path_prob) {
        check_budget();
        const double r = m.reward[m.sa(s, a)];
        if (t == m.horizon - 1) return {m.gamma * r, 1.0};
        double child_value = 0.0;
        double child_mass = 0.0;
        const auto row = m.row(s, a);
        for (int s2 = 0; s2 < m.n_states; ++s2) {
            if (row[s2] == 0.0) continue;
            for (int a2 = 0; a2 < m.n_actions; ++a2) {
                const double p_branch = pi.prob(t + 1, s2, a2);
                if (p_branch == 0.0) continue;
                const double w = row[s2] * p_branch;
                const double next_path = path_prob * w;
                if (next_path < opts.prune) {
                    pruned_mass += next_path;
                    continue;
                }
                auto [v, mass] = return_suffix(t + 1, s2, a2, next_path);
                child_value += w * v;
                child_mass += w * mass;
            }
        }
        return {m.gamma * (r * child_mass + child_value), child_mass};
    }
};

} // namespace

EnumerationResult enumerate_threat(const Cmdp& m, const Policy& pi, int t, int s,
                                   int a, ThreatMode mode,
                                   const EnumerationOptions& opts) {
    require_compatible(m, pi, "enumerate_threat");
    if (t < 0 || t >= m.horizon) throw std::invalid_argument("enumerate_threat: t out of range");
    if (s < 0 || s >= m.n_states) throw std::invalid_argument("enumerate_threat: s out of range");
    if (a < 0 || a >= m.n_actions) throw std::invalid_argument("enumerate_threat: a out of range");

    Enumerator e{m, pi, mode, opts};
    auto [value, mass] = e.threat_suffix(t, s, a, 1.0);
    return {value, mass, e.pruned_mass, e.n_nodes};
}

EnumerationResult enumerate_return(const Cmdp& m, const Policy& pi,
                                   const EnumerationOptions& opts) {
    require_compatible(m, pi, "enumerate_return");
    Enumerator e{m, pi, ThreatMode::discounted, opts};
    double value = 0.0;
    double mass = 0.0;
    for (int s0 = 0; s0 < m.n_states; ++s0) {
        if (m.initial[s0] == 0.0) continue;
        for (int a0 = 0; a0 < m.n_actions; ++a0) {
            const double w = m.initial[s0] * pi.prob(0, s0, a0);
            if (w == 0.0) continue;
            if (w < opts.prune) {
                e.pruned_mass += w;
                continue;
            }
            auto [v, mass_below] = e.return_suffix(0, s0, a0, w);
            value += w * v;
            mass += w * mass_below;
        }
    }
    return {value, mass, e.pruned_mass, e.n_nodes};
}

} // namespace rpmdp
