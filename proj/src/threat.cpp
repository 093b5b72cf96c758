#include "rpmdp/threat.hpp"

#include "rpmdp/rng.hpp"

#include <cmath>

namespace rpmdp {

namespace {

void require_accident_danger(const Cmdp& m, const char* who) {
    for (double d : m.danger)
        if (d < 0.0 || d > 1.0)
            throw std::invalid_argument(std::string(who) +
                                        ": accident mode needs danger values in [0, 1]");
}

ThreatTable make_table(const Cmdp& m, ThreatMode mode) {
    ThreatTable table;
    table.mode = mode;
    table.horizon = m.horizon;
    table.n_states = m.n_states;
    table.n_actions = m.n_actions;
    const std::size_t n_sa = static_cast<std::size_t>(m.n_states) * m.n_actions;
    table.values.resize(static_cast<std::size_t>(m.horizon) * n_sa);
    table.state_values.resize(static_cast<std::size_t>(m.horizon) * m.n_states);
    return table;
}

// Threat of one (s, a) cell given the next step's state values (null at the
// last step).  The successor sum runs in index order.
inline double backup_cell(const Cmdp& m, ThreatMode mode, int s, int a,
                          const double* next_state_values) {
    const double d = m.danger[m.sa(s, a)];
    if (next_state_values == nullptr)
        return (mode == ThreatMode::discounted) ? m.beta * d : d;
    const auto row = m.row(s, a);
    double exp_next = 0.0;
    for (int s2 = 0; s2 < m.n_states; ++s2) exp_next += row[s2] * next_state_values[s2];
    return (mode == ThreatMode::discounted) ? m.beta * d + m.beta * exp_next
                                            : d + (1.0 - d) * exp_next;
}

ThreatTable compute_threat_impl(const Cmdp& m, const Policy& pi, ThreatMode mode,
                                Exec exec, const char* who) {
    require_compatible(m, pi, who);
    if (mode == ThreatMode::accident) require_accident_danger(m, who);

    ThreatTable table = make_table(m, mode);
    const std::size_t n_sa = static_cast<std::size_t>(m.n_states) * m.n_actions;
    for (int t = m.horizon - 1; t >= 0; --t) {
        const double* next =
            (t == m.horizon - 1)
                ? nullptr
                : table.state_values.data() + static_cast<std::size_t>(t + 1) * m.n_states;
        double* values = table.values.data() + static_cast<std::size_t>(t) * n_sa;
        double* state_values =
            table.state_values.data() + static_cast<std::size_t>(t) * m.n_states;
        for_each_index(m.n_states, exec, [&](long long si) {
            const int s = static_cast<int>(si);
            double mix = 0.0;
            for (int a = 0; a < m.n_actions; ++a) {
                const double v = backup_cell(m, mode, s, a, next);
                values[static_cast<std::size_t>(s) * m.n_actions + a] = v;
                mix += pi.prob(t, s, a) * v;
            }
            state_values[s] = mix;
        });
    }
    return table;
}

} // namespace

ThreatTable compute_threat(const Cmdp& m, const Policy& pi, Exec exec) {
    return compute_threat_impl(m, pi, ThreatMode::discounted, exec, "compute_threat");
}

ThreatTable compute_accident_threat(const Cmdp& m, const Policy& pi, Exec exec) {
    return compute_threat_impl(m, pi, ThreatMode::accident, exec,
                               "compute_accident_threat");
}

ThreatTable compute_threat(const Cmdp& m, const Policy& pi, ThreatMode mode, Exec exec) {
    return mode == ThreatMode::discounted ? compute_threat(m, pi, exec)
                                          : compute_accident_threat(m, pi, exec);
}

MinThreatResult min_threat_policy(const Cmdp& m, ThreatMode mode, Exec exec) {
    if (mode == ThreatMode::accident) require_accident_danger(m, "min_threat_policy");

    ThreatTable table = make_table(m, mode);
    const int S = m.n_states;
    const int A = m.n_actions;
    const std::size_t n_sa = static_cast<std::size_t>(S) * A;
    std::vector<int> greedy(static_cast<std::size_t>(m.horizon) * S);

    for (int t = m.horizon - 1; t >= 0; --t) {
        // state_values[t+1] already holds min_a of the next slice.
        const double* next =
            (t == m.horizon - 1)
                ? nullptr
                : table.state_values.data() + static_cast<std::size_t>(t + 1) * S;
        double* values = table.values.data() + static_cast<std::size_t>(t) * n_sa;
        double* state_values = table.state_values.data() + static_cast<std::size_t>(t) * S;
        int* greedy_row = greedy.data() + static_cast<std::size_t>(t) * S;
        for_each_index(S, exec, [&](long long si) {
            const int s = static_cast<int>(si);
            int best = 0;
            double best_v = 0.0;
            for (int a = 0; a < A; ++a) {
                const double v = backup_cell(m, mode, s, a, next);
                values[static_cast<std::size_t>(s) * A + a] = v;
                if (a == 0 || v < best_v) {
                    best_v = v;
                    best = a;
                }
            }
            state_values[s] = best_v;
            greedy_row[s] = best;
        });
    }

    MinThreatResult out;
    out.policy = Policy::deterministic(m.horizon, S, A, greedy);
    out.table = std::move(table);
    return out;
}

ThreatEstimate monte_carlo_threat(const Cmdp& m, const Policy& pi, long n_rollouts,
                                  std::uint64_t seed, ThreatMode mode, Exec exec) {
    require_compatible(m, pi, "monte_carlo_threat");
    if (n_rollouts <= 0)
        throw std::invalid_argument("monte_carlo_threat: n_rollouts must be positive");
    if (mode == ThreatMode::accident) require_accident_danger(m, "monte_carlo_threat");

    ThreatEstimate est;
    est.n_rollouts = n_rollouts;
    est.table = make_table(m, mode);
    const std::size_t n_sa = static_cast<std::size_t>(m.n_states) * m.n_actions;
    const std::size_t n_cells = static_cast<std::size_t>(m.horizon) * n_sa;
    est.std_errors.resize(n_cells);

    for_each_index(static_cast<long long>(n_cells), exec, [&](long long cell) {
        const int t = static_cast<int>(cell / static_cast<long long>(n_sa));
        const int rem = static_cast<int>(cell % static_cast<long long>(n_sa));
        const int s = rem / m.n_actions;
        const int a = rem % m.n_actions;

        double sum = 0.0;
        double sum_sq = 0.0;
        for (long r = 0; r < n_rollouts; ++r) {
            Rng rng = Rng::derive(seed,
                                  static_cast<std::uint64_t>(cell) * n_rollouts + r);
            double sample;
            if (mode == ThreatMode::discounted) {
                double total = 0.0;
                double w = 1.0;
                int cs = s, ca = a;
                for (int k = t; k < m.horizon; ++k) {
                    w *= m.beta;
                    total += w * m.danger[m.sa(cs, ca)];
                    if (k + 1 >= m.horizon) break;
                    cs = rng.sample(m.row(cs, ca));
                    ca = rng.sample(pi.row(k + 1, cs));
                }
                sample = total;
            } else {
                double survive = 1.0;
                int cs = s, ca = a;
                for (int k = t; k < m.horizon; ++k) {
                    survive *= 1.0 - m.danger[m.sa(cs, ca)];
                    if (survive == 0.0 || k + 1 >= m.horizon) break;
                    cs = rng.sample(m.row(cs, ca));
                    ca = rng.sample(pi.row(k + 1, cs));
                }
                sample = 1.0 - survive;
            }
            sum += sample;
            sum_sq += sample * sample;
        }
        const double mean = sum / n_rollouts;
        est.table.values[cell] = mean;
        est.std_errors[cell] =
            (n_rollouts > 1)
                ? std::sqrt(std::max(0.0, (sum_sq - sum * mean) / (n_rollouts - 1)) /
                            n_rollouts)
                : 0.0;
    });

    for (int t = 0; t < m.horizon; ++t)
        for (int s = 0; s < m.n_states; ++s) {
            double mix = 0.0;
            for (int a = 0; a < m.n_actions; ++a)
                mix += pi.prob(t, s, a) * est.table.at(t, s, a);
            est.table.state_values[static_cast<std::size_t>(t) * m.n_states + s] = mix;
        }
    return est;
}

} // namespace rpmdp
