#include "rpmdp/baselines.hpp"

#include "rpmdp/rng.hpp"

#include <cmath>

namespace rpmdp {

QLearnResult penalized_q_learn(const Cmdp& m, double lambda, long episodes,
                               std::uint64_t seed, const QLearnOptions& opts) {
    require_valid(m);
    if (episodes <= 0)
        throw std::invalid_argument("penalized_q_learn: episodes must be positive");

    const int S = m.n_states;
    const int A = m.n_actions;
    const int T = m.horizon;
    const std::size_t n_cells = static_cast<std::size_t>(T) * S * A;
    std::vector<double> q(n_cells, 0.0);
    std::vector<long> visits(n_cells, 0);

    auto cell = [&](int t, int s, int a) {
        return (static_cast<std::size_t>(t) * S + s) * A + a;
    };
    auto greedy = [&](int t, int s) {
        int best = 0;
        double best_v = q[cell(t, s, 0)];
        for (int a = 1; a < A; ++a)
            if (q[cell(t, s, a)] > best_v) {
                best_v = q[cell(t, s, a)];
                best = a;
            }
        return best;
    };

    for (long e = 0; e < episodes; ++e) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(e));
        const double frac = (episodes > 1) ? static_cast<double>(e) / (episodes - 1) : 1.0;
        const double eps =
            opts.epsilon_start + frac * (opts.epsilon_final - opts.epsilon_start);
        const double lam = opts.lambda_start
                               ? *opts.lambda_start + frac * (lambda - *opts.lambda_start)
                               : lambda;

        int s = rng.sample(m.initial);
        for (int t = 0; t < T; ++t) {
            const int a = (rng.next_double() < eps) ? rng.next_int(A) : greedy(t, s);
            const double shaped = m.reward[m.sa(s, a)] - lam * m.danger[m.sa(s, a)];
            const int s2 = rng.sample(m.row(s, a));
            double next_v = 0.0;
            if (t + 1 < T) next_v = q[cell(t + 1, s2, greedy(t + 1, s2))];
            const double target = m.gamma * (shaped + next_v);
            const std::size_t c = cell(t, s, a);
            const double alpha = 1.0 / static_cast<double>(++visits[c]);
            q[c] += alpha * (target - q[c]);
            s = s2;
        }
    }

    std::vector<int> actions(static_cast<std::size_t>(T) * S);
    for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s)
            actions[static_cast<std::size_t>(t) * S + s] = greedy(t, s);

    QLearnResult out;
    out.policy = Policy::deterministic(T, S, A, actions);
    out.q = std::move(q);
    return out;
}

namespace {

struct MpcSearch {
    const Cmdp& m;
    ThreatMode mode;
    long long nodes = 0;

    // Worst-case danger of taking a in s with `depth` decisions left: nature
    // picks the successor, the agent then plays to minimize.
    double worst_danger(int s, int a, int depth) {
        ++nodes;
        const double d = m.danger[m.sa(s, a)];
        const double base = (mode == ThreatMode::discounted) ? m.beta * d : d;
        if (depth <= 1) return base;
        const auto row = m.row(s, a);
        double worst = 0.0;
        bool any = false;
        for (int s2 = 0; s2 < m.n_states; ++s2) {
            if (row[s2] == 0.0) continue;
            double best = 0.0;
            for (int a2 = 0; a2 < m.n_actions; ++a2) {
                const double v = worst_danger(s2, a2, depth - 1);
                if (a2 == 0 || v < best) best = v;
            }
            if (!any || best > worst) {
                worst = best;
                any = true;
            }
        }
        if (mode == ThreatMode::discounted) return base + m.beta * worst;
        return d + (1.0 - d) * worst;
    }

    // Best expected return over the lookahead, relative discounting.
    double best_return(int s, int a, int depth) {
        ++nodes;
        const double r = m.reward[m.sa(s, a)];
        if (depth <= 1) return m.gamma * r;
        const auto row = m.row(s, a);
        double exp_next = 0.0;
        for (int s2 = 0; s2 < m.n_states; ++s2) {
            if (row[s2] == 0.0) continue;
            double best = 0.0;
            for (int a2 = 0; a2 < m.n_actions; ++a2) {
                const double v = best_return(s2, a2, depth - 1);
                if (a2 == 0 || v > best) best = v;
            }
            exp_next += row[s2] * best;
        }
        return m.gamma * (r + exp_next);
    }
};

} // namespace

int mpc_action(const Cmdp& m, int s, int t, int k, double x, ThreatMode mode,
               MpcStats* stats) {
    if (s < 0 || s >= m.n_states) throw std::invalid_argument("mpc_action: s out of range");
    if (t < 0 || t >= m.horizon) throw std::invalid_argument("mpc_action: t out of range");
    if (k < 1) throw std::invalid_argument("mpc_action: lookahead must be at least 1");
    const int depth = std::min(k, m.horizon - t);

    MpcSearch search{m, mode};
    int pick = -1;
    double pick_return = 0.0;
    int min_danger_action = 0;
    double min_danger = 0.0;
    for (int a = 0; a < m.n_actions; ++a) {
        const double danger = search.worst_danger(s, a, depth);
        if (a == 0 || danger < min_danger) {
            min_danger = danger;
            min_danger_action = a;
        }
        if (danger > x + 1e-12) continue;
        const double ret = search.best_return(s, a, depth);
        if (pick < 0 || ret > pick_return) {
            pick_return = ret;
            pick = a;
        }
    }
    if (stats != nullptr) stats->branch_evaluations += search.nodes;
    return (pick >= 0) ? pick : min_danger_action;
}

} // namespace rpmdp
