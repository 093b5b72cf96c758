#include "rpmdp/sim.hpp"

#include "rpmdp/rng.hpp"

namespace rpmdp {

Trajectory simulate(const Cmdp& m, const Policy& pi, std::uint64_t seed,
                    std::uint64_t episode) {
    require_compatible(m, pi, "simulate");
    Rng rng = Rng::derive(seed, episode);

    Trajectory tr;
    tr.states.reserve(m.horizon + 1);
    tr.actions.reserve(m.horizon);
    tr.rewards.reserve(m.horizon);
    tr.dangers.reserve(m.horizon);

    int s = rng.sample(m.initial);
    tr.states.push_back(s);
    for (int t = 0; t < m.horizon; ++t) {
        const int a = rng.sample(pi.row(t, s));
        tr.actions.push_back(a);
        tr.rewards.push_back(m.reward[m.sa(s, a)]);
        tr.dangers.push_back(m.danger[m.sa(s, a)]);
        s = rng.sample(m.row(s, a));
        tr.states.push_back(s);
    }
    return tr;
}

double discounted_return(const Cmdp& m, const Trajectory& tr) {
    double total = 0.0;
    double w = 1.0;
    for (std::size_t k = 0; k < tr.rewards.size(); ++k) {
        w *= m.gamma;
        total += w * tr.rewards[k];
    }
    return total;
}

std::vector<double> occupancy(const Cmdp& m, const Policy& pi, int s0) {
    require_compatible(m, pi, "occupancy");
    const std::size_t n_sa = static_cast<std::size_t>(m.n_states) * m.n_actions;
    std::vector<double> occ(static_cast<std::size_t>(m.horizon) * n_sa, 0.0);
    std::vector<double> cur(m.n_states, 0.0);
    if (s0 >= 0) {
        if (s0 >= m.n_states) throw std::invalid_argument("occupancy: s0 out of range");
        cur[s0] = 1.0;
    } else {
        for (int s = 0; s < m.n_states; ++s) cur[s] = m.initial[s];
    }

    std::vector<double> next(m.n_states);
    for (int t = 0; t < m.horizon; ++t) {
        double* slice = occ.data() + static_cast<std::size_t>(t) * n_sa;
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < m.n_states; ++s) {
            if (cur[s] == 0.0) continue;
            for (int a = 0; a < m.n_actions; ++a) {
                const double mass = cur[s] * pi.prob(t, s, a);
                if (mass == 0.0) continue;
                slice[m.sa(s, a)] = mass;
                const auto row = m.row(s, a);
                for (int s2 = 0; s2 < m.n_states; ++s2) next[s2] += mass * row[s2];
            }
        }
        cur.swap(next);
    }
    return occ;
}

double exact_return(const Cmdp& m, const Policy& pi) {
    const std::vector<double> occ = occupancy(m, pi);
    const std::size_t n_sa = static_cast<std::size_t>(m.n_states) * m.n_actions;
    double total = 0.0;
    double w = 1.0;
    for (int t = 0; t < m.horizon; ++t) {
        w *= m.gamma;
        const double* slice = occ.data() + static_cast<std::size_t>(t) * n_sa;
        double step = 0.0;
        for (std::size_t i = 0; i < n_sa; ++i) step += slice[i] * m.reward[i];
        total += w * step;
    }
    return total;
}

} // namespace rpmdp
