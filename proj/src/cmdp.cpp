#include "rpmdp/cmdp.hpp"

#include <cmath>
#include <sstream>

namespace rpmdp {

namespace {
constexpr double kRowTol = 1e-9;
}

ValidationReport validate(const Cmdp& m) {
    ValidationReport rep;
    auto flag = [&rep](std::string msg) {
        rep.ok = false;
        rep.problems.push_back(std::move(msg));
    };

    if (m.n_states <= 0) flag("n_states must be positive");
    if (m.n_actions <= 0) flag("n_actions must be positive");
    if (m.horizon <= 0) flag("horizon must be positive");
    if (!(m.gamma >= 0.0 && m.gamma <= 1.0)) flag("gamma must lie in [0, 1]");
    if (!(m.beta >= 0.0 && m.beta < 1.0)) flag("beta must lie in [0, 1)");
    if (!rep.ok) return rep;

    const std::size_t n_sa = static_cast<std::size_t>(m.n_states) * m.n_actions;
    if (m.transition.size() != n_sa * m.n_states)
        flag("transition table has wrong size");
    if (m.reward.size() != n_sa) flag("reward table has wrong size");
    if (m.danger.size() != n_sa) flag("danger table has wrong size");
    if (m.initial.size() != static_cast<std::size_t>(m.n_states))
        flag("initial distribution has wrong size");
    if (!rep.ok) return rep;

    for (int s = 0; s < m.n_states; ++s) {
        for (int a = 0; a < m.n_actions; ++a) {
            double sum = 0.0;
            for (int s2 = 0; s2 < m.n_states; ++s2) {
                const double p = m.transition[m.sas(s, a, s2)];
                if (p < 0.0) {
                    std::ostringstream os;
                    os << "transition[" << s << "][" << a << "][" << s2 << "] is negative";
                    flag(os.str());
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowTol) {
                std::ostringstream os;
                os << "transition row (s=" << s << ", a=" << a << ") sums to " << sum;
                flag(os.str());
            }
            if (m.danger[m.sa(s, a)] < 0.0) {
                std::ostringstream os;
                os << "danger[" << s << "][" << a << "] is negative";
                flag(os.str());
            }
        }
    }

    double init_sum = 0.0;
    for (int s = 0; s < m.n_states; ++s) {
        if (m.initial[s] < 0.0) flag("initial distribution has a negative entry");
        init_sum += m.initial[s];
    }
    if (std::abs(init_sum - 1.0) > kRowTol) {
        std::ostringstream os;
        os << "initial distribution sums to " << init_sum;
        flag(os.str());
    }
    return rep;
}

void require_valid(const Cmdp& m) {
    ValidationReport rep = validate(m);
    if (rep.ok) return;
    std::string msg = "invalid CMDP:";
    for (const auto& p : rep.problems) {
        msg += "\n  ";
        msg += p;
    }
    throw ValidationError(msg);
}

Policy Policy::uniform(int horizon, int n_states, int n_actions) {
    Policy p;
    p.horizon = horizon;
    p.n_states = n_states;
    p.n_actions = n_actions;
    p.probs.assign(static_cast<std::size_t>(horizon) * n_states * n_actions,
                   1.0 / n_actions);
    return p;
}

Policy Policy::stationary(int horizon, int n_states, int n_actions,
                          std::span<const double> state_action_probs) {
    if (state_action_probs.size() != static_cast<std::size_t>(n_states) * n_actions)
        throw std::invalid_argument("Policy::stationary: table has wrong size");
    Policy p;
    p.horizon = horizon;
    p.n_states = n_states;
    p.n_actions = n_actions;
    p.probs.resize(static_cast<std::size_t>(horizon) * n_states * n_actions);
    for (int t = 0; t < horizon; ++t)
        std::copy(state_action_probs.begin(), state_action_probs.end(),
                  p.probs.begin() + static_cast<std::size_t>(t) * n_states * n_actions);
    return p;
}

Policy Policy::deterministic(int horizon, int n_states, int n_actions,
                             std::span<const int> actions) {
    if (actions.size() != static_cast<std::size_t>(horizon) * n_states)
        throw std::invalid_argument("Policy::deterministic: action table has wrong size");
    Policy p;
    p.horizon = horizon;
    p.n_states = n_states;
    p.n_actions = n_actions;
    p.probs.assign(static_cast<std::size_t>(horizon) * n_states * n_actions, 0.0);
    for (int t = 0; t < horizon; ++t) {
        for (int s = 0; s < n_states; ++s) {
            const int a = actions[static_cast<std::size_t>(t) * n_states + s];
            if (a < 0 || a >= n_actions)
                throw std::invalid_argument("Policy::deterministic: action out of range");
            p.probs[p.tsa(t, s, a)] = 1.0;
        }
    }
    return p;
}

int Policy::argmax_action(int t, int s) const {
    int best = 0;
    double best_p = prob(t, s, 0);
    for (int a = 1; a < n_actions; ++a) {
        const double pa = prob(t, s, a);
        if (pa > best_p) {
            best_p = pa;
            best = a;
        }
    }
    return best;
}

void require_compatible(const Cmdp& m, const Policy& p, const char* who) {
    if (!p.compatible_with(m)) {
        std::ostringstream os;
        os << who << ": policy shape (T=" << p.horizon << ", S=" << p.n_states
           << ", A=" << p.n_actions << ") does not match model (T=" << m.horizon
           << ", S=" << m.n_states << ", A=" << m.n_actions << ")";
        throw std::invalid_argument(os.str());
    }
}

} // namespace rpmdp
