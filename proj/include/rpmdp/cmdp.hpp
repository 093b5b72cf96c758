#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rpmdp {

// How accumulated danger is scored.
//   discounted: expected sum of beta^k-weighted danger values.
//   accident:   probability that at least one accident occurs, with the
//               per-step danger d(s,a) in [0,1] read as an accident
//               probability for that step.
enum class ThreatMode { discounted, accident };

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Finite-horizon tabular constrained MDP.  All tables are dense row-major:
// transition is (s, a, s'), reward and danger are (s, a).  An episode lasts
// exactly `horizon` decisions; reward collected at step k (1-based) is
// discounted by gamma^k, danger by beta^k.
struct Cmdp {
    int n_states = 0;
    int n_actions = 0;
    int horizon = 0;
    double gamma = 1.0; // reward discount, in [0, 1]
    double beta = 0.0;  // danger discount, in [0, 1)
    std::vector<double> transition; // n_states * n_actions * n_states
    std::vector<double> reward;     // n_states * n_actions
    std::vector<double> danger;     // n_states * n_actions, nonnegative
    std::vector<double> initial;    // n_states, distribution over start states

    std::size_t sa(int s, int a) const {
        return static_cast<std::size_t>(s) * n_actions + a;
    }
    std::size_t sas(int s, int a, int s2) const {
        return (static_cast<std::size_t>(s) * n_actions + a) * n_states + s2;
    }
    std::span<const double> row(int s, int a) const {
        return {transition.data() + sas(s, a, 0), static_cast<std::size_t>(n_states)};
    }
};

// Safety budget: expected beta-discounted danger (or accident probability,
// depending on mode) from the start must not exceed `budget`.
struct SafetySpec {
    double budget = 0.0;
    ThreatMode mode = ThreatMode::discounted;
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> problems;
};

// Structural checks: dimensions, row stochasticity (1e-9 tolerance),
// nonnegative danger, discounts in range, initial distribution sums to 1.
ValidationReport validate(const Cmdp& m);

// Throwing wrapper around validate for call sites that need a valid model.
void require_valid(const Cmdp& m);

// Time-indexed stochastic policy; probs is (t, s, a) row-major.  A stationary
// policy is stored with the same layout, one slice repeated at construction.
struct Policy {
    int horizon = 0;
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> probs;

    static Policy uniform(int horizon, int n_states, int n_actions);
    // Single (s, a) table used at every step.
    static Policy stationary(int horizon, int n_states, int n_actions,
                             std::span<const double> state_action_probs);
    // One action per (t, s); actions is (t, s) row-major.
    static Policy deterministic(int horizon, int n_states, int n_actions,
                                std::span<const int> actions);

    std::size_t tsa(int t, int s, int a) const {
        return (static_cast<std::size_t>(t) * n_states + s) * n_actions + a;
    }
    double prob(int t, int s, int a) const { return probs[tsa(t, s, a)]; }
    std::span<const double> row(int t, int s) const {
        return {probs.data() + tsa(t, s, 0), static_cast<std::size_t>(n_actions)};
    }
    std::span<double> row_mut(int t, int s) {
        return {probs.data() + tsa(t, s, 0), static_cast<std::size_t>(n_actions)};
    }
    // Lowest-index action carrying positive mass equal to the row maximum.
    int argmax_action(int t, int s) const;

    bool compatible_with(const Cmdp& m) const {
        return horizon == m.horizon && n_states == m.n_states && n_actions == m.n_actions;
    }
};

void require_compatible(const Cmdp& m, const Policy& p, const char* who);

// One sampled episode.  states has horizon+1 entries; actions, rewards and
// dangers have horizon entries, with rewards[k] = r(states[k], actions[k])
// and dangers[k] = d(states[k], actions[k]) recorded exactly.
struct Trajectory {
    std::vector<int> states;
    std::vector<int> actions;
    std::vector<double> rewards;
    std::vector<double> dangers;
};

} // namespace rpmdp
