#pragma once

#include "rpmdp/cmdp.hpp"
#include "rpmdp/exec.hpp"

#include <cstdint>

namespace rpmdp {

// Danger-to-go table for a fixed policy.  values[(t,s,a)] is the threat of
// committing to action a in state s at step t and following the policy
// afterwards; state_values[(t,s)] is the policy mixture of that row.
struct ThreatTable {
    ThreatMode mode = ThreatMode::discounted;
    int horizon = 0;
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> values;       // (t, s, a)
    std::vector<double> state_values; // (t, s)

    std::size_t tsa(int t, int s, int a) const {
        return (static_cast<std::size_t>(t) * n_states + s) * n_actions + a;
    }
    double at(int t, int s, int a) const { return values[tsa(t, s, a)]; }
    double state_value(int t, int s) const {
        return state_values[static_cast<std::size_t>(t) * n_states + s];
    }
    bool compatible_with(const Cmdp& m) const {
        return horizon == m.horizon && n_states == m.n_states && n_actions == m.n_actions;
    }
};

// Backward induction for the discounted threat:
//   T_t(s,a) = beta * d(s,a) + beta * E_{s'}[ E_{a'~pi}[ T_{t+1}(s',a') ] ]
// with T_{T-1}(s,a) = beta * d(s,a).  Danger j steps past t is weighted
// beta^j, so the table is comparable across t.
ThreatTable compute_threat(const Cmdp& m, const Policy& pi, Exec exec = Exec::parallel);

// Accident-probability threat:
//   T_t(s,a) = d(s,a) + (1 - d(s,a)) * E_{s'}[ E_{a'~pi}[ T_{t+1}(s',a') ] ]
// with T_{T-1}(s,a) = d(s,a).  Requires danger values in [0,1]; they are read
// as per-step accident probabilities, independent of the sampled successor,
// and the table value is the probability of at least one accident.
ThreatTable compute_accident_threat(const Cmdp& m, const Policy& pi,
                                    Exec exec = Exec::parallel);

// Mode-dispatching form for callers that carry the mode as data.
ThreatTable compute_threat(const Cmdp& m, const Policy& pi, ThreatMode mode,
                           Exec exec = Exec::parallel);

struct MinThreatResult {
    Policy policy;     // deterministic, lowest action index on ties
    ThreatTable table; // threat of that policy
};

// Policy minimizing the threat at every (t, s), by replacing the policy
// mixture in the backup with a min over next actions.
MinThreatResult min_threat_policy(const Cmdp& m,
                                  ThreatMode mode = ThreatMode::discounted,
                                  Exec exec = Exec::parallel);

struct ThreatEstimate {
    ThreatTable table;              // per-cell rollout means
    std::vector<double> std_errors; // (t, s, a) standard errors of the mean
    long n_rollouts = 0;
};

// Rollout estimate of the same quantities.  Each (t, s, a) cell runs its own
// rollouts on a stream derived from (seed, cell index, rollout index), so the
// estimate does not depend on scheduling.  Danger enters through its exact
// per-step value (discounted mode sums beta^j d_j; accident mode accumulates
// 1 - prod(1 - d_j)), so on a deterministic model and policy the estimate has
// zero variance.
ThreatEstimate monte_carlo_threat(const Cmdp& m, const Policy& pi, long n_rollouts,
                                  std::uint64_t seed,
                                  ThreatMode mode = ThreatMode::discounted,
                                  Exec exec = Exec::parallel);

} // namespace rpmdp
