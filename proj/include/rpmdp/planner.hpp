#pragma once

#include "rpmdp/secure.hpp"

namespace rpmdp {

// One way a decision taken at a kept state can resume: the process re-enters
// the kept region in state s2 at step arrive_t (clock time, not an offset).
struct DetourOutcome {
    int arrive_t = 0;
    int s2 = 0;
    double prob = 0.0;
};

// Planning model restricted to the kept region.  Decisions exist only at
// kept states over kept actions; mass that falls outside the region is
// walked forward under the fallback policy until it either re-enters (an
// arrival outcome, with the clock advanced by the detour length) or the
// horizon ends (truncation).  detour_reward accumulates the gamma^k-weighted
// rewards collected by the fallback steps inside the detour, with k the
// absolute 1-based step index, so values compose with exact_return directly.
struct Pmdp {
    int horizon = 0;
    int n_states = 0;
    int n_actions = 0;
    double gamma = 1.0;
    SecureSet secure;
    std::vector<double> reward;  // base (s, a) rewards
    std::vector<double> initial; // base start distribution

    // Root index (t, s, a); populated only for kept s, kept a.
    std::vector<std::vector<DetourOutcome>> arrivals;
    std::vector<double> detour_reward;
    std::vector<double> truncation;

    std::size_t root(int t, int s, int a) const {
        return (static_cast<std::size_t>(t) * n_states + s) * n_actions + a;
    }
};

// Requires a nonempty kept region, the start distribution supported on it,
// and fallback entries consistent with the threat table the set was built
// from.  Detour probabilities are exact: mass outside the region is pushed
// forward step by step under the fallback policy, in state index order.
Pmdp build_pmdp(const Cmdp& m, const SecureSet& secure, const ThreatTable& threat,
                Exec exec = Exec::parallel);

struct PlanResult {
    Policy policy;      // complete: kept states get the argmax kept action,
                        // all other states the fallback action
    double value = 0.0; // expected gamma^k-weighted return from the start
};

// Backward induction over the restricted model; ties go to the lowest action
// index.
PlanResult solve_pmdp(const Pmdp& p);

// Expected return of a policy evaluated on the restricted model.  The policy
// must keep its support inside the kept action set at kept states; what it
// says elsewhere is ignored (detours already encode the fallback).
double pmdp_exact_return(const Pmdp& p, const Policy& pi);

// Same optimum computed directly on the base model with the action
// restriction applied in place (max over kept actions at kept states, the
// fallback action elsewhere).  Scales to models where materializing the
// restricted planning model would be wasteful; agrees with solve_pmdp.
PlanResult solve_restricted(const Cmdp& m, const SecureSet& secure,
                            Exec exec = Exec::parallel);

// Unconstrained finite-horizon optimum, for reference comparisons.
PlanResult backward_induction(const Cmdp& m, Exec exec = Exec::parallel);

struct RpOptions {
    ThreatMode mode = ThreatMode::discounted;
    // Start gate variant: false compares the baseline's expected initial
    // threat against the threshold, true requires every action on the
    // baseline's initial support to clear it.
    bool per_action_gate = false;
    // Accident-mode threshold uses x = c / (1 + (T-1) z); irrelevant in
    // discounted mode.
    double deviation_cap = 1.0;
    // Baseline policy; defaults to the threat-minimizing policy.
    const Policy* baseline = nullptr;
    Exec exec = Exec::parallel;
};

struct RpSolution {
    Policy policy;      // planned policy if certified, otherwise the baseline
    Policy eta;         // baseline whose threat defines the pool
    ThreatTable threat; // threat of the baseline
    SecureSet secure;
    double x_star = 0.0;
    bool certified = false;
    std::string diagnostic;
    std::vector<BoundCertificate> certificates; // one per supported start state
    double value = 0.0;                         // exact return of `policy`
};

// Reconnaissance-then-planning in one call: compute the baseline threat,
// derive the per-step threshold from the episode budget, gate the start
// states, restrict, plan, and certify.  A failed gate is not an error: the
// baseline comes back with certified = false and a diagnostic.
RpSolution rp_solve(const Cmdp& m, const SafetySpec& spec, const RpOptions& opts = {});

} // namespace rpmdp
