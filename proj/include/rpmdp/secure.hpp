#pragma once

#include "rpmdp/threat.hpp"

#include <cstdint>

namespace rpmdp {

// Raised when a certificate is requested outside its hypothesis; the message
// lists every violated precondition.
struct PreconditionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Total variation distance between two distributions on the same support.
double tv_distance(std::span<const double> p, std::span<const double> q);

// Per-step threat threshold that turns a whole-episode danger budget c into a
// uniform x: if every step's threat stays within x, accumulated danger stays
// within x * (1 + sum_{t=1}^{T-1} beta^t) = c, even for a policy that leans
// on the full deviation allowance at every step.
double secure_threshold(double c, double beta, int T);

// Accident-mode analogue with an explicit deviation cap z in [0, 1] (z = 1
// assumes nothing about how far the planned policy strays from the baseline):
// x = c / (1 + (T-1) z).
double accident_threshold(double c, int T, double z);

// Action pool carved out of a threat table by per-step thresholds x_t.  An
// action is kept at s only if its threat is within x_t at every t, so the
// kept set does not depend on when the state is visited; fallback(t, s) is
// the threat-minimizing action and is defined for every state.
struct SecureSet {
    int horizon = 0;
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> thresholds;      // x_t, one per step
    std::vector<std::uint8_t> action_ok; // (s, a)
    std::vector<std::uint8_t> state_ok;  // s: some action kept
    std::vector<int> fallback;           // (t, s): argmin_a threat, lowest index on ties

    bool is_secure(int s) const { return state_ok[s] != 0; }
    bool action_secure(int s, int a) const {
        return action_ok[static_cast<std::size_t>(s) * n_actions + a] != 0;
    }
    int fallback_at(int t, int s) const {
        return fallback[static_cast<std::size_t>(t) * n_states + s];
    }
};

SecureSet build_secure_set(const ThreatTable& threat, std::span<const double> x);

struct PoolViolation {
    int t = 0, s = 0, a = 0;
    std::string what;
};

struct MembershipReport {
    bool member = true;
    std::vector<PoolViolation> violations;
};

// Checks the restricted pool: on kept states the policy may only mix over
// kept actions; elsewhere it must play the fallback action exactly.
MembershipReport is_member(const Policy& pi, const SecureSet& secure,
                           const ThreatTable& threat);

// Executable form of the safety bound for a policy pi that deviates from the
// baseline eta inside the pool:
//   threat_pi(s0)  <=  x_0 + sum_{t>=1} w_t x_t E_pi[z_t | s0]
// where z_t(s,a) averages, over the successor step, the indicator of landing
// on a kept state times the tv distance between pi and eta there, and w_t is
// beta^t in discounted mode, 1 in accident mode.
struct BoundCertificate {
    double lhs = 0.0;            // exact threat of pi at (0, s0)
    double rhs = 0.0;
    std::vector<double> z_terms; // index t; entry 0 unused
    bool holds = false;
};

// Preconditions (refused via PreconditionViolation otherwise):
//   - secure was built from threat_eta (thresholds re-checked against it);
//   - on kept states, pi's support lies in the kept action set; elsewhere
//     pi's expected threat under threat_eta is no worse than eta's, step by
//     step;
//   - every action pi can take at (0, s0) has threat within x_0.
BoundCertificate certify_bound(const Cmdp& m, const Policy& eta, const Policy& pi,
                               const SecureSet& secure, const ThreatTable& threat_eta,
                               int s0);

// Conservative joint accident threat for factored dangers: the sum of
// per-subsystem accident threats, clipped to 1.  Valid as an upper bound when
// the subsystems evolve independently given the agent's own state and the
// policy ignores everything but the agent's own state.
double compose_threats(std::span<const double> subsystem_values);

// Table-lookup form: value i comes from tables[i] at (t, sub_states[i], a).
// All tables must be accident mode.
double compose_threats(std::span<const ThreatTable* const> tables,
                       std::span<const int> sub_states, int t, int a);

// Random member of the restricted pool: Dirichlet weights over kept actions
// on kept states, the fallback action elsewhere.
Policy sample_pool_policy(const SecureSet& secure, std::uint64_t seed);

} // namespace rpmdp
