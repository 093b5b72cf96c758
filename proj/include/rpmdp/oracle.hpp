#pragma once

#include "rpmdp/cmdp.hpp"

namespace rpmdp {

// Test-support oracles: exhaustive suffix-trajectory enumeration with no
// dynamic programming and no memoization.  Sums are combined bottom-up along
// the recursion tree, so the reduction order is fixed and results are
// reproducible bit for bit.

struct EnumerationOptions {
    double prune = 1e-15;            // drop branches below this path probability
    long long budget = 10'000'000;   // hard cap on expanded branch nodes
};

struct EnumerationResult {
    double value = 0.0;       // probability-weighted objective over kept suffixes
    double mass = 0.0;        // probability mass of kept suffixes (should be ~1)
    double pruned_mass = 0.0; // mass dropped by the pruning threshold
    long long n_nodes = 0;    // branch nodes expanded
};

struct EnumerationBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Danger-to-go of taking action a in state s at step t and following pi
// afterwards.  Discounted mode weights the danger j steps ahead of t by
// beta^j; accident mode scores the probability that any step of the suffix
// has an accident, reading d(s,a) as a per-step accident probability.
EnumerationResult enumerate_threat(const Cmdp& m, const Policy& pi, int t, int s,
                                   int a, ThreatMode mode,
                                   const EnumerationOptions& opts = {});

// E[sum_k gamma^k r_k] from the initial distribution under pi.
EnumerationResult enumerate_return(const Cmdp& m, const Policy& pi,
                                   const EnumerationOptions& opts = {});

} // namespace rpmdp
