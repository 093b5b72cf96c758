#pragma once

#include "rpmdp/cmdp.hpp"

#include <cstdint>
#include <optional>

namespace rpmdp {

struct QLearnOptions {
    double epsilon_start = 1.0;  // linear exploration decay across episodes
    double epsilon_final = 0.05;
    // When set, the penalty weight is annealed linearly from this value to
    // the target weight over the run.
    std::optional<double> lambda_start;
};

struct QLearnResult {
    Policy policy;         // greedy in the learned values, lowest index on ties
    std::vector<double> q; // (t, s, a) learned action values
};

// Tabular Q-learning on the shaped reward r - lambda * d, time-indexed values,
// zero initialization (optimistic once penalties bite), 1/visit-count learning
// rate, epsilon-greedy behaviour.  The episode stream is derived from (seed,
// episode), so runs are bit-reproducible.
QLearnResult penalized_q_learn(const Cmdp& m, double lambda, long episodes,
                               std::uint64_t seed, const QLearnOptions& opts = {});

struct MpcStats {
    long long branch_evaluations = 0; // (state, action, depth) nodes expanded
};

// Depth-limited safety-filtered search, evaluated fresh at every call with no
// caching, so the cost per decision is exponential in the lookahead.  An
// action passes the filter when its worst-case danger over the lookahead
// (max over reachable successors, best future action) stays within x; among
// passing actions the best expected shaped-free return wins, and when none
// pass the action with the smallest worst-case danger is played.  Ties go to
// the lowest action index.
int mpc_action(const Cmdp& m, int s, int t, int k, double x, ThreatMode mode,
               MpcStats* stats = nullptr);

} // namespace rpmdp
