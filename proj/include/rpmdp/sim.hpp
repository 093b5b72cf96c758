#pragma once

#include "rpmdp/cmdp.hpp"
#include "rpmdp/exec.hpp"

#include <cstdint>

namespace rpmdp {

// Sample one episode.  The stream is derived from (seed, episode), so a batch
// indexed by episode is reproducible regardless of evaluation order.
Trajectory simulate(const Cmdp& m, const Policy& pi, std::uint64_t seed,
                    std::uint64_t episode = 0);

// gamma^(k+1)-weighted reward sum of a sampled episode (reward at step index
// k, 0-based, carries weight gamma^(k+1)).
double discounted_return(const Cmdp& m, const Trajectory& tr);

// E[sum_k gamma^k r_k] under pi from the initial distribution, by forward
// occupancy propagation.  Exact up to float rounding.
double exact_return(const Cmdp& m, const Policy& pi);

// State-action occupancy occ[t][(s,a)] = P(s_t = s, a_t = a) under pi; the
// start state is drawn from `initial` unless s0 >= 0 pins it.
std::vector<double> occupancy(const Cmdp& m, const Policy& pi, int s0 = -1);

} // namespace rpmdp
