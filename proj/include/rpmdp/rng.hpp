#pragma once

#include <cstdint>
#include <span>

namespace rpmdp {

// Counter-based generator: output i is a hash of (key, i), so a stream can be
// split into independent substreams by deriving new keys instead of sharing
// mutable state.  Episode k of a batch always sees the same draws no matter
// how the batch is scheduled across threads.
class Rng {
  public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    // Independent stream for (master seed, stream index).
    static Rng derive(std::uint64_t master, std::uint64_t stream);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double next_double();

    // Uniform on {0, ..., bound-1}; bound must be positive.
    int next_int(int bound);

    // Index distributed according to probs (assumed to sum to 1); inverse CDF
    // walk, falling back to the last positive entry if rounding leaves the
    // draw above the accumulated mass.
    int sample(std::span<const double> probs);

    // Gamma(shape, 1) via Marsaglia-Tsang, used for Dirichlet rows.
    double next_gamma(double shape);

    double next_normal();

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

} // namespace rpmdp
