#include "rpmdp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace rpmdp {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer; full-period mix of a 64-bit input.
std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

} // namespace

Rng Rng::derive(std::uint64_t master, std::uint64_t stream) {
    // Two mixing rounds so that nearby (master, stream) pairs decorrelate.
    return Rng(mix64(mix64(master + kGolden) ^ (stream * 0xD6E8FEB86659FD93ull + 1)));
}

std::uint64_t Rng::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int Rng::next_int(int bound) {
    if (bound <= 0) throw std::invalid_argument("Rng::next_int: bound must be positive");
    // Rejection-free modulo is fine here: bound is tiny relative to 2^64.
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(bound));
}

int Rng::sample(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("Rng::sample: empty distribution");
    const double u = next_double();
    double cum = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) last_positive = static_cast<int>(i);
        cum += probs[i];
        if (u < cum) return static_cast<int>(i);
    }
    if (last_positive < 0) throw std::invalid_argument("Rng::sample: all-zero distribution");
    return last_positive;
}

double Rng::next_normal() {
    if (have_spare_normal_) {
        have_spare_normal_ = false;
        return spare_normal_;
    }
    // Marsaglia polar method.
    double u, v, s;
    do {
        u = 2.0 * next_double() - 1.0;
        v = 2.0 * next_double() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * m;
    have_spare_normal_ = true;
    return u * m;
}

double Rng::next_gamma(double shape) {
    if (shape <= 0.0) throw std::invalid_argument("Rng::next_gamma: shape must be positive");
    if (shape < 1.0) {
        // Boost from shape+1 down (Marsaglia-Tsang boosting identity).
        const double g = next_gamma(shape + 1.0);
        double u = next_double();
        while (u == 0.0) u = next_double();
        return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = next_normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = next_double();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

} // namespace rpmdp
