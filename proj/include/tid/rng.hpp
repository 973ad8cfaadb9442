#pragma once

#include <cmath>
#include <cstdint>

namespace tid {

/// Identifies one reproducible random stream. Identical (seed, stream)
/// pairs reproduce identical draws bit-for-bit on the same build.
struct SketchSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

namespace detail {
constexpr std::uint64_t splitmix_fin(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

constexpr std::uint64_t mix64(std::uint64_t x) {
    return detail::splitmix_fin(x + 0x9e3779b97f4a7c15ULL);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

/// Stateless keyed draw. Sketch operators evaluate their hash/sign maps
/// through this, so they never materialize per-index tables.
constexpr std::uint64_t keyed_u64(SketchSeed s, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t h = mix64(s.seed);
    h = hash_combine(h, s.stream);
    h = hash_combine(h, a);
    return hash_combine(h, b);
}

/// Independent child stream of a seed.
constexpr SketchSeed substream(SketchSeed s, std::uint64_t tag) {
    return SketchSeed{s.seed, hash_combine(s.stream, tag)};
}

/// Splittable counter-based generator (splitmix64 core). Does not use
/// std:: distributions, so sequences do not depend on the standard library.
class Rng {
  public:
    Rng() = default;
    explicit Rng(SketchSeed s) : state_(keyed_u64(s, 0x5eedf00dULL)) {}
    explicit Rng(std::uint64_t seed) : Rng(SketchSeed{seed, 0}) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return detail::splitmix_fin(state_);
    }

    /// Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Uniform integer in [0, n); unbiased via rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return x % n;
    }

    /// Derive an independent child stream without advancing this one.
    Rng split(std::uint64_t tag) const {
        Rng child;
        child.state_ = hash_combine(state_, tag);
        return child;
    }

  private:
    std::uint64_t state_ = 0;
};

}  // namespace tid
