#pragma once

#include <cstdint>
#include <vector>

namespace rwdisc {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless counter-based generator: the word for (seed, stream, counter) is a
/// pure function of its arguments, so any step's randomness can be
/// regenerated without replaying earlier steps.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed) : seed_(seed) {}

    constexpr std::uint64_t word(std::uint64_t stream, std::uint64_t counter) const {
        return mix64(mix64(mix64(seed_) ^ stream) ^ counter);
    }

    /// Uniform +-1 vector of length `dim` for walk step `k`.
    std::vector<double> signs(std::uint64_t k, int dim) const {
        std::vector<double> r(static_cast<std::size_t>(dim));
        std::uint64_t bits = 0;
        for (int j = 0; j < dim; ++j) {
            if (j % 64 == 0) bits = word(k, static_cast<std::uint64_t>(j / 64));
            r[j] = (bits & 1U) ? 1.0 : -1.0;
            bits >>= 1;
        }
        return r;
    }

    constexpr std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

/// Sequential generator for instance construction and baselines. Uses only
/// integer arithmetic and explicit conversions, so streams are identical on
/// every platform (unlike std distributions).
class SeqRng {
public:
    explicit constexpr SeqRng(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) by rejection; bound > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t v = next();
        while (v >= limit) v = next();
        return v % bound;
    }

    double sign() { return (next() >> 63) ? 1.0 : -1.0; }

    /// Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::uint64_t state_;
};

}  // namespace rwdisc
