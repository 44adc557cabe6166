#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace partforge {

// Deterministic RNG used everywhere randomness is needed. std::mt19937_64 has a
// standard-mandated output sequence; the std distributions do not, so the
// uniform/normal transforms are spelled out here to keep results bit-identical
// across compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Modulo bias is < 2^-40 for any n used here.
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

    // Standard normal via Box-Muller. No cached spare: one draw consumes two
    // uniforms, which keeps the stream position a pure function of draw count.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Fisher-Yates in-place shuffle.
    template <typename Swappable>
    void shuffle(Swappable& items) {
        const std::size_t n = items.size();
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

    // Derive an independent child stream, e.g. one per asset or per step.
    Rng fork(std::uint64_t tag) const {
        return Rng(splitmix64(splitmix64(seed_) ^ splitmix64(tag ^ 0x517cc1b727220a95ULL)));
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace partforge
