#pragma once

// Seeded random streams with a fixed draw discipline.
//
// Every source of randomness in a run is a named stream derived from the one
// root seed, so changing one knob (e.g. the charging probability) never
// perturbs draws consumed elsewhere (e.g. the data partition). All samplers
// are implemented on top of raw 64-bit draws rather than std distributions,
// which keeps replay bit-exact across standard library implementations.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ehfl {

enum class StreamPurpose : std::uint64_t {
    Charging = 1,   // one stream per client
    Grouping = 2,
    HubElection = 3,
    Partition = 4,
    Batching = 5,
    TaskGen = 6,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

class RandomStream {
public:
    RandomStream() : eng_(0) {}

    RandomStream(std::uint64_t root_seed, StreamPurpose purpose, std::uint64_t index = 0)
        : eng_(detail::splitmix64(
              detail::splitmix64(detail::splitmix64(root_seed) ^ static_cast<std::uint64_t>(purpose)) ^
              index)) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform double in [0, 1) with 53 random bits; consumes exactly one draw.
    double next_canonical() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n); rejection sampling, unbiased.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t rem = (UINT64_MAX % n + 1) % n;  // 2^64 mod n
        const std::uint64_t lim = 0 - rem;
        std::uint64_t v = next_u64();
        while (rem != 0 && v >= lim) v = next_u64();
        return v % n;
    }

    /// Standard normal via Box-Muller; consumes exactly two draws.
    double normal() {
        const double u1 = 1.0 - next_canonical();  // (0, 1], log-safe
        const double u2 = next_canonical();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Gamma(alpha, 1) via Marsaglia-Tsang squeeze.
    double gamma(double alpha) {
        if (alpha < 1.0) {
            const double u = 1.0 - next_canonical();
            return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            const double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = 1.0 - next_canonical();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace ehfl
