#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ivtest {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Deterministic random stream. Substreams derived from a master seed by
/// hashing (purpose, index) are independent of scheduling, so parallel runs
/// reproduce serial ones bit for bit.
class Rng {
public:
    enum Purpose : std::uint64_t {
        kBootstrap = 1,
        kDataGen = 2,
        kGeneric = 3,
    };

    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    static Rng substream(std::uint64_t master, std::uint64_t purpose, std::uint64_t index) {
        std::uint64_t s = splitmix64(master);
        s = splitmix64(s ^ (0xD1B54A32D192ED03ull * (purpose + 1)));
        s = splitmix64(s ^ (0x8CB92BA72F3D8DD7ull * (index + 1)));
        return Rng(s);
    }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform index in [0, n).
    std::int64_t index_below(std::int64_t n) {
        auto i = static_cast<std::int64_t>(u01() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    /// Standard normal via Box-Muller (two uniforms per variate, no caching).
    double normal() {
        double u1 = u01();
        while (u1 <= 0.0) u1 = u01();
        const double u2 = u01();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace ivtest
