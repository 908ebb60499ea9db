#pragma once

#include <cstdint>
#include <random>

namespace gwmax {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic random source. Every Monte Carlo work item gets its own Rng
/// derived from (seed, stream, substream); there is no shared RNG state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    static Rng for_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0)
    {
        std::uint64_t h = splitmix64(seed);
        h = splitmix64(h ^ stream);
        h = splitmix64(h ^ (substream * 0xd6e8feb86659fd93ULL));
        return Rng(h);
    }

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on {0, ..., n-1}; unbiased by rejection.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = -n % n;
        std::uint64_t r = engine_();
        while (r < limit) r = engine_();
        return r % n;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace gwmax
