#pragma once

// Portable seeded random numbers. std::mt19937_64 is bit-specified by the
// standard; the distributions below are implemented here because the
// standard library ones are not reproducible across implementations.

#include <cstdint>
#include <random>

namespace cellwise {

/// Independent substreams of one master seed.
enum class Stream : std::uint64_t { Matrix = 1, Data = 2, Positions = 3, Values = 4 };

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Generator for (seed, replication, stream), mixed with splitmix64.
    static Rng substream(std::uint64_t seed, std::uint64_t replication, Stream stream);

    std::uint64_t bits() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, n), unbiased.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal (Marsaglia polar method).
    double normal();
    /// Gamma(shape, 1) (Marsaglia-Tsang).
    double gamma(double shape);
    double beta(double a, double b);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace cellwise
