#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace hfrl {

/// Mixes a master seed with a stream id into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Portable random source.
///
/// The standard distributions are implementation-defined, so every draw here
/// is built directly from the mt19937_64 output. Results are identical across
/// compilers and platforms for the same seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n);
    double normal();
    double exponential();
    bool bernoulli(double p) { return uniform() < p; }
    /// Index drawn from a (not necessarily normalized) nonnegative weight vector.
    std::size_t categorical(std::span<const double> weights);

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace hfrl
