#include "hfrl/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hfrl {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // splitmix64 over the pair
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    if (n == 0)
        throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::exponential() {
    double u;
    do {
        u = uniform();
    } while (u <= 0.0);
    return -std::log(u);
}

std::size_t Rng::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights)
        total += w > 0.0 ? w : 0.0;
    if (!(total > 0.0))
        throw std::invalid_argument("categorical: weights sum to zero");
    const double u = uniform() * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0)
            continue;
        acc += weights[i];
        last = i;
        if (u < acc)
            return i;
    }
    return last;
}

} // namespace hfrl
