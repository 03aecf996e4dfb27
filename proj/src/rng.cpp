#include "fracmfg/rng.hpp"

#include <cmath>
#include <numbers>

namespace fracmfg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t a = splitmix64(seed);
    std::uint64_t b = splitmix64(stream ^ 0x5851f42d4c957f2dULL);
    std::uint64_t c = splitmix64(a ^ b);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

PathRng::PathRng(std::uint64_t seed, std::uint64_t stream) : eng_(make_engine(seed, stream)) {}

double PathRng::uniform() {
    // 53 random bits, shifted off zero
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
}

double PathRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double r = std::sqrt(-2.0 * std::log(uniform()));
    double th = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
}

double PathRng::exponential() { return -std::log(uniform()); }

}  // namespace fracmfg
