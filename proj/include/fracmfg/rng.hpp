#pragma once

#include <cstdint>
#include <random>

namespace fracmfg {

/// Independent random stream for one Monte Carlo path, keyed by (seed, stream).
/// Uniforms and normals are generated here rather than through the
/// std distributions so results do not depend on the standard library vendor.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t stream);

    double uniform();  // open interval (0, 1)
    double normal();
    double exponential();

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fracmfg
