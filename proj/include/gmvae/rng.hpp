#pragma once

#include <cstdint>
#include <random>

namespace gmvae {

/// Deterministic random stream. One instance per thread of execution; no
/// global state. Child streams are derived with split(), which hashes
/// (seed, stream index) through splitmix64 so that streams are stable across
/// runs and independent of draw order in the parent.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Standard normal (Marsaglia polar method, deterministic draw order).
    double normal();
    /// Gamma(shape, 1) via Marsaglia-Tsang rejection (log test only),
    /// with shape augmentation for shape < 1.
    double gamma(double shape);

    /// Derived stream: Rng(splitmix64(seed + (stream+1)*GOLDEN)).
    Rng split(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

/// splitmix64 finalizer; used by Rng::split and exposed for tests.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace gmvae
