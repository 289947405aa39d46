#ifndef MVAE_RNG_HPP
#define MVAE_RNG_HPP

#include <cstdint>

#include "mvae/matrix.hpp"

namespace mvae {

// Counter-based generator built on the splitmix64 mixing function.
// Equal seeds give bit-identical draw sequences on a given platform;
// across platforms normals agree up to libm rounding in log and cos.
// std::mt19937 plus std::normal_distribution is avoided on purpose:
// the distribution's output sequence is implementation-defined.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 random bits.
    double next_uniform();
    // Standard normal via the Box-Muller cosine branch. Consumes exactly
    // two uniforms per call; nothing is cached between calls.
    double next_normal();

    // Independent stream derived from the original seed and the tag only,
    // so it does not depend on how far this stream has advanced.
    SeededRng substream(std::uint64_t tag) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

// rows x cols matrix of independent standard normals drawn from rng.
Matrix gaussian_sample(SeededRng& rng, std::size_t rows, std::size_t cols);

// The splitmix64 finalizer, exposed for seed and tag hashing.
std::uint64_t mix_u64(std::uint64_t x);

}  // namespace mvae

#endif
