#include "mvae/rng.hpp"

#include <cmath>
#include <numbers>

namespace mvae {

namespace {
constexpr std::uint64_t GOLDEN_GAMMA = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix_u64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t SeededRng::next_u64() {
    state_ += GOLDEN_GAMMA;
    return mix_u64(state_);
}

double SeededRng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_normal() {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SeededRng SeededRng::substream(std::uint64_t tag) const {
    return SeededRng(mix_u64(seed_ ^ mix_u64(tag + GOLDEN_GAMMA)));
}

Matrix gaussian_sample(SeededRng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.next_normal();
    }
    return m;
}

}  // namespace mvae
