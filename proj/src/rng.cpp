#include "efenav/rng.hpp"

#include <cmath>

namespace efenav::rng {

double uniform01(std::uint64_t key, std::uint64_t lane) {
    const std::uint64_t h = mix64(key ^ mix64(lane + kGamma));
    // 53 mantissa bits, shifted into (0, 1] so log() below is always finite.
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

double normal(std::uint64_t key, std::uint64_t lane_pair) {
    const double u1 = uniform01(key, 2 * lane_pair);
    const double u2 = uniform01(key, 2 * lane_pair + 1);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

Vec normal_vec(std::uint64_t key, int dim, std::uint64_t lane_pair_offset) {
    Vec z(dim);
    for (int i = 0; i < dim; ++i) {
        z(i) = normal(key, lane_pair_offset + static_cast<std::uint64_t>(i));
    }
    return z;
}

}  // namespace efenav::rng
