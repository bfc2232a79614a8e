#pragma once

#include <cstdint>

#include "efenav/gaussian.hpp"

namespace efenav {

// Counter-based random numbers: every draw is a pure function of
// (seed, trial, step, kind, lane), so environment noise is identical across
// agents and independent of how much randomness anything else consumes.
// Mixing is a SplitMix64-style finalizer chain; portable and platform-fixed.

enum class DrawKind : std::uint64_t {
    ProcessNoise = 1,
    MeasurementNoise = 2,
    PlannerStart = 3,
    OracleSample = 4,
    Ensemble = 5,
};

namespace rng {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z += kGamma;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t trial, std::uint64_t step,
                            DrawKind kind) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ (trial + kGamma));
    h = mix64(h ^ (step + 2 * kGamma));
    h = mix64(h ^ static_cast<std::uint64_t>(kind));
    return h;
}

// Uniform on (0, 1]; lane indexes independent draws under one key.
double uniform01(std::uint64_t key, std::uint64_t lane);

// Standard normal via Box-Muller on lanes (2i, 2i+1).
double normal(std::uint64_t key, std::uint64_t lane_pair);

// Vector of dim iid standard normals starting at lane_pair offset.
Vec normal_vec(std::uint64_t key, int dim, std::uint64_t lane_pair_offset = 0);

}  // namespace rng

}  // namespace efenav
