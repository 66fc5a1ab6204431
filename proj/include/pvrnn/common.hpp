#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <random>

namespace pvrnn {

// Configuration problems (bad shapes, invalid values, malformed files).
// The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite losses, diverged optimizations and the like. Exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pre-exp log-stddev arguments are clamped to this range in every head.
inline constexpr double kLogSigmaClamp = 10.0;

// Joint angles live in degrees [-180, 180] on disk and in metrics, and are
// scaled to [-1, 1] at the network boundary.
inline constexpr double kJointScaleDeg = 180.0;

// Planar 3-link arm lengths; their sum bounds hand coordinates, which is
// also the exteroception scale at the network boundary.
inline constexpr double kLinkLengths[3] = {1.0, 0.8, 0.5};
inline constexpr double kArmReach = 2.3;

inline constexpr int kProprioDim = 6;
inline constexpr int kExteroDim = 4;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a stream index.
// Used to give epochs, sweep cells and agents decoupled deterministic RNGs.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream));
}

using Rng = std::mt19937_64;

}  // namespace pvrnn
