#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "paratrunc/grid.hpp"

namespace paratrunc {

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit Mersenne
/// twister; identical on every platform, unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct FieldPair {
  Field w;
  Field g;
};

/// Flux G with divergence(G) = dt_backward(w) exactly: cumulative sums of the
/// time difference along each spatial axis, split evenly between axes.
Field flux_from(const Field& w);

/// Generated test data on a base grid, zero on ∂Ω and at t = −t0.
///   zero    w ≡ 0
///   smooth  sin in time times a product of sines in space
///   spike   smooth plus a narrow seeded bump
///   random  a few seeded Fourier modes with polynomial time profiles
FieldPair make_preset(const std::string& name, const GridSpec& g, std::uint64_t seed);

}  // namespace paratrunc
