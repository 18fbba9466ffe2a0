#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "paratrunc/fields.hpp"
#include "paratrunc/grid.hpp"
#include "paratrunc/maximal.hpp"
#include "paratrunc/whitney.hpp"

namespace paratrunc::testing {

// Union of a few α-parabolic balls kept `margin` nodes away from every face.
inline Mask random_open_set(const GridSpec& g, double alpha, std::uint64_t seed, int balls, int margin) {
  std::mt19937_64 rng(seed);
  Mask o(g.nodes(), 0);
  for (int b = 0; b < balls; ++b) {
    const double tc = g.t(margin) + uniform01(rng) * (g.t(g.nt - 1 - margin) - g.t(margin));
    const double xc = g.x(0, margin) + uniform01(rng) * (g.x(0, g.n[0] - 1 - margin) - g.x(0, margin));
    const double yc = g.m == 2 ? g.x(1, margin) + uniform01(rng) * (g.x(1, g.n[1] - 1 - margin) - g.x(1, margin)) : 0.0;
    const double r = (0.05 + 0.15 * uniform01(rng)) * (g.n[0] - 1) * g.h;
    for (std::size_t z = 0; z < g.nodes(); ++z) {
      const auto c = g.coords(z);
      if (c[0] < margin || c[0] > g.nt - 1 - margin || c[1] < margin || c[1] > g.n[0] - 1 - margin) continue;
      if (g.m == 2 && (c[2] < margin || c[2] > g.n[1] - 1 - margin)) continue;
      const double dx = std::hypot(g.x(0, c[1]) - xc, g.m == 2 ? g.x(1, c[2]) - yc : 0.0);
      const double dt = std::abs(g.t(c[0]) - tc);
      if (std::max(std::sqrt(dt / alpha), dx) < r) o[z] = 1;
    }
  }
  return o;
}

// Brute-force α-parabolic distance from node z to the nearest node off O.
inline double brute_distance(const Mask& o, const GridSpec& g, double alpha, std::size_t z) {
  const auto c = g.coords(z);
  double best = INFINITY;
  for (std::size_t y = 0; y < g.nodes(); ++y) {
    if (o[y]) continue;
    const auto d = g.coords(y);
    const double dx = std::hypot(double(d[1] - c[1]), double(d[2] - c[2])) * g.h;
    const double dt = std::abs(d[0] - c[0]) * g.tau;
    best = std::min(best, std::max(std::sqrt(dt / alpha), dx));
  }
  return best;
}

struct Member {
  bool operator()(const GridSpec& g, double r, double alpha, int dk, int di, int dj) const {
    const double dt = std::abs(dk) * g.tau;
    const double dx2 = (double(di) * di + double(dj) * dj) * g.h * g.h;
    return dt <= alpha * r * r * (1.0 + kGeomSlack) && dx2 <= r * r * (1.0 + 2.0 * kGeomSlack);
  }
};

// Exhaustive M^α over every node-centred cylinder of the radius list. The
// normaliser is the lattice count of the whole cylinder (f = 0 off the grid).
inline Field brute_maximal(const Field& f, double alpha, const std::vector<double>& radii) {
  const GridSpec& g = f.grid;
  Member in;
  Field out(g, 1);
  const int big = 4 * (g.nt + g.n[0] + g.n[1]);
  for (double r : radii) {
    // full lattice count
    double count = 0.0;
    const int rk = std::min(big, static_cast<int>(alpha * r * r / g.tau) + 1);
    const int rx = std::min(big, static_cast<int>(r / g.h) + 1);
    for (int dk = -rk; dk <= rk; ++dk)
      for (int di = -rx; di <= rx; ++di)
        for (int dj = g.m == 2 ? -rx : 0; dj <= (g.m == 2 ? rx : 0); ++dj) count += in(g, r, alpha, dk, di, dj);
    for (std::size_t c = 0; c < g.nodes(); ++c) {
      const auto cc = g.coords(c);
      double sum = 0.0;
      std::vector<std::size_t> members;
      for (std::size_t z = 0; z < g.nodes(); ++z) {
        const auto zc = g.coords(z);
        if (!in(g, r, alpha, zc[0] - cc[0], zc[1] - cc[1], zc[2] - cc[2])) continue;
        sum += f.norm_at(z);
        members.push_back(z);
      }
      const double avg = sum / count;
      for (std::size_t z : members) out.v[z] = std::max(out.v[z], avg);
    }
  }
  return out;
}

}  // namespace paratrunc::testing
