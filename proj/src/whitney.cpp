#include "paratrunc/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "paratrunc/error.hpp"
#include "paratrunc/parallel.hpp"

namespace paratrunc {

namespace {

constexpr double kInf = 1e300;

// Squared 1D distance transform (Felzenszwalb-Huttenlocher) over a strided
// line; f holds 0 at sites and kInf elsewhere.
void dt1d(const double* f, double* d, int n, std::size_t stride, std::vector<int>& v, std::vector<double>& zz) {
  v.assign(n, 0);
  zz.assign(n + 1, 0.0);
  auto fv = [&](int q) { return f[q * stride]; };
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (fv(q) >= kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      zz[0] = -kInf;
      zz[1] = kInf;
      continue;
    }
    auto cut = [&](int p) { return ((fv(q) + double(q) * q) - (fv(p) + double(p) * p)) / (2.0 * (q - p)); };
    double s = cut(v[k]);
    while (s <= zz[k]) {
      --k;
      s = cut(v[k]);
    }
    ++k;
    v[k] = q;
    zz[k] = s;
    zz[k + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q * stride] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (zz[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q * stride] = dq * dq + fv(v[j]);
  }
}

double quintic(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

// 1 on [0, a], 0 on [b, ∞).
double step_down(double u, double a, double b) { return 1.0 - quintic((u - a) / (b - a)); }

}  // namespace

bool in_scaled(const GridSpec& g, const Cylinder& q, double alpha, double sigma, int k, int i, int j) {
  const double r = sigma * q.r;
  const double dk = std::abs(k - q.k);
  if (dk * g.tau > alpha * r * r * (1.0 + kGeomSlack)) return false;
  const double di = i - q.i;
  const double dj = j - q.j;
  const double rho = r / g.h;
  return di * di + dj * dj <= rho * rho * (1.0 + 2.0 * kGeomSlack);
}

std::vector<double> complement_distance(const Mask& o, const GridSpec& g, double alpha) {
  if (o.size() != g.nodes()) fail("mask size does not match the grid");
  const std::size_t plane = g.stride(0);
  // Squared spatial distance (in node units) to the complement, per slice.
  std::vector<double> sq(g.nodes());
  for (std::size_t z = 0; z < g.nodes(); ++z) sq[z] = o[z] ? kInf : 0.0;
  std::vector<double> tmp(g.nodes());
  std::vector<int> v;
  std::vector<double> zz;
  for (int k = 0; k < g.nt; ++k) {
    for (int j = 0; j < g.n[1]; ++j) {
      const std::size_t base = g.node(k, 0, j);
      dt1d(sq.data() + base, tmp.data() + base, g.n[0], g.stride(1), v, zz);
    }
    if (g.m == 2) {
      for (int i = 0; i < g.n[0]; ++i) {
        const std::size_t base = g.node(k, i, 0);
        dt1d(tmp.data() + base, sq.data() + base, g.n[1], 1, v, zz);
      }
    } else {
      std::copy(tmp.begin() + k * plane, tmp.begin() + (k + 1) * plane, sq.begin() + k * plane);
    }
  }
  std::vector<double> d(g.nodes(), 0.0);
  parallel_for(g.nodes(), [&](std::size_t z) {
    if (!o[z]) return;
    const auto c = g.coords(z);
    const std::size_t p = z % plane;
    double best = kInf;
    for (int dk = 0; dk < g.nt; ++dk) {
      const double dt = std::sqrt(dk * g.tau / alpha);
      if (dt >= best) break;
      for (int sgn : {-1, 1}) {
        if (dk == 0 && sgn > 0) continue;
        const int kk = c[0] + sgn * dk;
        if (kk < 0 || kk >= g.nt) continue;
        const double s = sq[kk * plane + p];
        if (s >= kInf) continue;
        best = std::min(best, std::max(dt, g.h * std::sqrt(s)));
      }
    }
    d[z] = best;
  });
  return d;
}

WhitneyCover whitney_cover(const Mask& o, const GridSpec& g, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("whitney: alpha must be positive and finite");
  if (o.size() != g.nodes()) fail("whitney: mask size does not match the grid");
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    if (!o[z]) continue;
    const auto c = g.coords(z);
    if (c[0] == 0 || c[0] == g.nt - 1 || c[1] == 0 || c[1] == g.n[0] - 1 ||
        (g.m == 2 && (c[2] == 0 || c[2] == g.n[1] - 1))) {
      fail("whitney: the open set reaches the grid boundary; extend the grid first");
    }
  }
  WhitneyCover cover;
  cover.grid = g;
  cover.alpha = alpha;
  const std::vector<double> d = complement_distance(o, g, alpha);

  // Dyadic exponent per node: largest r = h 2^e with 8r < d.
  std::vector<int> level(g.nodes(), std::numeric_limits<int>::min());
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    if (!o[z]) continue;
    int e = static_cast<int>(std::floor(std::log2(d[z] / (8.0 * g.h))));
    while (8.0 * std::ldexp(g.h, e) * (1.0 + 2e-12) >= d[z]) --e;
    while (8.0 * std::ldexp(g.h, e + 1) * (1.0 + 2e-12) < d[z]) ++e;
    level[z] = e;
  }
  std::map<int, std::vector<std::size_t>, std::greater<int>> by_level;
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    if (o[z]) by_level[level[z]].push_back(z);
  }

  std::vector<std::uint8_t> covered(g.nodes(), 0);
  auto select = [&](std::size_t z, double r) {
    const auto c = g.coords(z);
    const Cylinder q{c[0], c[1], c[2], r};
    cover.cylinders.push_back(q);
    for_each_node(g, cylinder_shape(g, 0.5 * r, alpha), q, [&](std::size_t y) { covered[y] = 1; });
  };
  for (const auto& [e, nodes] : by_level) {
    const double r = std::ldexp(g.h, e);
    // Lattice pass: spacing so that half-cylinders of neighbouring lattice
    // points overlap, which keeps the greedy pass short.
    const int sk = std::max(1, static_cast<int>(std::floor(0.5 * alpha * r * r / g.tau)));
    const double sx_len = g.m == 2 ? r / std::sqrt(2.0) : r;
    const int sx = std::max(1, static_cast<int>(std::floor(sx_len / g.h)));
    for (std::size_t z : nodes) {
      const auto c = g.coords(z);
      if (c[0] % sk || c[1] % sx || (g.m == 2 && c[2] % sx)) continue;
      if (!covered[z]) select(z, r);
    }
    for (std::size_t z : nodes) {
      if (!covered[z]) select(z, r);
    }
  }
  return cover;
}

double cover_bump(const GridSpec& g, const Cylinder& q, double alpha, int k, int i, int j) {
  const double ut = std::abs(k - q.k) * g.tau / (alpha * q.r * q.r);
  const double ux = std::hypot(double(i - q.i), double(j - q.j)) * g.h / q.r;
  // Inner and outer thresholds of ½Q and ¾Q: (½)² = ¼ and (¾)² = 9/16 in time.
  return step_down(ut, 0.25, 0.5625) * step_down(ux, 0.5, 0.75);
}

void partition_of_unity(WhitneyCover& cover) {
  const GridSpec& g = cover.grid;
  const std::size_t nj = cover.cylinders.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> theta(nj);
  std::vector<double> total(g.nodes(), 0.0);
  for (std::size_t jx = 0; jx < nj; ++jx) {
    const Cylinder& q = cover.cylinders[jx];
    for_each_node(g, cylinder_shape(g, 0.75 * q.r, cover.alpha), q, [&](std::size_t z) {
      const auto c = g.coords(z);
      const double t = cover_bump(g, q, cover.alpha, c[0], c[1], c[2]);
      if (t > 0.0) {
        theta[jx].push_back({z, t});
        total[z] += t;
      }
    });
  }
  cover.rho.assign(nj, {});
  for (std::size_t jx = 0; jx < nj; ++jx) {
    cover.rho[jx].reserve(theta[jx].size());
    for (const auto& [z, t] : theta[jx]) {
      if (!(total[z] > 0.0)) fail_numeric("partition of unity: zero denominator");
      cover.rho[jx].push_back({z, t / total[z]});
    }
  }
  // A_k via node lists of the closed ¾-cylinders.
  std::vector<std::vector<int>> at(g.nodes());
  for (std::size_t jx = 0; jx < nj; ++jx) {
    const Cylinder& q = cover.cylinders[jx];
    for_each_node(g, cylinder_shape(g, 0.75 * q.r, cover.alpha), q,
                  [&](std::size_t z) { at[z].push_back(static_cast<int>(jx)); });
  }
  cover.neighbours.assign(nj, {});
  for (const auto& list : at) {
    for (int a : list) {
      for (int b : list) cover.neighbours[a].push_back(b);
    }
  }
  for (auto& nb : cover.neighbours) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
}

CoverDiagnostics check_cover(const WhitneyCover& cover, const Mask& o, bool measure_4q) {
  const GridSpec& g = cover.grid;
  const double alpha = cover.alpha;
  const auto& cyl = cover.cylinders;
  CoverDiagnostics dg;
  dg.cylinders = cyl.size();

  std::vector<std::uint8_t> half(g.nodes(), 0);
  std::vector<std::vector<int>> full(g.nodes()), quarter(g.nodes());
  for (std::size_t jx = 0; jx < cyl.size(); ++jx) {
    const Cylinder& q = cyl[jx];
    for_each_node(g, cylinder_shape(g, 0.5 * q.r, alpha), q, [&](std::size_t z) { half[z] = 1; });
    for_each_node(g, cylinder_shape(g, q.r, alpha), q, [&](std::size_t z) { full[z].push_back(int(jx)); });
    for_each_node(g, cylinder_shape(g, 0.25 * q.r, alpha), q, [&](std::size_t z) { quarter[z].push_back(int(jx)); });

    bool inner_ok = true;
    for_each_node(g, cylinder_shape(g, 8.0 * q.r, alpha), q, [&](std::size_t z) { inner_ok = inner_ok && o[z]; });
    // 8Q must also stay inside the grid, otherwise part of it is unseen.
    const Shape s8 = cylinder_shape(g, 8.0 * q.r, alpha);
    const int w8 = *std::max_element(s8.wx.begin(), s8.wx.end());
    if (q.k - s8.kt < 0 || q.k + s8.kt >= g.nt || q.i - w8 < 0 || q.i + w8 >= g.n[0] ||
        (g.m == 2 && (q.j - s8.rj < 0 || q.j + s8.rj >= g.n[1]))) {
      inner_ok = false;
    }
    if (!inner_ok) ++dg.inner_violations;
    bool outer_hit = false;
    for_each_node(g, cylinder_shape(g, 16.0 * q.r, alpha), q, [&](std::size_t z) { outer_hit = outer_hit || !o[z]; });
    if (!outer_hit) ++dg.outer_violations;
  }
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    if (half[z] != (o[z] ? 1 : 0)) ++dg.half_cover_mismatch;
    dg.max_overlap = std::max(dg.max_overlap, static_cast<int>(full[z].size()));
  }
  // Pairwise checks from shared nodes.
  std::vector<std::pair<int, int>> pairs;
  for (const auto& list : full) {
    for (int a : list) {
      for (int b : list) {
        if (a < b) pairs.push_back({a, b});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (const auto& [a, b] : pairs) {
    const double ratio = cyl[a].r / cyl[b].r;
    if (ratio < 0.5 || ratio > 2.0) ++dg.radius_violations;
  }
  std::vector<std::pair<int, int>> qpairs;
  for (const auto& list : quarter) {
    for (int a : list) {
      for (int b : list) {
        if (a < b) qpairs.push_back({a, b});
      }
    }
  }
  std::sort(qpairs.begin(), qpairs.end());
  qpairs.erase(std::unique(qpairs.begin(), qpairs.end()), qpairs.end());
  dg.quarter_overlaps = qpairs.size();

  if (measure_4q) {
    std::vector<int> count(g.nodes(), 0);
    for (const Cylinder& q : cyl) {
      for_each_node(g, cylinder_shape(g, 4.0 * q.r, alpha), q, [&](std::size_t z) { ++count[z]; });
    }
    dg.max_overlap_4q = 0;
    for (std::size_t z = 0; z < g.nodes(); ++z) {
      if (o[z]) dg.max_overlap_4q = std::max(dg.max_overlap_4q, count[z]);
    }
  }

  // Intersection sizes for j ∈ A_k, counted in nodes.
  if (!cover.neighbours.empty()) {
    std::map<std::pair<int, int>, std::size_t> shared;
    for (const auto& list : full) {
      for (int a : list) {
        for (int b : list) {
          if (a < b) ++shared[{a, b}];
        }
      }
    }
    dg.min_fat_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cyl.size(); ++k) {
      dg.max_neighbours = std::max(dg.max_neighbours, static_cast<int>(cover.neighbours[k].size()));
      const double vk = cylinder_shape(g, cyl[k].r, alpha).count;
      for (int jx : cover.neighbours[k]) {
        if (jx == static_cast<int>(k)) continue;
        const auto key = std::minmax(static_cast<int>(k), jx);
        const auto it = shared.find({key.first, key.second});
        const double inter = it == shared.end() ? 0.0 : static_cast<double>(it->second);
        const double vj = cylinder_shape(g, cyl[jx].r, alpha).count;
        dg.min_fat_ratio = std::min(dg.min_fat_ratio, inter / std::max(vj, vk));
      }
    }
    if (!std::isfinite(dg.min_fat_ratio)) dg.min_fat_ratio = 1.0;
  }

  // Bump sandwich, checked on the unnormalised bumps.
  for (const Cylinder& q : cyl) {
    for_each_node(g, cylinder_shape(g, q.r, alpha), q, [&](std::size_t z) {
      const auto c = g.coords(z);
      const double t = cover_bump(g, q, alpha, c[0], c[1], c[2]);
      const bool in_half = in_scaled(g, q, alpha, 0.5, c[0], c[1], c[2]);
      const bool in_34 = in_scaled(g, q, alpha, 0.75, c[0], c[1], c[2]);
      if ((in_half && t != 1.0) || (!in_34 && t != 0.0) || t < 0.0 || t > 1.0) ++dg.bump_sandwich_violations;
    });
  }

  if (!cover.rho.empty()) {
    std::vector<double> sum(g.nodes(), 0.0);
    std::vector<double> dense(g.nodes(), 0.0);
    for (std::size_t jx = 0; jx < cyl.size(); ++jx) {
      const Cylinder& q = cyl[jx];
      for (const auto& [z, v] : cover.rho[jx]) {
        sum[z] += v;
        const auto c = g.coords(z);
        if (v > 0.0 && !in_scaled(g, q, alpha, 0.75, c[0], c[1], c[2])) ++dg.rho_support_violations;
      }
    }
    for (std::size_t z = 0; z < g.nodes(); ++z) {
      if (o[z]) dg.partition_error = std::max(dg.partition_error, std::abs(sum[z] - 1.0));
    }
    std::vector<double> local(g.nodes(), 0.0);
    for (std::size_t k = 0; k < cyl.size(); ++k) {
      const Cylinder& q = cyl[k];
      for (int jx : cover.neighbours[k]) {
        for (const auto& [z, v] : cover.rho[jx]) local[z] += v;
      }
      for_each_node(g, cylinder_shape(g, 0.75 * q.r, alpha), q, [&](std::size_t z) {
        dg.local_partition_error = std::max(dg.local_partition_error, std::abs(local[z] - 1.0));
      });
      for (int jx : cover.neighbours[k]) {
        for (const auto& [z, v] : cover.rho[jx]) local[z] = 0.0;
      }
    }
    // Difference-quotient seminorms of each ρ_j.
    for (std::size_t jx = 0; jx < cyl.size(); ++jx) {
      const Cylinder& q = cyl[jx];
      for (const auto& [z, v] : cover.rho[jx]) dense[z] = v;
      const Shape s = cylinder_shape(g, q.r, alpha);
      double sup = 0.0, grad = 0.0, hess = 0.0, tder = 0.0;
      auto val = [&](int k, int i, int j) {
        if (k < 0 || i < 0 || j < 0 || k >= g.nt || i >= g.n[0] || j >= g.n[1]) return 0.0;
        return dense[g.node(k, i, j)];
      };
      for_each_node(g, s, q, [&](std::size_t z) {
        const auto c = g.coords(z);
        const int k = c[0], i = c[1], j = c[2];
        const double v = val(k, i, j);
        sup = std::max(sup, std::abs(v));
        tder = std::max(tder, std::abs(val(k + 1, i, j) - v) / g.tau);
        const double gx = (val(k, i + 1, j) - v) / g.h;
        const double gy = g.m == 2 ? (val(k, i, j + 1) - v) / g.h : 0.0;
        grad = std::max(grad, std::hypot(gx, gy));
        const double hxx = (val(k, i + 1, j) - 2 * v + val(k, i - 1, j)) / (g.h * g.h);
        double h2 = hxx * hxx;
        if (g.m == 2) {
          const double hyy = (val(k, i, j + 1) - 2 * v + val(k, i, j - 1)) / (g.h * g.h);
          const double hxy = (val(k, i + 1, j + 1) - val(k, i + 1, j) - val(k, i, j + 1) + v) / (g.h * g.h);
          h2 += hyy * hyy + 2 * hxy * hxy;
        }
        hess = std::max(hess, std::sqrt(h2));
      });
      const double c3 = sup + q.r * grad + q.r * q.r * hess + alpha * q.r * q.r * tder;
      dg.derivative_bound = std::max(dg.derivative_bound, c3);
      for (const auto& [z, v] : cover.rho[jx]) dense[z] = 0.0;
    }
  }
  return dg;
}

}  // namespace paratrunc
