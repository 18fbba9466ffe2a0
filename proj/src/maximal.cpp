#include "paratrunc/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "paratrunc/error.hpp"
#include "paratrunc/parallel.hpp"

namespace paratrunc {

Shape cylinder_shape(const GridSpec& g, double r, double alpha) {
  if (!(r > 0.0) || !(alpha > 0.0)) fail("cylinder needs r > 0 and alpha > 0");
  Shape s;
  const double tt = alpha * r * r / g.tau * (1.0 + kGeomSlack);
  s.kt = tt >= g.nt ? g.nt : static_cast<int>(std::floor(tt));
  const double rho = r / g.h;
  const double rho2 = rho * rho * (1.0 + 2.0 * kGeomSlack);
  // Spatial reach beyond the grid adds nothing but cost; the lattice count
  // still uses the full radius.
  const int cap = std::max(g.n[0], g.n[1]) + 1;
  if (rho > 1e5) fail("cylinder radius too large for the grid");
  const int rmax = static_cast<int>(std::floor(std::sqrt(rho2)));
  s.rj = g.m == 2 ? std::min(rmax, cap) : 0;
  s.wx.resize(2 * s.rj + 1);
  std::size_t cols = 0;
  for (int dj = -rmax; dj <= rmax && g.m == 2; ++dj) {
    const int w = static_cast<int>(std::floor(std::sqrt(std::max(0.0, rho2 - double(dj) * dj))));
    cols += 2 * static_cast<std::size_t>(w) + 1;
    if (std::abs(dj) <= s.rj) s.wx[dj + s.rj] = std::min(w, cap);
  }
  if (g.m == 1) {
    s.wx[0] = std::min(rmax, cap);
    cols = 2 * static_cast<std::size_t>(rmax) + 1;
  }
  s.count = (2.0 * std::floor(tt) + 1.0) * static_cast<double>(cols);
  return s;
}

double parabolic_distance(double alpha, double dt, double dx) {
  return std::max(std::sqrt(std::abs(dt) / alpha), std::abs(dx));
}

std::vector<double> dyadic_radii(const GridSpec& g, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be positive and finite");
  std::vector<double> out;
  double r = g.h;
  for (int guard = 0; guard < 200; ++guard) {
    r *= 0.5;
    out.push_back(r);
    if (alpha * r * r < g.tau) break;
  }
  std::reverse(out.begin(), out.end());
  const double span_x = std::hypot((g.n[0] - 1) * g.h, (g.n[1] - 1) * g.h);
  const double span_t = (g.nt - 1) * g.tau;
  r = g.h;
  for (int guard = 0; guard < 200; ++guard) {
    out.push_back(r);
    if (r >= span_x && alpha * r * r >= span_t) break;
    r *= 2.0;
  }
  return out;
}

double mean_abs(const Field& f, const Cylinder& q, double alpha) {
  const Shape s = cylinder_shape(f.grid, q.r, alpha);
  double acc = 0.0;
  for_each_node(f.grid, s, q, [&](std::size_t z) { acc += f.norm_at(z); });
  return acc / s.count;
}

std::vector<double> mean_over(const Field& f, const Cylinder& q, double alpha) {
  const Shape s = cylinder_shape(f.grid, q.r, alpha);
  std::vector<double> acc(f.rank, 0.0);
  std::size_t n = 0;
  for_each_node(f.grid, s, q, [&](std::size_t z) {
    for (int c = 0; c < f.rank; ++c) acc[c] += f.at(z, c);
    ++n;
  });
  if (n == 0) fail("cylinder lies outside the grid");
  for (double& a : acc) a /= static_cast<double>(n);
  return acc;
}

double sharp_mq(const Field& a, const Cylinder& q, double alpha) {
  const std::vector<double> mu = mean_over(a, q, alpha);
  const Shape s = cylinder_shape(a.grid, q.r, alpha);
  double acc = 0.0;
  std::size_t n = 0;
  for_each_node(a.grid, s, q, [&](std::size_t z) {
    double d2 = 0.0;
    for (int c = 0; c < a.rank; ++c) d2 += (a.at(z, c) - mu[c]) * (a.at(z, c) - mu[c]);
    acc += std::sqrt(d2);
    ++n;
  });
  return acc / static_cast<double>(n) / q.r;
}

double n_flux(const Field& g, const Cylinder& q, double alpha) { return mean_abs(g, q, alpha); }

namespace {

// Test function on the bounding box of a clipped cylinder.
struct LocalBump {
  int k0 = 0, i0 = 0, j0 = 0;
  int nk = 0, ni = 0, nj = 0;
  std::vector<double> xi;
  bool empty = true;

  std::size_t at(int k, int i, int j) const {
    return (static_cast<std::size_t>(k) * ni + i) * nj + j;
  }
};

double poly_bump(double u) { return u >= 1.0 ? 0.0 : std::pow(1.0 - u * u, 3); }

LocalBump make_bump(const GridSpec& g, const Shape& s, const Cylinder& q, double alpha, int idx) {
  LocalBump b;
  b.k0 = std::max(0, q.k - s.kt);
  const int k1 = std::min(g.nt - 1, q.k + s.kt);
  const int wmax = *std::max_element(s.wx.begin(), s.wx.end());
  b.i0 = std::max(0, q.i - wmax);
  const int i1 = std::min(g.n[0] - 1, q.i + wmax);
  b.j0 = std::max(0, q.j - s.rj);
  const int j1 = std::min(g.n[1] - 1, q.j + s.rj);
  b.nk = k1 - b.k0 + 1;
  b.ni = i1 - b.i0 + 1;
  b.nj = j1 - b.j0 + 1;
  b.xi.assign(static_cast<std::size_t>(b.nk) * b.ni * b.nj, 0.0);

  auto inside = [&](int k, int i, int j) {
    if (k < 0 || i < 0 || j < 0 || k >= g.nt || i >= g.n[0] || j >= g.n[1]) return false;
    if (std::abs(k - q.k) > s.kt) return false;
    const int dj = j - q.j;
    if (std::abs(dj) > s.rj) return false;
    return std::abs(i - q.i) <= s.wx[dj + s.rj];
  };

  static constexpr double kScales[3] = {1.0, 0.5, 0.25};
  const double sc = kScales[idx / 5];
  const int off = idx % 5;
  const double at = alpha * q.r * q.r;
  const double shift = 0.5 * (1.0 - sc);
  double tc = 0.0, xc = 0.0;
  if (off == 1) tc = shift * at;
  if (off == 2) tc = -shift * at;
  if (off == 3) xc = shift * q.r;
  if (off == 4) xc = -shift * q.r;

  for (int k = 0; k < b.nk; ++k) {
    for (int i = 0; i < b.ni; ++i) {
      for (int j = 0; j < b.nj; ++j) {
        const int gk = b.k0 + k, gi = b.i0 + i, gj = b.j0 + j;
        if (!inside(gk, gi, gj) || !inside(gk - 1, gi, gj) || !inside(gk, gi - 1, gj)) continue;
        if (g.m == 2 && !inside(gk, gi, gj - 1)) continue;
        const double dt = (gk - q.k) * g.tau - tc;
        const double dx = (gi - q.i) * g.h - xc;
        const double dy = g.m == 2 ? (gj - q.j) * g.h : 0.0;
        b.xi[b.at(k, i, j)] = poly_bump(std::abs(dt) / (sc * at)) * poly_bump(std::hypot(dx, dy) / (sc * q.r));
      }
    }
  }

  double sup = 0.0, grad = 0.0, tder = 0.0;
  for (int k = 0; k < b.nk; ++k) {
    for (int i = 0; i < b.ni; ++i) {
      for (int j = 0; j < b.nj; ++j) {
        const double v = b.xi[b.at(k, i, j)];
        sup = std::max(sup, std::abs(v));
        const double vt = k + 1 < b.nk ? b.xi[b.at(k + 1, i, j)] : 0.0;
        tder = std::max(tder, std::abs(vt - v) / g.tau);
        const double vx = i + 1 < b.ni ? b.xi[b.at(k, i + 1, j)] : 0.0;
        double gsq = (vx - v) * (vx - v);
        if (g.m == 2) {
          const double vy = j + 1 < b.nj ? b.xi[b.at(k, i, j + 1)] : 0.0;
          gsq += (vy - v) * (vy - v);
        }
        grad = std::max(grad, std::sqrt(gsq) / g.h);
      }
    }
  }
  const double norm = sup + q.r * grad + at * tder;
  if (sup > 0.0 && norm > 0.0) {
    for (double& v : b.xi) v /= norm;
    b.empty = false;
  }
  return b;
}

double family_value(const Field& w, const Shape& s, const Cylinder& q, double alpha) {
  const GridSpec& g = w.grid;
  double best = 0.0;
  for (int idx = 0; idx < kFamilySize; ++idx) {
    const LocalBump b = make_bump(g, s, q, alpha, idx);
    if (b.empty) continue;
    double acc = 0.0;
    for (int k = 0; k < b.nk; ++k) {
      for (int i = 0; i < b.ni; ++i) {
        for (int j = 0; j < b.nj; ++j) {
          const double v = b.xi[b.at(k, i, j)];
          const double vt = k + 1 < b.nk ? b.xi[b.at(k + 1, i, j)] : 0.0;
          if (v == 0.0 && vt == 0.0) continue;
          acc += w.v[g.node(b.k0 + k, b.i0 + i, b.j0 + j)] * (vt - v) / g.tau;
        }
      }
    }
    best = std::max(best, std::abs(acc));
  }
  return q.r * best / s.count;
}

// Sliding-window max over [c − w, c + w] ∩ [0, n) along a strided line.
void window_max(const double* in, double* out, int n, std::size_t stride, int w) {
  if (w >= n) {
    double m = in[0];
    for (int c = 1; c < n; ++c) m = std::max(m, in[c * stride]);
    for (int c = 0; c < n; ++c) out[c * stride] = m;
    return;
  }
  std::deque<int> dq;
  int next = 0;
  for (int c = 0; c < n; ++c) {
    const int hi = std::min(n - 1, c + w);
    for (; next <= hi; ++next) {
      while (!dq.empty() && in[dq.back() * stride] <= in[next * stride]) dq.pop_back();
      dq.push_back(next);
    }
    while (dq.front() < c - w) dq.pop_front();
    out[c * stride] = in[dq.front() * stride];
  }
}

}  // namespace

double n_family(const Field& w, const Cylinder& q, double alpha) {
  if (w.rank != 1) fail("n_family: scalar field expected");
  return family_value(w, cylinder_shape(w.grid, q.r, alpha), q, alpha);
}

Field family_member(const GridSpec& g, const Cylinder& q, double alpha, int idx) {
  if (idx < 0 || idx >= kFamilySize) fail("family member index out of range");
  const Shape s = cylinder_shape(g, q.r, alpha);
  const LocalBump b = make_bump(g, s, q, alpha, idx);
  Field out(g, 1);
  for (int k = 0; k < b.nk; ++k) {
    for (int i = 0; i < b.ni; ++i) {
      for (int j = 0; j < b.nj; ++j) out.v[g.node(b.k0 + k, b.i0 + i, b.j0 + j)] = b.xi[b.at(k, i, j)];
    }
  }
  return out;
}

Field centred_means(const Field& f, double r, double alpha) {
  const GridSpec& g = f.grid;
  const Shape s = cylinder_shape(g, r, alpha);
  const std::size_t plane = g.stride(0);
  // Time-window sums via prefix sums over k.
  std::vector<double> prefix((g.nt + 1) * plane, 0.0);
  for (int k = 0; k < g.nt; ++k) {
    for (std::size_t p = 0; p < plane; ++p) {
      prefix[(k + 1) * plane + p] = prefix[k * plane + p] + f.norm_at(k * plane + p);
    }
  }
  Field out(g, 1);
  parallel_for(static_cast<std::size_t>(g.nt), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    const int lo = std::max(0, k - s.kt);
    const int hi = std::min(g.nt - 1, k + s.kt);
    // Row prefix sums along the first spatial axis for this time window.
    std::vector<double> row((g.n[0] + 1) * static_cast<std::size_t>(g.n[1]), 0.0);
    for (int j = 0; j < g.n[1]; ++j) {
      for (int i = 0; i < g.n[0]; ++i) {
        const std::size_t p = static_cast<std::size_t>(i) * g.n[1] + j;
        const double box = prefix[(hi + 1) * plane + p] - prefix[lo * plane + p];
        row[(i + 1) * static_cast<std::size_t>(g.n[1]) + j] = row[i * static_cast<std::size_t>(g.n[1]) + j] + box;
      }
    }
    for (int i = 0; i < g.n[0]; ++i) {
      for (int j = 0; j < g.n[1]; ++j) {
        double acc = 0.0;
        for (int dj = -s.rj; dj <= s.rj; ++dj) {
          const int jj = j + dj;
          if (jj < 0 || jj >= g.n[1]) continue;
          const int w = s.wx[dj + s.rj];
          const int a = std::max(0, i - w);
          const int b = std::min(g.n[0] - 1, i + w);
          acc += row[(b + 1) * static_cast<std::size_t>(g.n[1]) + jj] - row[a * static_cast<std::size_t>(g.n[1]) + jj];
        }
        out.v[g.node(k, i, j)] = acc / s.count;
      }
    }
  });
  return out;
}

Field dilate(const Field& per_centre, double r, double alpha) {
  const GridSpec& g = per_centre.grid;
  const Shape s = cylinder_shape(g, r, alpha);
  const std::size_t plane = g.stride(0);
  Field tmax(g, 1);
  for (std::size_t p = 0; p < plane; ++p) {
    window_max(per_centre.v.data() + p, tmax.v.data() + p, g.nt, plane, s.kt);
  }
  Field out(g, 1, -std::numeric_limits<double>::infinity());
  Field rowmax(g, 1);
  std::vector<int> widths(s.wx.begin(), s.wx.end());
  std::sort(widths.begin(), widths.end());
  widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
  const std::size_t si = g.stride(1);
  for (int w : widths) {
    for (int k = 0; k < g.nt; ++k) {
      for (int j = 0; j < g.n[1]; ++j) {
        const std::size_t base = g.node(k, 0, j);
        window_max(tmax.v.data() + base, rowmax.v.data() + base, g.n[0], si, w);
      }
    }
    for (int dj = -s.rj; dj <= s.rj; ++dj) {
      if (s.wx[dj + s.rj] != w) continue;
      for (int k = 0; k < g.nt; ++k) {
        for (int i = 0; i < g.n[0]; ++i) {
          for (int j = 0; j < g.n[1]; ++j) {
            const int jj = j + dj;
            if (jj < 0 || jj >= g.n[1]) continue;
            double& o = out.v[g.node(k, i, j)];
            o = std::max(o, rowmax.v[g.node(k, i, jj)]);
          }
        }
      }
    }
  }
  return out;
}

Field m_alpha(const Field& f, double alpha, const std::vector<double>& radii) {
  if (radii.empty()) fail("empty radii set");
  Field out(f.grid, 1, 0.0);
  for (double r : radii) {
    const Field d = dilate(centred_means(f, r, alpha), r, alpha);
    for (std::size_t z = 0; z < out.v.size(); ++z) out.v[z] = std::max(out.v[z], d.v[z]);
  }
  return out;
}

namespace {

template <class PerCentre>
Field sup_over_cylinders(const GridSpec& g, double alpha, const std::vector<double>& radii, PerCentre&& value) {
  if (radii.empty()) fail("empty radii set");
  Field out(g, 1, 0.0);
  for (double r : radii) {
    Field per(g, 1);
    parallel_for(g.nodes(), [&](std::size_t z) {
      const auto c = g.coords(z);
      per.v[z] = value(Cylinder{c[0], c[1], c[2], r});
    });
    const Field d = dilate(per, r, alpha);
    for (std::size_t z = 0; z < out.v.size(); ++z) out.v[z] = std::max(out.v[z], d.v[z]);
  }
  return out;
}

}  // namespace

Field sharp_alpha(const Field& a, double alpha, const std::vector<double>& radii) {
  return sup_over_cylinders(a.grid, alpha, radii, [&](const Cylinder& q) { return sharp_mq(a, q, alpha); });
}

Field n_alpha_flux(const Field& g, double alpha, const std::vector<double>& radii) {
  return m_alpha(g, alpha, radii);
}

Field n_alpha_family(const Field& w, double alpha, const std::vector<double>& radii) {
  return sup_over_cylinders(w.grid, alpha, radii, [&](const Cylinder& q) { return n_family(w, q, alpha); });
}

Field mask_to_domain(const Field& f) {
  Field out = f;
  const GridSpec& g = f.grid;
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    const auto c = g.coords(z);
    if (!g.in_domain(c[0], c[1], c[2])) {
      for (int d = 0; d < f.rank; ++d) out.at(z, d) = 0.0;
    }
  }
  return out;
}

}  // namespace paratrunc
