#include "paratrunc/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "paratrunc/error.hpp"
#include "paratrunc/fields.hpp"
#include "paratrunc/parallel.hpp"

namespace paratrunc {

PoincareGap poincare_gap(const Field& a, const Field* g, const Cylinder& q, double alpha, const Field& rho,
                         PoincareMode mode, const NFunction* phi) {
  if (a.rank != 1 || rho.rank != 1) fail("poincare: scalar a and weight expected");
  if (mode == PoincareMode::modular && !phi) fail("poincare: modular mode needs an N-function");
  const GridSpec& gr = a.grid;
  const Shape s = cylinder_shape(gr, q.r, alpha);
  double wsum = 0.0, wa = 0.0, wmax = 0.0;
  std::size_t n = 0;
  for_each_node(gr, s, q, [&](std::size_t z) {
    if (rho.v[z] < 0.0) fail("poincare: negative weight");
    wsum += rho.v[z];
    wa += rho.v[z] * a.v[z];
    wmax = std::max(wmax, rho.v[z]);
    ++n;
  });
  if (!(wsum > 0.0)) fail("degenerate weight");
  const double mean = wa / wsum;
  PoincareGap out;
  out.c0 = wmax * static_cast<double>(n) / wsum;

  const Field grad = gradient(a);
  double lhs = 0.0, grad_term = 0.0, flux = 0.0;
  for_each_node(gr, s, q, [&](std::size_t z) {
    const double dev = std::abs(a.v[z] - mean) / q.r;
    const double gn = grad.norm_at(z);
    if (mode == PoincareMode::weak) {
      lhs += dev;
      grad_term += gn;
    } else {
      lhs += (*phi)(dev);
      grad_term += (*phi)(gn);
    }
    if (g) flux += g->norm_at(z);
  });
  const double nn = static_cast<double>(n);
  out.lhs = lhs / nn;
  const double flux_mean = alpha * flux / nn;
  out.rhs = grad_term / nn + (mode == PoincareMode::weak ? flux_mean : (*phi)(flux_mean));
  out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : (out.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return out;
}

Field local_flux(const Field& a, const Cylinder& q, double alpha) {
  const GridSpec& gr = a.grid;
  const Shape s = cylinder_shape(gr, q.r, alpha);
  const Field at = dt_backward(a);
  Field out(gr, gr.m);
  const double share = gr.h / gr.m;
  const int k0 = std::max(0, q.k - s.kt), k1 = std::min(gr.nt - 1, q.k + s.kt);
  auto run = [&](int comp, std::vector<std::size_t>& line) {
    if (line.empty()) return;
    double acc = 0.0, mean = 0.0;
    std::vector<double> vals(line.size());
    for (std::size_t l = 0; l < line.size(); ++l) {
      acc += at.v[line[l]];
      vals[l] = share * acc;
      mean += vals[l];
    }
    mean /= static_cast<double>(line.size());
    for (std::size_t l = 0; l < line.size(); ++l) out.at(line[l], comp) = vals[l] - mean;
  };
  std::vector<std::size_t> line;
  for (int k = k0; k <= k1; ++k) {
    for (int dj = -s.rj; dj <= s.rj; ++dj) {
      const int j = q.j + dj;
      if (j < 0 || j >= gr.n[1]) continue;
      const int w = s.wx[dj + s.rj];
      line.clear();
      for (int i = std::max(0, q.i - w); i <= std::min(gr.n[0] - 1, q.i + w); ++i) line.push_back(gr.node(k, i, j));
      run(0, line);
    }
    if (gr.m == 2) {
      // Columns of the disc: for offset di the extent along j is the same
      // half-width table by symmetry.
      for (int di = -s.rj; di <= s.rj; ++di) {
        const int i = q.i + di;
        if (i < 0 || i >= gr.n[0]) continue;
        const int w = s.wx[di + s.rj];
        line.clear();
        for (int j = std::max(0, q.j - w); j <= std::min(gr.n[1] - 1, q.j + w); ++j) line.push_back(gr.node(k, i, j));
        run(1, line);
      }
    }
  }
  return out;
}

TimeOscillation time_oscillation(const Field& a, const Cylinder& q, double alpha, const std::vector<double>& eta,
                                 double c0_max, const Field* g) {
  const GridSpec& gr = a.grid;
  if (eta.size() != gr.stride(0)) fail("time_oscillation: eta needs one value per spatial node");
  const Shape s = cylinder_shape(gr, q.r, alpha);
  // Spatial nodes of B.
  std::vector<std::size_t> ball;
  for (int dj = -s.rj; dj <= s.rj; ++dj) {
    const int j = q.j + dj;
    if (j < 0 || j >= gr.n[1]) continue;
    const int w = s.wx[dj + s.rj];
    for (int i = std::max(0, q.i - w); i <= std::min(gr.n[0] - 1, q.i + w); ++i) {
      ball.push_back(static_cast<std::size_t>(i) * gr.n[1] + j);
    }
  }
  std::vector<std::uint8_t> in_ball(gr.stride(0), 0);
  for (std::size_t p : ball) in_ball[p] = 1;
  double mass = 0.0, sup = 0.0, grad = 0.0;
  for (std::size_t p : ball) {
    if (eta[p] < 0.0) fail("time_oscillation: eta must be nonnegative");
    mass += eta[p];
    sup = std::max(sup, eta[p]);
  }
  if (!(mass > 0.0)) fail("degenerate weight");
  auto val = [&](int i, int j) -> double {
    if (i < 0 || j < 0 || i >= gr.n[0] || j >= gr.n[1]) return 0.0;
    const std::size_t p = static_cast<std::size_t>(i) * gr.n[1] + j;
    return in_ball[p] ? eta[p] : 0.0;
  };
  for (int i = -1; i <= gr.n[0]; ++i) {
    for (int j = (gr.m == 2 ? -1 : 0); j < (gr.m == 2 ? gr.n[1] + 1 : 1); ++j) {
      const double v = val(i, j);
      const double gx = (val(i + 1, j) - v) / gr.h;
      const double gy = gr.m == 2 ? (val(i, j + 1) - v) / gr.h : 0.0;
      grad = std::max(grad, std::hypot(gx, gy));
    }
  }
  TimeOscillation out;
  out.c0 = (sup + q.r * grad) * static_cast<double>(ball.size()) / mass;
  if (out.c0 > c0_max) {
    fail("time_oscillation: eta violates the seminorm condition (measured c0 = " + std::to_string(out.c0) + ")");
  }
  const int k0 = std::max(0, q.k - s.kt), k1 = std::min(gr.nt - 1, q.k + s.kt);
  std::vector<double> slice;
  for (int k = k0; k <= k1; ++k) {
    double acc = 0.0;
    for (std::size_t p : ball) acc += eta[p] * a.v[k * gr.stride(0) + p];
    slice.push_back(acc / mass);
  }
  double mean = 0.0;
  for (double v : slice) mean += v;
  mean /= static_cast<double>(slice.size());
  for (double v : slice) out.oscillation += std::abs(v - mean);
  out.oscillation /= static_cast<double>(slice.size());
  out.family = q.r * alpha * n_family(a, q, alpha);
  if (g) out.flux = q.r * alpha * mean_abs(*g, q, alpha);
  return out;
}

NormConjugate norm_conjugate_check(const std::vector<double>& f, double dt) {
  const std::size_t n = f.size();
  if (n < 4) fail("norm_conjugate_check: need at least 4 samples");
  NormConjugate out;
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(n);
  for (double v : f) out.oscillation += std::abs(v - mean) * dt;

  auto pairing = [&](const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += f[i] * b[i] * dt;
    return std::abs(acc);
  };
  // Mean-zero family: smoothed ±1 steps on windows at three scales.
  std::mt19937_64 rng(0x5eedULL);
  const double len = static_cast<double>(n);
  static constexpr double kScales[3] = {1.0, 0.5, 0.25};
  for (int idx = 0; idx < 20; ++idx) {
    const double sc = kScales[idx % 3];
    const double width = sc * len;
    double lo = 0.5 * (len - width);
    double split = 0.5;
    if (idx >= 3) {
      lo = uniform01(rng) * (len - width);
      split = 0.2 + 0.6 * uniform01(rng);
    }
    const double hi = lo + width;
    const double cut = lo + split * width;
    const double edge = std::max(1.0, 0.02 * width);
    std::vector<double> b(n), win(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) + 0.5;
      const double wv = std::clamp(std::min(x - lo, hi - x) / edge, 0.0, 1.0);
      win[i] = wv;
      b[i] = wv * std::tanh((cut - x) / edge);
    }
    double bm = 0.0, wm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      bm += b[i];
      wm += win[i];
    }
    if (!(wm > 0.0)) continue;
    double sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      b[i] -= bm / wm * win[i];
      sup = std::max(sup, std::abs(b[i]));
    }
    if (!(sup > 0.0)) continue;
    for (double& v : b) v /= sup;
    const double val = pairing(b);
    out.mean_zero = std::max(out.mean_zero, val);
    out.primitive = std::max(out.primitive, val);
  }
  // Tents γ(t) = max(0, min(t − a, b − t)): γ' = ±1 on the support.
  for (int idx = 0; idx < 10; ++idx) {
    const double a = uniform01(rng) * 0.5 * len;
    const double b = a + (0.2 + 0.8 * uniform01(rng)) * (len - a);
    const double peak = 0.5 * (a + b);
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) + 0.5;
      if (x > a && x < b) d[i] = x < peak ? 1.0 : -1.0;
    }
    out.primitive = std::max(out.primitive, pairing(d));
  }
  return out;
}

namespace {

struct Member {
  std::uint64_t field_seed;
  double tc, xc, yc, r, alpha;
  double f1, f2, f3, phase;
};

}  // namespace

PoincareBatteryResult poincare_battery(int n, std::uint64_t seed, PoincareMode mode, const NFunction& phi, int m,
                                       int refine) {
  if (n < 1) fail("poincare battery needs at least one member");
  if (m != 1 && m != 2) fail("poincare battery: m must be 1 or 2");
  std::mt19937_64 rng(seed);
  std::vector<Member> members(n);
  for (auto& mb : members) {
    mb.field_seed = rng();
    mb.r = 0.12 + 0.13 * uniform01(rng);
    mb.alpha = 0.5 + 1.5 * uniform01(rng);
    mb.tc = -0.7 + 0.4 * uniform01(rng);
    mb.xc = 0.35 + 0.3 * uniform01(rng);
    mb.yc = 0.35 + 0.3 * uniform01(rng);
    mb.f1 = 3.0 * uniform01(rng);
    mb.f2 = 3.0 * uniform01(rng);
    mb.f3 = 3.0 * uniform01(rng);
    mb.phase = 2.0 * std::numbers::pi * uniform01(rng);
  }
  const int base_n = m == 1 ? 32 : 16;
  const int sx = base_n << refine;
  const int st = base_n * (1 << (2 * refine));
  const GridSpec g = GridSpec::base(m, st + 1, {sx + 1, sx + 1}, 1.0 / sx, 1.0 / st);

  PoincareBatteryResult out;
  out.ratios.assign(n, 0.0);
  std::vector<double> c0(n, 0.0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t idx) {
    const Member& mb = members[idx];
    const Field a = make_preset("random", g, mb.field_seed).w;
    const Cylinder q{static_cast<int>(std::lround((mb.tc - g.t_origin) / g.tau)),
                     static_cast<int>(std::lround(mb.xc / g.h)),
                     m == 2 ? static_cast<int>(std::lround(mb.yc / g.h)) : 0, mb.r};
    Field rho(g, 1);
    for (std::size_t z = 0; z < g.nodes(); ++z) {
      const auto c = g.coords(z);
      const double arg = mb.f1 * g.t(c[0]) + mb.f2 * g.x(0, c[1]) + mb.f3 * (m == 2 ? g.x(1, c[2]) : 0.0);
      rho.v[z] = 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * arg + mb.phase);
    }
    const Field flux = local_flux(a, q, mb.alpha);
    const PoincareGap gap = poincare_gap(a, &flux, q, mb.alpha, rho, mode, &phi);
    out.ratios[idx] = gap.ratio;
    c0[idx] = gap.c0;
  });
  std::vector<double> sorted = out.ratios;
  std::sort(sorted.begin(), sorted.end());
  out.max = sorted.back();
  out.median = sorted.size() % 2 ? sorted[sorted.size() / 2]
                                 : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
  out.max_c0 = *std::max_element(c0.begin(), c0.end());
  return out;
}

}  // namespace paratrunc
