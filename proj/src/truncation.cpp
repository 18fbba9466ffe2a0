#include "paratrunc/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "paratrunc/error.hpp"
#include "paratrunc/fields.hpp"
#include "paratrunc/maximal.hpp"
#include "paratrunc/parallel.hpp"

namespace paratrunc {

Mask bad_set(const Field& w, const Field& g, double lambda, double alpha, const std::vector<double>& radii) {
  const Field mg = m_alpha(mask_to_domain(gradient(w)), alpha, radii);
  const Field mf = m_alpha(mask_to_domain(g), alpha, radii);
  Mask o(w.grid.nodes(), 0);
  for (std::size_t z = 0; z < o.size(); ++z) o[z] = (mg.v[z] > lambda || alpha * mf.v[z] > lambda) ? 1 : 0;
  return o;
}

namespace {

// Closed σQ inside the open box: strict inequalities in continuum coordinates.
bool scaled_inside_time(const GridSpec& g, const Cylinder& q, double alpha, double sigma) {
  const double half = alpha * sigma * sigma * q.r * q.r;
  const double tc = g.t(q.k);
  return tc - half > g.t(g.domain.t_lo) && tc + half < g.t(g.domain.t_hi);
}

bool scaled_inside_space(const GridSpec& g, const Cylinder& q, double sigma) {
  const double rr = sigma * q.r;
  const int idx[2] = {q.i, q.j};
  for (int d = 0; d < g.m; ++d) {
    const double xc = g.x(d, idx[d]);
    if (!(xc - rr > g.x(d, g.domain.lo[d]) && xc + rr < g.x(d, g.domain.hi[d]))) return false;
  }
  return true;
}

}  // namespace

std::vector<double> local_averages(const Field& w, const WhitneyCover& cover, std::vector<AverageCase>* cases) {
  const GridSpec& g = w.grid;
  std::vector<double> wj(cover.cylinders.size(), 0.0);
  if (cases) cases->assign(cover.cylinders.size(), AverageCase::inside);
  for (std::size_t jx = 0; jx < cover.cylinders.size(); ++jx) {
    const Cylinder& q = cover.cylinders[jx];
    const bool in34 = scaled_inside_time(g, q, cover.alpha, 0.75) && scaled_inside_space(g, q, 0.75);
    AverageCase c = AverageCase::inside;
    if (!in34) c = scaled_inside_space(g, q, 0.8) ? AverageCase::near_time : AverageCase::near_space;
    if (cases) (*cases)[jx] = c;
    if (c != AverageCase::inside) continue;
    double num = 0.0, den = 0.0;
    for (const auto& [z, r] : cover.rho[jx]) {
      num += r * w.v[z];
      den += r;
    }
    if (!(den > 0.0)) fail_numeric("degenerate weight");
    wj[jx] = num / den;
  }
  return wj;
}

Field apply_truncation(const Field& w, const WhitneyCover& cover, const std::vector<double>& wj) {
  std::vector<double> acc(w.grid.nodes(), 0.0);
  std::vector<std::uint8_t> touched(w.grid.nodes(), 0);
  for (std::size_t jx = 0; jx < cover.cylinders.size(); ++jx) {
    for (const auto& [z, r] : cover.rho[jx]) {
      acc[z] += r * (w.v[z] - wj[jx]);
      touched[z] = 1;
    }
  }
  Field out = w;
  for (std::size_t z = 0; z < acc.size(); ++z) {
    if (touched[z]) out.v[z] = w.v[z] - acc[z];
  }
  return out;
}

TruncationResult truncate(const Field& w, const Field& g, const TruncationParams& p) {
  if (!(p.lambda > 0.0) || !std::isfinite(p.lambda)) fail("lambda must be positive and finite");
  w.grid.validate();
  w.check_finite();
  g.check_finite();
  validate_boundary(w);
  TruncationResult res;
  res.base = w.grid;
  res.lambda = p.lambda;
  res.alpha = p.alpha > 0.0 ? p.alpha : p.lambda / p.phi.d1(p.lambda);
  if (!(res.alpha > 0.0) || !std::isfinite(res.alpha)) fail_numeric("alpha could not be derived from lambda");

  int pad_t = p.pad_t > 0 ? p.pad_t : std::max(4, (w.grid.nt - 1) / 4);
  int pad_x = p.pad_x > 0 ? p.pad_x : std::max(4, w.grid.n[0] / 4);
  for (int attempt = 0;; ++attempt) {
    res.ext = extend(w, g, pad_t, pad_x);
    const GridSpec& e = res.ext.w.grid;
    res.radii = dyadic_radii(e, res.alpha);
    res.bad = bad_set(res.ext.w, res.ext.g, res.lambda, res.alpha, res.radii);
    // The cover needs a layer of good nodes around O; 16Q_j must see O^c.
    bool touches = false;
    for (std::size_t z = 0; z < res.bad.size() && !touches; ++z) {
      if (!res.bad[z]) continue;
      const auto c = e.coords(z);
      touches = c[0] == 0 || c[0] == e.nt - 1 || c[1] == 0 || c[1] == e.n[0] - 1 ||
                (e.m == 2 && (c[2] == 0 || c[2] == e.n[1] - 1));
    }
    if (!touches) break;
    if (p.pad_t > 0 && p.pad_x > 0) fail("bad set reaches the padded grid boundary; increase the pads");
    if (attempt >= 6 || e.nodes() > 40'000'000) {
      fail_numeric("bad set does not fit in the padded grid; lambda is too small for the data");
    }
    pad_t *= 2;
    pad_x *= 2;
  }
  const GridSpec& e = res.ext.w.grid;
  res.bad_count = static_cast<std::size_t>(std::count(res.bad.begin(), res.bad.end(), 1));
  std::size_t dom_total = 0, dom_bad = 0;
  for (std::size_t z = 0; z < e.nodes(); ++z) {
    const auto c = e.coords(z);
    if (!e.in_domain(c[0], c[1], c[2])) continue;
    ++dom_total;
    dom_bad += res.bad[z];
  }
  res.degenerate = dom_bad == dom_total;
  res.cover = whitney_cover(res.bad, e, res.alpha);
  partition_of_unity(res.cover);
  res.wj = local_averages(res.ext.w, res.cover, &res.cases);
  res.wlam = apply_truncation(res.ext.w, res.cover, res.wj);
  return res;
}

IbpResult ibp_residual(const TruncationResult& res, double t_plus, double t_minus) {
  if (!(t_plus > t_minus)) fail("ibp: need t_plus > t_minus");
  const Field& w = res.ext.w;
  const Field& wl = res.wlam;
  const GridSpec& g = w.grid;
  const double span = t_plus - t_minus;
  auto eta = [&](int k) { return std::max((t_plus - g.t(k)) / span, 0.0); };
  // η must vanish at t⁺ on the grid: t⁺ is snapped to a node by the caller.
  const double kp = (t_plus - g.t_origin) / g.tau;
  if (std::abs(kp - std::round(kp)) > 1e-9) fail("ibp: t_plus must be a time node");

  Field test(g, 1);
  for (std::size_t z = 0; z < g.nodes(); ++z) test.v[z] = wl.v[z] * eta(g.coords(z)[0]);
  IbpResult r;
  r.lhs = -weak_flux_pairing(res.ext.g, test);

  const Field wlt = dt_backward(wl);
  double first = 0.0, second = 0.0, energy = 0.0;
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    const int k = g.coords(z)[0];
    const double deta = (eta(k + 1) - eta(k)) / g.tau;
    first += 0.5 * (wl.v[z] * wl.v[z] - 2.0 * w.v[z] * wl.v[z]) * deta;
    if (res.bad[z]) second += wlt.v[z] * (wl.v[z] - w.v[z]) * eta(k);
    energy += 0.5 * w.v[z] * w.v[z] * std::abs(deta);
  }
  r.rhs = (first + second) * g.cell();
  r.energy = energy * g.cell();
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

namespace {

bool ball_inside_space(const GridSpec& g, const Cylinder& q) { return scaled_inside_space(g, q, 1.0); }

}  // namespace

TruncationReport verify_properties(const TruncationResult& res, const TruncationParams& p) {
  TruncationReport rep;
  const Field& w = res.ext.w;
  const Field& gflux = res.ext.g;
  const Field& wl = res.wlam;
  const GridSpec& g = w.grid;
  const double lambda = res.lambda;
  const double alpha = res.alpha;
  rep.cylinders = res.cover.cylinders.size();
  for (const auto& nb : res.cover.neighbours) rep.max_neighbours = std::max(rep.max_neighbours, int(nb.size()));

  // (a) identity off the bad set.
  double scale = 0.0;
  for (double x : w.v) scale = std::max(scale, std::abs(x));
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    if (res.bad[z]) continue;
    const double d = std::abs(wl.v[z] - w.v[z]);
    rep.prop_a_max_diff = std::max(rep.prop_a_max_diff, d);
  }
  rep.prop_a_exact = rep.prop_a_max_diff <= 1e-12 * std::max(scale, 1e-300);

  // (b) gradient bound.
  const Field gl = gradient(wl);
  const Field mgl = m_alpha(gl, alpha, res.radii);
  for (double v : mgl.v) rep.c_b = std::max(rep.c_b, v / lambda);

  // (c) modular and L¹ stability.
  const Field gw = gradient(w);
  double num = 0.0, num1 = 0.0, den_grad = 0.0, den_grad1 = 0.0;
  std::size_t nbad = 0, ndom = 0;
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    double d2 = 0.0;
    for (int c = 0; c < g.m; ++c) d2 += std::pow(gl.at(z, c) - gw.at(z, c), 2);
    num += p.phi(std::sqrt(d2));
    num1 += std::sqrt(d2);
    const auto cc = g.coords(z);
    if (g.in_domain(cc[0], cc[1], cc[2])) {
      ++ndom;
      if (res.bad[z]) nbad += 1;
    }
    if (res.bad[z]) {
      den_grad += p.phi(gw.norm_at(z));
      den_grad1 += gw.norm_at(z);
    }
  }
  rep.bad_fraction = ndom ? static_cast<double>(nbad) / ndom : 0.0;
  const double den = den_grad + p.phi(lambda) * static_cast<double>(res.bad_count);
  const double den1 = den_grad1 + lambda * static_cast<double>(res.bad_count);
  if (res.bad_count == 0) {
    rep.c_c_vacuous = true;
  } else {
    rep.c_c = num / den;
    rep.c_c_l1 = num1 / den1;
  }

  // (d) time derivative: sampled cylinders on a lattice per radius.
  for (double r : res.radii) {
    const Shape s = cylinder_shape(g, r, alpha);
    const int st = std::max(1, 2 * s.kt);
    const int sx = std::max(1, 2 * s.wx[s.rj]);
    std::vector<Cylinder> qs;
    for (int k = 0; k < g.nt; k += st) {
      for (int i = 0; i < g.n[0]; i += sx) {
        for (int j = 0; j < g.n[1]; j += (g.m == 2 ? sx : 1)) qs.push_back({k, i, j, r});
      }
    }
    std::vector<double> fam(qs.size()), flux(qs.size(), -1.0);
    parallel_for(qs.size(), [&](std::size_t a) {
      const Cylinder& q = qs[a];
      fam[a] = alpha * n_family(wl, q, alpha) / lambda;
      bool good = ball_inside_space(g, q);
      if (good) {
        for_each_node(g, s, q, [&](std::size_t z) { good = good && !res.bad[z]; });
      }
      if (good) flux[a] = alpha * n_flux(gflux, q, alpha) / lambda;
    });
    for (std::size_t a = 0; a < qs.size(); ++a) {
      ++rep.d_family_cylinders;
      rep.c_d_family = std::max(rep.c_d_family, fam[a]);
      if (flux[a] < 0.0) continue;
      ++rep.d_flux_cylinders;
      rep.c_d_flux = std::max(rep.c_d_flux, flux[a]);
      if (fam[a] > flux[a] * (1.0 + 1e-12) + 1e-300) ++rep.d_violations;
    }
  }

  // (e) parabolic Hölder quotient on random node pairs inside (−t0, t0) × Ω.
  {
    std::mt19937_64 rng(p.seed);
    const Domain& d = g.domain;
    auto pick = [&](int lo, int hi) { return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1)); };
    for (int it = 0; it < p.holder_pairs; ++it) {
      const int k1 = pick(d.t_lo, d.t_hi), i1 = pick(d.lo[0], d.hi[0]), j1 = pick(d.lo[1], d.hi[1]);
      const int k2 = pick(d.t_lo, d.t_hi), i2 = pick(d.lo[0], d.hi[0]), j2 = pick(d.lo[1], d.hi[1]);
      if (k1 == k2 && i1 == i2 && j1 == j2) continue;
      const double dist = parabolic_distance(alpha, (k1 - k2) * g.tau, std::hypot(i1 - i2, j1 - j2) * g.h);
      const double q = std::abs(wl.v[g.node(k1, i1, j1)] - wl.v[g.node(k2, i2, j2)]) / (lambda * dist);
      rep.c_e = std::max(rep.c_e, q);
    }
  }

  // Local-average surrogates.
  const Field gabs = magnitude(gw);
  for (std::size_t jx = 0; jx < res.cover.cylinders.size(); ++jx) {
    const Cylinder& q = res.cover.cylinders[jx];
    const Cylinder q34{q.k, q.i, q.j, 0.75 * q.r};
    double acc = 0.0;
    std::size_t n = 0;
    for_each_node(g, cylinder_shape(g, q34.r, alpha), q34, [&](std::size_t z) {
      acc += std::abs(w.v[z] - res.wj[jx]);
      ++n;
    });
    if (n) rep.c_wj = std::max(rep.c_wj, acc / n / q.r / lambda);
    double sum = 0.0;
    for (int k : res.cover.neighbours[jx]) sum += std::abs(res.wj[k] - res.wj[jx]) / res.cover.cylinders[k].r;
    rep.c_diff = std::max(rep.c_diff, sum / lambda);
    if (res.cases[jx] == AverageCase::near_space) {
      const double mq = mean_abs(gabs, q, alpha);
      if (mq > 0.0) rep.c_nqout = std::max(rep.c_nqout, alpha * n_family(w, q, alpha) / mq);
    }
  }

  // (f) integration by parts with η from −t0 to 0.
  const double t_plus = 0.0;
  rep.ibp = ibp_residual(res, t_plus, -res.base.t0);
  return rep;
}

}  // namespace paratrunc
