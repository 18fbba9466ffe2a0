#include "paratrunc/caloric.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "paratrunc/error.hpp"
#include "paratrunc/fields.hpp"

namespace paratrunc {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

bool interior(const GridSpec& g, int i, int j) {
  if (i <= 0 || i >= g.n[0] - 1) return false;
  if (g.m == 2 && (j <= 0 || j >= g.n[1] - 1)) return false;
  return true;
}

// One implicit step. Slice values live in v (full slice, boundary fixed);
// unknowns are the interior nodes.
class StepProblem {
 public:
  StepProblem(const GridSpec& g, const NFunction& phi, double eps) : g_(g), phi_(phi), eps_(eps) {
    slice_ = static_cast<std::size_t>(g.n[0]) * g.n[1];
    index_.assign(slice_, -1);
    for (int i = 0; i < g.n[0]; ++i)
      for (int j = 0; j < g.n[1]; ++j)
        if (interior(g, i, j)) {
          index_[local(i, j)] = static_cast<int>(unknowns_.size());
          unknowns_.push_back(local(i, j));
        }
    if (unknowns_.empty()) fail("caloric: grid has no interior nodes");
    phi_eps0_ = phi_(eps_);
  }

  std::size_t size() const { return unknowns_.size(); }
  std::size_t local(int i, int j) const { return static_cast<std::size_t>(i) * g_.n[1] + j; }

  // Edges of the forward-difference stencil at node y: y itself, y+e1, y+e2.
  template <class Fn>
  void for_each_cell(Fn&& fn) const {
    const int i1 = g_.n[0] - 1;
    const int j1 = g_.m == 2 ? g_.n[1] - 1 : 1;
    for (int i = 0; i < i1; ++i)
      for (int j = 0; j < j1; ++j) fn(i, j);
  }

  void grad_at(const std::vector<double>& v, int i, int j, double* xi) const {
    const std::size_t a = local(i, j);
    xi[0] = (v[local(i + 1, j)] - v[a]) / g_.h;
    xi[1] = g_.m == 2 ? (v[local(i, j + 1)] - v[a]) / g_.h : 0.0;
  }

  double energy(const std::vector<double>& v, const std::vector<double>& prev) const {
    double e = 0.0;
    for (std::size_t u : unknowns_) e += 0.5 * (v[u] - prev[u]) * (v[u] - prev[u]) / g_.tau;
    for_each_cell([&](int i, int j) {
      double xi[2];
      grad_at(v, i, j, xi);
      const double s = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + eps_ * eps_);
      e += phi_(s) - phi_eps0_;
    });
    return e;
  }

  Vec residual(const std::vector<double>& v, const std::vector<double>& prev) const {
    Vec r(static_cast<Eigen::Index>(size()));
    for (std::size_t a = 0; a < size(); ++a) r[a] = (v[unknowns_[a]] - prev[unknowns_[a]]) / g_.tau;
    for_each_cell([&](int i, int j) {
      double xi[2];
      grad_at(v, i, j, xi);
      const double s = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + eps_ * eps_);
      const double c = phi_.d1(s) / s;
      const double a0 = c * xi[0] / g_.h, a1 = c * xi[1] / g_.h;
      add(r, local(i, j), -(a0 + a1));
      add(r, local(i + 1, j), a0);
      if (g_.m == 2) add(r, local(i, j + 1), a1);
    });
    return r;
  }

  // Newton matrix, or the Picard one (isotropic part only) when picard is set.
  SpMat matrix(const std::vector<double>& v, bool picard) const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(size() * (g_.m == 2 ? 13 : 5));
    for (std::size_t a = 0; a < size(); ++a) trip.emplace_back(a, a, 1.0 / g_.tau);
    const int nloc = g_.m == 2 ? 3 : 2;
    for_each_cell([&](int i, int j) {
      double xi[2];
      grad_at(v, i, j, xi);
      const double s = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + eps_ * eps_);
      const double c = phi_.d1(s) / s;
      const double d = picard ? 0.0 : (phi_.d2(s) - c) / (s * s);
      const double hess[2][2] = {{c + d * xi[0] * xi[0], d * xi[0] * xi[1]},
                                 {d * xi[0] * xi[1], c + d * xi[1] * xi[1]}};
      // B maps (v_y, v_{y+e1}, v_{y+e2}) to the gradient.
      const double b[2][3] = {{-1.0 / g_.h, 1.0 / g_.h, 0.0}, {-1.0 / g_.h, 0.0, 1.0 / g_.h}};
      const std::size_t nodes[3] = {local(i, j), local(i + 1, j), g_.m == 2 ? local(i, j + 1) : 0};
      const int comps = g_.m;
      for (int p = 0; p < nloc; ++p) {
        const int ip = index_[nodes[p]];
        if (ip < 0) continue;
        for (int q = 0; q < nloc; ++q) {
          const int iq = index_[nodes[q]];
          if (iq < 0) continue;
          double val = 0.0;
          for (int x = 0; x < comps; ++x)
            for (int y = 0; y < comps; ++y) val += b[x][p] * hess[x][y] * b[y][q];
          trip.emplace_back(ip, iq, val);
        }
      }
    });
    SpMat mat(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
    mat.setFromTriplets(trip.begin(), trip.end());
    return mat;
  }

  void axpy(std::vector<double>& v, const std::vector<double>& base, double s, const Vec& d) const {
    v = base;
    for (std::size_t a = 0; a < size(); ++a) v[unknowns_[a]] += s * d[a];
  }

 private:
  void add(Vec& r, std::size_t node, double val) const {
    const int a = index_[node];
    if (a >= 0) r[a] += val;
  }

  const GridSpec& g_;
  const NFunction& phi_;
  double eps_;
  double phi_eps0_ = 0.0;
  std::size_t slice_ = 0;
  std::vector<int> index_;
  std::vector<std::size_t> unknowns_;
};

double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

// ⨍_Q φ(|f|) over all nodes.
double modular_mean(const Field& f, const NFunction& phi) {
  const std::size_t n = f.grid.nodes();
  double s = 0.0;
  for (std::size_t z = 0; z < n; ++z) s += phi(f.norm_at(z));
  return s / static_cast<double>(n);
}

double conjugate_mean(const Field& f, const NFunction& phi) {
  const std::size_t n = f.grid.nodes();
  double s = 0.0;
  for (std::size_t z = 0; z < n; ++z) s += phi.conjugate(f.norm_at(z));
  return s / static_cast<double>(n);
}

Field v_of(const NFunction& phi, const Field& grad) {
  Field out(grad.grid, grad.rank);
  const std::size_t n = grad.grid.nodes();
  for (std::size_t z = 0; z < n; ++z) {
    map_v(phi, std::span<const double>(&grad.v[z * grad.rank], grad.rank),
          std::span<double>(&out.v[z * grad.rank], grad.rank));
  }
  return out;
}

Field sub(const Field& a, const Field& b) {
  Field out = a;
  for (std::size_t z = 0; z < out.v.size(); ++z) out.v[z] -= b.v[z];
  return out;
}

double slice_mean(const Field& f, int k, double power) {
  const GridSpec& g = f.grid;
  double s = 0.0;
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j) s += std::pow(std::abs(f.v[g.node(k, i, j)]), power);
  return s / (static_cast<double>(g.n[0]) * g.n[1]);
}

}  // namespace

HeatSolution solve_phi_heat(const NFunction& phi, const Field& data, const SolverConfig& cfg) {
  const GridSpec& g = data.grid;
  g.validate();
  if (data.rank != 1) fail("caloric: data must be scalar");
  data.check_finite();
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1 || !(cfg.linear_tol > 0.0)) fail("caloric: invalid solver config");

  HeatSolution sol;
  sol.eps = cfg.eps;
  if (!(sol.eps > 0.0)) {
    const Field gd = gradient(data);
    double scale = 0.0;
    for (std::size_t z = 0; z < g.nodes(); ++z) scale = std::max(scale, gd.norm_at(z));
    sol.eps = 1e-6 * std::max(scale, 1e-12);
  }
  sol.h = Field(g, 1);
  const std::size_t slice = static_cast<std::size_t>(g.n[0]) * g.n[1];
  std::copy(data.v.begin(), data.v.begin() + static_cast<std::ptrdiff_t>(slice), sol.h.v.begin());

  StepProblem sp(g, phi, sol.eps);
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analysed = false;
  std::vector<double> prev(slice), v(slice), trial(slice);

  for (int k = 1; k < g.nt; ++k) {
    std::copy(sol.h.v.begin() + static_cast<std::ptrdiff_t>((k - 1) * slice),
              sol.h.v.begin() + static_cast<std::ptrdiff_t>(k * slice), prev.begin());
    v = prev;
    for (int i = 0; i < g.n[0]; ++i)
      for (int j = 0; j < g.n[1]; ++j)
        if (!interior(g, i, j)) v[sp.local(i, j)] = data.v[g.node(k, i, j)];

    Vec r = sp.residual(v, prev);
    double rnorm = g.tau * r.lpNorm<Eigen::Infinity>();
    std::vector<double> history{rnorm};
    int it = 0;
    while (rnorm >= cfg.tol) {
      if (it++ >= cfg.max_iter) {
        std::ostringstream os;
        os << "caloric: Newton did not converge at time step " << k << "; residual history:";
        for (double x : history) os << ' ' << x;
        fail_numeric(os.str());
      }
      bool accepted = false;
      for (int pass = 0; pass < 2 && !accepted; ++pass) {
        const bool picard = pass == 1;
        const SpMat mat = sp.matrix(v, picard);
        if (!analysed) {
          ldlt.analyzePattern(mat);
          analysed = true;
        }
        ldlt.factorize(mat);
        if (ldlt.info() != Eigen::Success) continue;
        const Vec d = ldlt.solve(-r);
        if ((mat * d + r).norm() > cfg.linear_tol * std::max(r.norm(), 1e-300)) continue;
        const double slope = r.dot(d);
        if (!(slope < 0.0)) continue;
        const double e0 = sp.energy(v, prev);
        double s = 1.0;
        for (int ls = 0; ls < 40; ++ls, s *= 0.5) {
          sp.axpy(trial, v, s, d);
          const double e1 = sp.energy(trial, prev);
          const Vec rt = sp.residual(trial, prev);
          const double tn = g.tau * rt.lpNorm<Eigen::Infinity>();
          // Near convergence the energy decrease drowns in rounding, so a
          // smaller residual is accepted too.
          if (e1 <= e0 + 1e-4 * s * slope || (tn < rnorm && s == 1.0)) {
            v = trial;
            r = rt;
            rnorm = tn;
            accepted = true;
            break;
          }
        }
        if (accepted) {
          ++sol.newton_iterations;
          if (picard) ++sol.picard_steps;
        }
      }
      if (!accepted) {
        std::ostringstream os;
        os << "caloric: line search stalled at time step " << k << "; residual history:";
        for (double x : history) os << ' ' << x;
        fail_numeric(os.str());
      }
      history.push_back(rnorm);
    }
    sol.max_residual = std::max(sol.max_residual, rnorm);
    std::copy(v.begin(), v.end(), sol.h.v.begin() + static_cast<std::ptrdiff_t>(k * slice));
  }

  const Field gh = gradient(sol.h);
  sol.flux = Field(g, g.m);
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    double s2 = sol.eps * sol.eps;
    for (int c = 0; c < g.m; ++c) s2 += gh.at(z, c) * gh.at(z, c);
    const double s = std::sqrt(s2);
    const double c0 = phi.d1(s) / s;
    for (int c = 0; c < g.m; ++c) sol.flux.at(z, c) = c0 * gh.at(z, c);
  }
  return sol;
}

Field flux_of(const NFunction& phi, const Field& f) {
  const Field gf = gradient(f);
  Field out(gf.grid, gf.rank);
  for (std::size_t z = 0; z < gf.grid.nodes(); ++z) {
    map_a(phi, std::span<const double>(&gf.v[z * gf.rank], gf.rank),
          std::span<double>(&out.v[z * gf.rank], gf.rank));
  }
  return out;
}

EnergyCheck energy_check(const NFunction& phi, const Field& u, const Field& h, const Field& H) {
  if (!u.grid.same_lattice(h.grid) || !u.grid.same_lattice(H.grid)) fail("energy_check: grids differ");
  const GridSpec& g = u.grid;
  const Field w = sub(u, h);
  const double span = g.tau * (g.nt - 1);
  EnergyCheck e;
  for (int k = 0; k < g.nt; ++k) e.sup_l2 = std::max(e.sup_l2, slice_mean(w, k, 2.0) / span);
  const Field gu = gradient(u);
  const Field dv = sub(v_of(phi, gu), v_of(phi, gradient(h)));
  double s = 0.0;
  for (std::size_t z = 0; z < g.nodes(); ++z) s += dv.norm_at(z) * dv.norm_at(z);
  e.v_gap = s / static_cast<double>(g.nodes());
  const Field G = sub(H, flux_of(phi, u));
  e.rhs = modular_mean(gu, phi) + conjugate_mean(G, phi);
  const double num = e.sup_l2 + e.v_gap;
  e.ratio = e.rhs > 0.0 ? num / e.rhs : (num > 0.0 ? INFINITY : 0.0);
  return e;
}

GoodLambda good_lambda_select(const NFunction& phi, const Field& w, const Field& g, int m0, double phi_gamma) {
  if (m0 < 1) fail("good_lambda: m0 must be at least 1");
  if (!w.grid.same_lattice(g.grid)) fail("good_lambda: grids differ");
  GoodLambda gl;
  const GridSpec& grid = w.grid;
  const Field gw = mask_to_domain(gradient(w));
  const Field gg = mask_to_domain(g);
  gl.bad.assign(grid.nodes(), 0);
  gl.phi_gamma = phi_gamma > 0.0 ? phi_gamma : modular_mean(gw, phi) + conjugate_mean(gg, phi);
  if (!(gl.phi_gamma > 0.0) || !std::isfinite(gl.phi_gamma)) return gl;  // zero data
  gl.gamma = phi.inverse(gl.phi_gamma);
  if (!(gl.gamma > 0.0) || !std::isfinite(gl.gamma)) return gl;

  const Field mw = magnitude(gw);
  const Field mg = magnitude(gg);
  const double total = static_cast<double>(grid.nodes());
  double best = INFINITY;
  std::vector<Mask> bads;
  for (int m = 0; m <= m0; ++m) {
    LambdaLevel lv;
    lv.lambda = std::ldexp(gl.gamma, m);
    const double dphi = phi.d1(lv.lambda);
    lv.alpha = lv.lambda / dphi;
    const auto radii = dyadic_radii(grid, lv.alpha);
    const Field a = m_alpha(mw, lv.alpha, radii);
    const Field b = m_alpha(mg, lv.alpha, radii);
    std::size_t na = 0, nb = 0;
    Mask bad(grid.nodes(), 0);
    for (std::size_t z = 0; z < grid.nodes(); ++z) {
      const bool ba = a.v[z] > lv.lambda;
      const bool bb = b.v[z] > dphi;
      na += ba;
      nb += bb;
      bad[z] = ba || bb;
    }
    lv.grad_fraction = static_cast<double>(na) / total;
    lv.flux_fraction = static_cast<double>(nb) / total;
    lv.term = phi(lv.lambda) * (lv.grad_fraction + lv.flux_fraction) / gl.phi_gamma;
    gl.pigeonhole += lv.term;
    if (lv.term < best) {
      best = lv.term;
      gl.level = m;
    }
    gl.levels.push_back(lv);
    bads.push_back(std::move(bad));
  }
  const LambdaLevel& sel = gl.levels[static_cast<std::size_t>(gl.level)];
  gl.lambda = sel.lambda;
  gl.alpha = sel.alpha;
  gl.bound = sel.term * m0;
  gl.bad = std::move(bads[static_cast<std::size_t>(gl.level)]);
  gl.bad_fraction = static_cast<double>(std::count(gl.bad.begin(), gl.bad.end(), 1)) / total;
  return gl;
}

TestFamily default_test_family(const GridSpec& g) {
  g.validate();
  TestFamily fam;
  const double t0 = g.tau * (g.nt - 1);
  double len = g.h * (g.n[0] - 1);
  if (g.m == 2) len = std::min(len, g.h * (g.n[1] - 1));
  const double r0 = len / 4.0;
  fam.alpha = 0.3 * t0 / (r0 * r0);
  for (double r : {r0, r0 / 1.5}) {
    const Shape s = cylinder_shape(g, r, fam.alpha);
    const int wx = s.wx[static_cast<std::size_t>(s.rj)];
    const int st = std::max(1, s.kt);
    const int sx = std::max(1, wx);
    for (int k = s.kt + 1; k + s.kt <= g.nt - 2; k += st)
      for (int i = wx + 1; i + wx <= g.n[0] - 2; i += sx) {
        if (g.m == 1) {
          fam.cylinders.push_back({k, i, 0, r});
          continue;
        }
        for (int j = s.rj + 1; j + s.rj <= g.n[1] - 2; j += sx) fam.cylinders.push_back({k, i, j, r});
      }
  }
  if (fam.cylinders.empty()) fail("defect: grid too small for the test family");
  return fam;
}

DefectResult defect(const NFunction& phi, const Field& u, const Field& H, const TestFamily& family) {
  if (family.cylinders.empty()) fail("defect: empty test family");
  const GridSpec& g = u.grid;
  const Field au = flux_of(phi, u);
  const Field gu = gradient(u);
  const double base = modular_mean(gu, phi) + conjugate_mean(H, phi);
  const double volume = static_cast<double>(g.nodes()) * g.cell();
  DefectResult res;
  res.delta = -1.0;
  for (const Cylinder& q : family.cylinders) {
    for (int idx = 0; idx < kFamilySize; ++idx) {
      const Field xi = family_member(g, q, family.alpha, idx);
      const Field gx = gradient(xi);
      double gmax = 0.0;
      for (std::size_t z = 0; z < g.nodes(); ++z) gmax = std::max(gmax, gx.norm_at(z));
      if (gmax == 0.0) continue;
      const double num = std::abs(-weak_time_pairing(u, xi) + weak_flux_pairing(au, xi)) / volume;
      const double den = base + phi(gmax);
      ++res.members;
      if (num / den > res.delta) {
        res.delta = num / den;
        res.numerator = num;
        res.denominator = den;
      }
    }
  }
  if (res.members == 0) fail("defect: no test function resolves on the grid");
  return res;
}

InterpolationCheck interpolation_check(const Field& f, double sigma, double q) {
  if (!(sigma > 0.0 && sigma < 1.0) || !(q >= 1.0)) fail("interpolation: need sigma in (0,1), q >= 1");
  const GridSpec& g = f.grid;
  std::vector<double> inner, l1sq;
  double sup2 = 0.0;
  for (int k = 0; k < g.nt; ++k) {
    inner.push_back(std::pow(slice_mean(f, k, 2.0 * sigma), q / sigma));
    const double l1 = slice_mean(f, k, 1.0);
    l1sq.push_back(l1 * l1);
    sup2 = std::max(sup2, slice_mean(f, k, 2.0));
  }
  InterpolationCheck c;
  c.lhs = std::pow(mean(inner), 1.0 / q);
  c.rhs = std::pow(sup2, (q - 1.0) / q) * std::pow(mean(l1sq), 1.0 / q);
  c.ratio = c.rhs > 0.0 ? c.lhs / c.rhs : 0.0;
  return c;
}

ExperimentReport approximation_experiment(const CaloricProblem& p, const SolverConfig& cfg, int m0) {
  const GridSpec& g = p.u.grid;
  if (!(p.sigma > 0.0 && p.sigma < 1.0) || !(p.theta > 0.0 && p.theta < 1.0) || !(p.q >= 1.0))
    fail("caloric: sigma, theta must lie in (0,1) and q >= 1");
  if (!g.same_lattice(p.H.grid) || p.H.rank != g.m) fail("caloric: H must be a rank-m field on the grid of u");
  p.u.check_finite();
  p.H.check_finite();

  ExperimentReport rep;
  const HeatSolution sol = solve_phi_heat(p.phi, p.u, cfg);
  rep.eps = sol.eps;
  rep.newton_iterations = sol.newton_iterations;
  const Field w = sub(p.u, sol.h);
  const Field G = sub(p.H, flux_of(p.phi, p.u));
  // The truncation needs the full flux of ∂_t w.
  const Field F = sub(p.H, sol.flux);

  rep.defect = defect(p.phi, p.u, p.H, default_test_family(g));
  const Field gu = gradient(p.u);
  rep.phi_gamma = modular_mean(gu, p.phi) + conjugate_mean(p.H, p.phi);
  rep.gamma = rep.phi_gamma > 0.0 ? p.phi.inverse(rep.phi_gamma) : 0.0;
  rep.energy = energy_check(p.phi, p.u, sol.h, p.H);

  const double span = g.tau * (g.nt - 1);
  const std::size_t nodes = g.nodes();
  {
    std::vector<double> inner;
    for (int k = 0; k < g.nt; ++k) {
      double s = 0.0;
      for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j) {
          const double x = w.v[g.node(k, i, j)];
          s += std::pow(x * x / span, p.sigma);
        }
      s /= static_cast<double>(g.n[0]) * g.n[1];
      inner.push_back(std::pow(s, p.q / p.sigma));
    }
    rep.d1 = std::pow(mean(inner), 1.0 / p.q);
  }
  const Field dv = sub(v_of(p.phi, gu), v_of(p.phi, gradient(sol.h)));
  {
    double s = 0.0;
    for (std::size_t z = 0; z < nodes; ++z) s += std::pow(dv.norm_at(z), 2.0 * p.theta);
    rep.d2 = std::pow(s / static_cast<double>(nodes), 1.0 / p.theta);
  }
  rep.term_iv = rep.d2;
  if (rep.phi_gamma > 0.0) {
    rep.d1_ratio = rep.d1 / rep.phi_gamma;
    rep.d2_ratio = rep.d2 / rep.phi_gamma;
    rep.total_ratio = rep.d1_ratio + rep.d2_ratio;
  }
  {
    Field f(g, 1);
    for (std::size_t z = 0; z < nodes; ++z) f.v[z] = std::abs(w.v[z]) / std::sqrt(span);
    double s = 0.0;
    for (int k = 0; k < g.nt; ++k) s += std::pow(slice_mean(f, k, 1.0), 2.0);
    rep.term_vi = s / g.nt;
    if (p.sigma > 0.5) rep.interpolation = interpolation_check(f, p.sigma, p.q);
  }

  rep.good_lambda = good_lambda_select(p.phi, w, G, m0, rep.phi_gamma);
  bool zero_w = true;
  for (double x : w.v) zero_w = zero_w && x == 0.0;
  if (rep.good_lambda.level < 0 || zero_w) return rep;

  TruncationParams tp;
  tp.lambda = rep.good_lambda.lambda;
  tp.alpha = rep.good_lambda.alpha;
  tp.phi = p.phi;
  const TruncationResult tr = truncate(w, F, tp);
  rep.truncated = true;
  const Field wl = restrict_to(tr.wlam, g, tr.ext.pad_t, tr.ext.pad_x);
  Mask bad(nodes, 0);
  const GridSpec& e = tr.ext.w.grid;
  for (std::size_t z = 0; z < nodes; ++z) {
    const auto c = g.coords(z);
    bad[z] = tr.bad[e.node(c[0] + tr.ext.pad_t, c[1] + tr.ext.pad_x, g.m == 2 ? c[2] + tr.ext.pad_x : 0)];
  }
  const Field wlt = dt_backward(wl);
  const Field ah = flux_of(p.phi, sol.h);
  const Field au = flux_of(p.phi, p.u);
  double i1 = 0.0, i2 = 0.0, ii2 = 0.0;
  std::size_t nbad = 0;
  for (std::size_t z = 0; z < nodes; ++z) {
    const double eta = std::max(-g.t(g.coords(z)[0]) / span, 0.0);
    i1 += 0.5 * wl.v[z] * wl.v[z] / span;
    if (!bad[z]) continue;
    ++nbad;
    i2 += std::abs(w.v[z] - wl.v[z]) * std::abs(wlt.v[z]) * eta;
    ii2 += (au.norm_at(z) + ah.norm_at(z)) * tp.lambda;
  }
  rep.bad_fraction = static_cast<double>(nbad) / static_cast<double>(nodes);
  rep.term_i1 = i1 / static_cast<double>(nodes);
  rep.term_i2 = i2 / static_cast<double>(nodes);
  rep.term_ii2 = ii2 / static_cast<double>(nodes);
  return rep;
}

CaloricProblem perturbed_problem(const PerturbedSetup& s, const NFunction& phi, const SolverConfig& cfg) {
  if (s.m != 1 && s.m != 2) fail("caloric: m must be 1 or 2");
  std::array<int, 2> n = s.n;
  if (s.m == 1) n[1] = 1;
  const double h = 1.0 / (n[0] - 1);
  const double tau = s.t0 / (s.nt - 1);
  const GridSpec g = GridSpec::base(s.m, s.nt, n, h, tau);
  g.validate();

  const double pi = std::acos(-1.0);
  Field data(g, 1);
  for (int k = 0; k < g.nt; ++k)
    for (int i = 0; i < n[0]; ++i)
      for (int j = 0; j < n[1]; ++j) {
        const double x = g.x(0, i);
        double prof = std::sin(pi * x);
        if (s.m == 2) prof *= std::sin(pi * g.x(1, j) / (h * (n[1] - 1)));
        data.v[g.node(k, i, j)] = s.slope * x + (k == 0 ? prof : 0.0);
      }
  const HeatSolution h0 = solve_phi_heat(phi, data, cfg);

  Field bump(g, 1);
  const double tc = -0.5 * s.t0, tw = 0.35 * s.t0;
  auto poly = [](double u) { return std::abs(u) < 1.0 ? std::pow(1.0 - u * u, 3) : 0.0; };
  for (int k = 0; k < g.nt; ++k)
    for (int i = 0; i < n[0]; ++i)
      for (int j = 0; j < n[1]; ++j) {
        double b = poly((g.t(k) - tc) / tw) * poly((g.x(0, i) - 0.5) / 0.3);
        if (s.m == 2) b *= poly((g.x(1, j) - 0.5 * h * (n[1] - 1)) / (0.3 * h * (n[1] - 1)));
        bump.v[g.node(k, i, j)] = b;
      }
  const Field gb = flux_from(bump);

  CaloricProblem p;
  p.phi = phi;
  p.u = h0.h;
  p.H = h0.flux;
  for (std::size_t z = 0; z < g.nodes(); ++z) p.u.v[z] += s.eps * bump.v[z];
  for (std::size_t z = 0; z < p.H.v.size(); ++z) p.H.v[z] += s.eps * gb.v[z];
  return p;
}

}  // namespace paratrunc
