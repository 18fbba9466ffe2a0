#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "paratrunc/caloric.hpp"
#include "paratrunc/error.hpp"
#include "paratrunc/fields.hpp"
#include "support.hpp"

using namespace paratrunc;
using paratrunc::testing::brute_maximal;

namespace {

constexpr double kPi = std::numbers::pi;

// m = 1 grid on [-t0, 0] x [0, 1]
GridSpec line_grid(int nt, int n, double t0 = 0.1) { return GridSpec::base(1, nt, {n, 1}, 1.0 / (n - 1), t0 / (nt - 1)); }

Field heat_mode(const GridSpec& g, double c) {
  Field f(g, 1);
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    const auto k = g.coords(z);
    f.v[z] = std::exp(-c * kPi * kPi * (g.t(k[0]) + g.t0)) * std::sin(kPi * g.x(0, k[1]));
  }
  return f;
}

double max_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t z = 0; z < a.v.size(); ++z) d = std::max(d, std::abs(a.v[z] - b.v[z]));
  return d;
}

}  // namespace

TEST_CASE("linear case converges to the exact heat solution") {
  const NFunction phi = NFunction::power(2.0);
  const double c = phi.d1(1.0);  // A(xi) = c xi
  double prev = 0.0;
  for (int level = 0; level < 3; ++level) {
    const int n = (8 << level) + 1, nt = 16 * (1 << (2 * level)) + 1;
    const GridSpec g = line_grid(nt, n);
    const Field exact = heat_mode(g, c);
    const HeatSolution sol = solve_phi_heat(phi, exact, SolverConfig{});
    const double err = max_diff(sol.h, exact);
    if (level > 0) {
      const double order = std::log(prev / err) / std::log(4.0);
      CHECK(order >= 0.9);
    }
    prev = err;
  }
}

TEST_CASE("affine data is a steady state for power N-functions") {
  for (double p : {2.0, 3.0, 1.6}) {
    const NFunction phi = NFunction::power(p);
    for (int m : {1, 2}) {
      const GridSpec g = m == 1 ? line_grid(9, 17) : GridSpec::base(2, 6, {9, 9}, 1.0 / 8, 0.02);
      Field data(g, 1);
      for (std::size_t z = 0; z < g.nodes(); ++z) {
        const auto k = g.coords(z);
        data.v[z] = 0.3 + 1.5 * g.x(0, k[1]) - (m == 2 ? 0.7 * g.x(1, k[2]) : 0.0);
      }
      const HeatSolution sol = solve_phi_heat(phi, data, SolverConfig{});
      CHECK(max_diff(sol.h, data) < 1e-10);
    }
  }
}

TEST_CASE("nonlinear solution satisfies the discrete equation") {
  const NFunction phi = NFunction::power(3.0);
  const GridSpec g = line_grid(33, 17);
  const FieldPair f = make_preset("smooth", g, 1);
  Field data = f.w;
  for (std::size_t z = 0; z < g.nodes(); ++z) data.v[z] += g.x(0, g.coords(z)[1]);  // nonzero face values
  SolverConfig cfg;
  const HeatSolution sol = solve_phi_heat(phi, data, cfg);
  CHECK(sol.max_residual < cfg.tol);
  const Field div = divergence(sol.flux);
  const Field dt = dt_backward(sol.h);
  double worst = 0.0;
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    const auto k = g.coords(z);
    if (k[0] == 0 || k[1] == 0 || k[1] == g.n[0] - 1) continue;
    worst = std::max(worst, std::abs(div.v[z] - dt.v[z]));
  }
  CHECK(worst * g.tau < 1.01 * cfg.tol);
  // boundary values are kept
  for (int k = 0; k < g.nt; ++k) {
    CHECK(sol.h.v[g.node(k, 0)] == data.v[g.node(k, 0)]);
    CHECK(sol.h.v[g.node(k, g.n[0] - 1)] == data.v[g.node(k, g.n[0] - 1)]);
  }
}

TEST_CASE("solver rejects bad configuration") {
  const GridSpec g = line_grid(5, 5);
  const Field data(g, 1);
  SolverConfig cfg;
  cfg.tol = 0.0;
  CHECK_THROWS_AS(solve_phi_heat(NFunction::power(2.0), data, cfg), Error);
  cfg = SolverConfig{};
  cfg.max_iter = 0;
  CHECK_THROWS_AS(solve_phi_heat(NFunction::power(2.0), data, cfg), Error);
}

TEST_CASE("energy check vanishes when u solves the comparison problem") {
  const NFunction phi = NFunction::power(2.0);
  const GridSpec g = line_grid(17, 17);
  const HeatSolution sol = solve_phi_heat(phi, heat_mode(g, phi.d1(1.0)), SolverConfig{});
  const EnergyCheck e = energy_check(phi, sol.h, sol.h, sol.flux);
  CHECK(e.sup_l2 == 0.0);
  CHECK(e.v_gap == 0.0);
  CHECK(e.rhs > 0.0);
  CHECK(e.ratio == 0.0);
}

TEST_CASE("good lambda: zero data gives the sentinel") {
  const GridSpec g = line_grid(9, 9);
  const GoodLambda gl = good_lambda_select(NFunction::power(2.0), Field(g, 1), Field(g, 1), 3);
  CHECK(gl.level == -1);
  CHECK(gl.gamma == 0.0);
  CHECK(gl.levels.empty());
  CHECK_THROWS_AS(good_lambda_select(NFunction::power(2.0), Field(g, 1), Field(g, 1), 0), Error);
}

TEST_CASE("good lambda: level terms match exhaustive maximal functions") {
  const GridSpec g = line_grid(9, 11);
  const FieldPair f = make_preset("spike", g, 3);
  for (double p : {2.0, 3.0}) {
    const NFunction phi = NFunction::power(p);
    for (int m0 : {1, 3}) {
      const GoodLambda gl = good_lambda_select(phi, f.w, f.g, m0);
      REQUIRE(gl.levels.size() == std::size_t(m0 + 1));
      CHECK(gl.level >= 0);
      CHECK(gl.level <= m0);
      double sum = 0.0, best = INFINITY;
      const Field gw = mask_to_domain(gradient(f.w));
      const Field gg = mask_to_domain(f.g);
      for (int m = 0; m <= m0; ++m) {
        const LambdaLevel& lv = gl.levels[m];
        CHECK(lv.lambda == doctest::Approx(std::ldexp(gl.gamma, m)));
        const auto radii = dyadic_radii(g, lv.alpha);
        const Field a = brute_maximal(gw, lv.alpha, radii);
        const Field b = brute_maximal(gg, lv.alpha, radii);
        const double dphi = phi.d1(lv.lambda);
        int na = 0, nb = 0, close = 0;
        for (std::size_t z = 0; z < g.nodes(); ++z) {
          na += a.v[z] > lv.lambda;
          nb += b.v[z] > dphi;
          close += std::abs(a.v[z] - lv.lambda) < 1e-9 * lv.lambda || std::abs(b.v[z] - dphi) < 1e-9 * dphi;
        }
        const double total = double(g.nodes());
        CHECK(std::abs(std::lround(lv.grad_fraction * total) - na) <= close);
        CHECK(std::abs(std::lround(lv.flux_fraction * total) - nb) <= close);
        const double term = phi(lv.lambda) * (lv.grad_fraction + lv.flux_fraction) / gl.phi_gamma;
        CHECK(lv.term == doctest::Approx(term).epsilon(1e-12));
        sum += term;
        best = std::min(best, term);
      }
      CHECK(gl.pigeonhole == doctest::Approx(sum).epsilon(1e-12));
      CHECK(gl.levels[gl.level].term == best);
      CHECK(gl.bound == doctest::Approx(best * m0));
      CHECK(best <= sum / (m0 + 1) + 1e-15);
    }
  }
}

TEST_CASE("defect vanishes for solutions and grows with the perturbation") {
  const NFunction phi = NFunction::power(2.0);
  const GridSpec g = line_grid(33, 17);
  const HeatSolution sol = solve_phi_heat(phi, heat_mode(g, phi.d1(1.0)), SolverConfig{});
  const TestFamily fam = default_test_family(g);
  REQUIRE(!fam.cylinders.empty());
  const DefectResult d0 = defect(phi, sol.h, sol.flux, fam);
  CHECK(d0.members > 0);
  CHECK(d0.delta < 1e-8);

  for (double p : {2.0, 3.0}) {
    const NFunction ph = NFunction::power(p);
    double prev = -1.0;
    for (double eps : {0.0, 0.01, 0.05, 0.2}) {
      PerturbedSetup s;
      s.eps = eps;
      const CaloricProblem prob = perturbed_problem(s, ph, SolverConfig{});
      const DefectResult d = defect(ph, prob.u, prob.H, default_test_family(prob.u.grid));
      if (eps == 0.0) CHECK(d.delta < 1e-8);
      CHECK(d.delta > prev);
      prev = d.delta;
    }
  }
}

TEST_CASE("defect numerator is linear in the data for p = 2") {
  const NFunction phi = NFunction::power(2.0);
  PerturbedSetup s;
  s.eps = 0.1;
  const CaloricProblem prob = perturbed_problem(s, phi, SolverConfig{});
  const TestFamily fam = default_test_family(prob.u.grid);
  const DefectResult d1 = defect(phi, prob.u, prob.H, fam);
  Field u2 = prob.u, h2 = prob.H;
  for (double& v : u2.v) v *= 3.0;
  for (double& v : h2.v) v *= 3.0;
  const DefectResult d3 = defect(phi, u2, h2, fam);
  CHECK(d3.members == d1.members);
  CHECK(d3.numerator == doctest::Approx(3.0 * d1.numerator).epsilon(1e-9));
}

TEST_CASE("interpolation check: equality cases") {
  const GridSpec g = line_grid(9, 9);
  Field c(g, 1, 2.5);
  const InterpolationCheck a = interpolation_check(c, 0.75, 2.0);
  CHECK(a.ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.lhs == doctest::Approx(2.5 * 2.5).epsilon(1e-12));
  Field f(g, 1);
  for (std::size_t z = 0; z < g.nodes(); ++z) f.v[z] = 1.0 + std::sin(0.37 * double(z)) * std::sin(0.37 * double(z));
  // sigma = 1/2, q = 1: both sides are the time mean of the squared space mean
  CHECK(interpolation_check(f, 0.5, 1.0).ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(interpolation_check(f, 1.0, 1.0), Error);
  CHECK_THROWS_AS(interpolation_check(f, 0.5, 0.5), Error);
}

TEST_CASE("experiment on exact data: no truncation, zero distances") {
  PerturbedSetup s;
  s.nt = 33;
  s.n = {17, 1};
  const NFunction phi = NFunction::power(2.0);
  const CaloricProblem prob = perturbed_problem(s, phi, SolverConfig{});
  const ExperimentReport r = approximation_experiment(prob, SolverConfig{}, 2);
  CHECK(r.d1 == 0.0);
  CHECK(r.d2 == 0.0);
  CHECK(r.defect.delta < 1e-8);
  CHECK(r.phi_gamma > 0.0);
}
