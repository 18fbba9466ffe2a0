#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "paratrunc/error.hpp"
#include "paratrunc/fields.hpp"
#include "paratrunc/grid.hpp"
#include "paratrunc/orlicz.hpp"

using namespace paratrunc;

namespace {

GridSpec grid1(int nt = 9, int n = 11) { return GridSpec::base(1, nt, {n, 1}, 1.0 / (n - 1), 0.5 / (nt - 1)); }
GridSpec grid2(int nt = 7, int n = 9) { return GridSpec::base(2, nt, {n, n}, 1.0 / (n - 1), 0.5 / (nt - 1)); }

// Random smooth-ish ξ supported strictly inside the spatial box of `g`, in
// time between k0 and k1.
Field random_test(const GridSpec& g, std::mt19937_64& rng, int k0, int k1, int margin) {
  Field xi(g, 1);
  for (int k = k0; k <= k1; ++k)
    for (int i = margin; i < g.n[0] - margin; ++i)
      for (int j = g.m == 2 ? margin : 0; j < (g.m == 2 ? g.n[1] - margin : 1); ++j)
        xi.v[g.node(k, i, j)] = uniform01(rng) - 0.5;
  return xi;
}

double weak_residual(const Field& w, const Field& g, const Field& xi) {
  return std::abs(weak_time_pairing(w, xi) - weak_flux_pairing(g, xi));
}

}  // namespace

TEST_CASE("grid indexing round-trips") {
  const GridSpec g = grid2();
  for (std::size_t z = 0; z < g.nodes(); z += 7) {
    const auto c = g.coords(z);
    CHECK(g.node(c[0], c[1], c[2]) == z);
  }
  CHECK(g.t(g.nt - 1) == doctest::Approx(0.0));
  CHECK(g.t(0) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(GridSpec::base(1, 3, {10, 1}, 0.1, 0.1), Error);
}

TEST_CASE("gradient of a linear function is its slope") {
  for (const GridSpec& g : {grid1(), grid2()}) {
    Field w(g, 1);
    for (std::size_t z = 0; z < g.nodes(); ++z) {
      const auto c = g.coords(z);
      w.v[z] = 2.5 * g.x(0, c[1]) + (g.m == 2 ? -1.5 * g.x(1, c[2]) : 0.0);
    }
    const Field gr = gradient(w);
    for (std::size_t z = 0; z < g.nodes(); ++z) {
      CHECK(gr.at(z, 0) == doctest::Approx(2.5).epsilon(1e-12));
      if (g.m == 2) CHECK(gr.at(z, 1) == doctest::Approx(-1.5).epsilon(1e-12));
    }
  }
}

TEST_CASE("divergence of the gradient of |x|^2 is 2m inside") {
  for (const GridSpec& g : {grid1(), grid2()}) {
    Field w(g, 1);
    for (std::size_t z = 0; z < g.nodes(); ++z) {
      const auto c = g.coords(z);
      const double x = g.x(0, c[1]), y = g.m == 2 ? g.x(1, c[2]) : 0.0;
      w.v[z] = x * x + y * y;
    }
    const Field lap = divergence(gradient(w));
    for (std::size_t z = 0; z < g.nodes(); ++z) {
      const auto c = g.coords(z);
      const bool inside = c[1] > 0 && c[1] < g.n[0] - 1 && (g.m == 1 || (c[2] > 0 && c[2] < g.n[1] - 1));
      if (inside) CHECK(lap.v[z] == doctest::Approx(2.0 * g.m).epsilon(1e-9));
    }
  }
}

TEST_CASE("summation by parts for interior-supported fields") {
  std::mt19937_64 rng(3);
  for (const GridSpec& g : {grid1(), grid2()}) {
    const Field w = random_test(g, rng, 0, g.nt - 1, 2);
    Field G(g, g.m);
    for (int k = 0; k < g.nt; ++k)
      for (int i = 2; i < g.n[0] - 2; ++i)
        for (int j = g.m == 2 ? 2 : 0; j < (g.m == 2 ? g.n[1] - 2 : 1); ++j)
          for (int d = 0; d < g.m; ++d) G.at(g.node(k, i, j), d) = uniform01(rng) - 0.5;
    const Field gw = gradient(w), dg = divergence(G);
    double a = 0.0, b = 0.0, scale = 0.0;
    for (std::size_t z = 0; z < g.nodes(); ++z) {
      for (int d = 0; d < g.m; ++d) a += gw.at(z, d) * G.at(z, d);
      b += w.v[z] * dg.v[z];
      scale += std::abs(w.v[z] * dg.v[z]);
    }
    CHECK(std::abs(a + b) <= 1e-12 * scale);
  }
}

TEST_CASE("preset flux satisfies the discrete equation") {
  for (const GridSpec& g : {grid1(17, 21), grid2(9, 13)}) {
    for (const char* name : {"smooth", "spike", "random"}) {
      const FieldPair fp = make_preset(name, g, 5);
      validate_boundary(fp.w);
      const Field lhs = dt_backward(fp.w), rhs = divergence(fp.g);
      for (std::size_t z = 0; z < g.nodes(); ++z) CHECK(lhs.v[z] == doctest::Approx(rhs.v[z]).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("extension: zero, reflection, weak residual") {
  const GridSpec g = grid1(17, 21);
  {
    const Field z1(g, 1), z2(g, 1);
    const Extension e = extend(z1, z2, 3, 2);
    for (double v : e.w.v) CHECK(v == 0.0);
  }
  // separable w = f(t) g(x): extended value at +t equals the one at −t
  Field w(g, 1);
  for (int k = 0; k < g.nt; ++k)
    for (int i = 0; i < g.n[0]; ++i) w.v[g.node(k, i)] = std::pow(g.t(k) + 0.5, 2) * std::sin(M_PI * g.x(0, i));
  const Field G = flux_from(w);
  const Extension e = extend(w, G, 3, 2);
  const GridSpec& eg = e.w.grid;
  const int kz = 3 + g.nt - 1;
  for (int s = 0; s < g.nt; ++s)
    for (int i = 0; i < eg.n[0]; ++i) CHECK(e.w.v[eg.node(kz + s, i)] == e.w.v[eg.node(kz - s, i)]);
  CHECK(eg.t(kz) == doctest::Approx(0.0).scale(1.0));
  // round trip
  const Field back = restrict_to(e.w, g, 3, 2);
  CHECK(back.v == w.v);

  std::mt19937_64 rng(9);
  double base = 0.0;
  for (int r = 0; r < 20; ++r) base = std::max(base, weak_residual(w, G, random_test(g, rng, 0, g.nt - 1, 1)));
  for (int r = 0; r < 20; ++r) {
    const Field xi = random_test(eg, rng, 0, eg.nt - 1, 2 + 1);
    CHECK(weak_residual(e.w, e.g, xi) <= 2.0 * base + 1e-12);
  }
}

TEST_CASE("extension in two dimensions keeps the equation") {
  const GridSpec g = grid2(9, 11);
  const FieldPair fp = make_preset("random", g, 2);
  const Extension e = extend(fp.w, fp.g, 2, 2);
  const Field lhs = dt_backward(e.w), rhs = divergence(e.g);
  const GridSpec& eg = e.w.grid;
  for (std::size_t z = 0; z < eg.nodes(); ++z) {
    const auto c = eg.coords(z);
    if (!eg.in_domain(c[0], c[1], c[2])) continue;
    CHECK(lhs.v[z] == doctest::Approx(rhs.v[z]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("weighted means") {
  const GridSpec g = grid1();
  Field f(g, 1, 3.25), rho(g, 1, 1.0);
  CHECK(weighted_mean(f, rho)[0] == doctest::Approx(3.25).epsilon(1e-15));
  // indicator of the second half of the time slices, uniform interior weight
  Field ind(g, 1), u(g, 1);
  double num = 0.0, den = 0.0;
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    const auto c = g.coords(z);
    ind.v[z] = c[0] >= g.nt / 2 ? 1.0 : 0.0;
    u.v[z] = 1.0;
    const double wt = trapezoid_weight(g, c[0], c[1], c[2]);
    num += wt * ind.v[z];
    den += wt;
  }
  CHECK(weighted_mean(ind, u)[0] == doctest::Approx(num / den).epsilon(1e-14));
  // χ_E weight gives the plain mean over E
  Field e(g, 1), vals(g, 1);
  double s = 0.0, cnt = 0.0;
  for (std::size_t z = 0; z < g.nodes(); ++z) {
    const auto c = g.coords(z);
    vals.v[z] = std::sin(0.3 * static_cast<double>(z));
    if (c[0] > 0 && c[0] < g.nt - 1 && c[1] > 0 && c[1] < g.n[0] - 1 && c[1] % 2 == 0) {
      e.v[z] = 1.0;
      s += vals.v[z];
      cnt += 1.0;
    }
  }
  CHECK(weighted_mean(vals, e)[0] == doctest::Approx(s / cnt).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(weighted_mean(f, Field(g, 1)), doctest::Contains("degenerate weight"), Error);
}

TEST_CASE("modular integral") {
  const GridSpec g = GridSpec::base(2, 9, {9, 9}, 1.0 / 8, 1.0 / 8);
  const auto phi = NFunction::power(2.0);
  CHECK(modular_integral(Field(g, 1), phi) == 0.0);
  CHECK(modular_integral(Field(g, 1, 1.0), phi) == doctest::Approx(0.5).epsilon(1e-12));
  const FieldPair fp = make_preset("smooth", g, 1);
  double prev = 0.0;
  for (double lam : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    Field s = fp.w;
    for (double& x : s.v) x *= lam;
    const double v = modular_integral(s, phi);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("field files round-trip") {
  const GridSpec g = grid2();
  const FieldPair fp = make_preset("random", g, 4);
  write_ptf(fp.g, "grid_test.ptf");
  const Field back = read_ptf("grid_test.ptf");
  CHECK(back.rank == fp.g.rank);
  CHECK(back.grid.same_lattice(g));
  CHECK(back.v == fp.g.v);
  std::remove("grid_test.ptf");

  const GridSpec g1 = grid1();
  const FieldPair f1 = make_preset("smooth", g1, 1);
  write_csv(f1.w, "grid_test.csv");
  const Field c = read_csv("grid_test.csv", g1.h, g1.tau);
  CHECK(c.grid.same_lattice(g1));
  for (std::size_t z = 0; z < c.v.size(); ++z) CHECK(c.v[z] == doctest::Approx(f1.w.v[z]).epsilon(1e-15));
  std::remove("grid_test.csv");

  {
    std::ofstream bad("grid_bad.ptf", std::ios::binary);
    bad << "NOPE1234";
  }
  CHECK_THROWS_AS(read_ptf("grid_bad.ptf"), Error);
  std::remove("grid_bad.ptf");
  CHECK_THROWS_AS(read_ptf("/nonexistent/x.ptf"), Error);
}

TEST_CASE("boundary validation") {
  const GridSpec g = grid1();
  Field w(g, 1);
  validate_boundary(w);
  w.v[g.node(3, 5)] = 1.0;
  validate_boundary(w);
  w.v[g.node(3, 0)] = 0.5;
  CHECK_THROWS_AS(validate_boundary(w), Error);
  Field w2(g, 1);
  w2.v[g.node(3, 5)] = 1.0;
  w2.v[g.node(0, 4)] = 0.5;
  CHECK_THROWS_AS(validate_boundary(w2), Error);
}
