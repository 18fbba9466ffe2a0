#include <doctest.h>

#include <cmath>
#include <random>

#include "paratrunc/error.hpp"
#include "paratrunc/fields.hpp"
#include "paratrunc/maximal.hpp"
#include "support.hpp"

using namespace paratrunc;

using paratrunc::testing::brute_maximal;

TEST_CASE("maximal function of a constant") {
  const GridSpec g = GridSpec::base(1, 16, {24, 1}, 0.1, 0.01);
  Field f(g, 1, -2.0);
  const double alpha = 0.7;
  const Field m = m_alpha(f, alpha, dyadic_radii(g, alpha));
  for (double v : m.v) CHECK(v == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("maximal function equals exhaustive enumeration") {
  for (int m : {1, 2}) {
    const GridSpec g = m == 1 ? GridSpec::base(1, 8, {8, 1}, 1.0 / 7, 1.0 / 7) : GridSpec::base(2, 6, {6, 6}, 0.2, 0.05);
    for (double alpha : {0.3, 1.0, 4.0}) {
      const auto radii = dyadic_radii(g, alpha);
      Field f(g, 1);
      f.v[g.node(3, 4, m == 2 ? 2 : 0)] = 1.0;
      const Field fast = m_alpha(f, alpha, radii);
      const Field slow = brute_maximal(f, alpha, radii);
      for (std::size_t z = 0; z < g.nodes(); ++z) CHECK(fast.v[z] == doctest::Approx(slow.v[z]).epsilon(1e-13));
      // random field too
      std::mt19937_64 rng(42);
      for (double& x : f.v) x = uniform01(rng) - 0.3;
      const Field fast2 = m_alpha(f, alpha, radii);
      const Field slow2 = brute_maximal(f, alpha, radii);
      for (std::size_t z = 0; z < g.nodes(); ++z) CHECK(fast2.v[z] == doctest::Approx(slow2.v[z]).epsilon(1e-12));
    }
  }
}

TEST_CASE("maximal function dominates the averages of containing cylinders") {
  const GridSpec g = GridSpec::base(1, 20, {30, 1}, 0.05, 0.002);
  const FieldPair fp = make_preset("spike", g, 3);
  const double alpha = 0.5;
  const auto radii = dyadic_radii(g, alpha);
  const Field m = m_alpha(fp.w, alpha, radii);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const Cylinder q{static_cast<int>(rng() % g.nt), static_cast<int>(rng() % g.n[0]), 0,
                     radii[rng() % radii.size()]};
    const double avg = mean_abs(fp.w, q, alpha);
    CHECK(m.v[g.node(q.k, q.i)] >= avg * (1 - 1e-14));
  }
}

TEST_CASE("sublinearity and monotonicity in the radius set") {
  const GridSpec g = GridSpec::base(2, 10, {12, 12}, 1.0 / 11, 0.01);
  const FieldPair a = make_preset("random", g, 1), b = make_preset("random", g, 2);
  Field s = a.w;
  for (std::size_t z = 0; z < s.v.size(); ++z) s.v[z] += b.w.v[z];
  const double alpha = 1.0;
  const auto radii = dyadic_radii(g, alpha);
  const Field ms = m_alpha(s, alpha, radii), ma = m_alpha(a.w, alpha, radii), mb = m_alpha(b.w, alpha, radii);
  for (std::size_t z = 0; z < g.nodes(); ++z) CHECK(ms.v[z] <= (ma.v[z] + mb.v[z]) * (1 + 1e-13));
  std::vector<double> fewer(radii.begin(), radii.begin() + static_cast<long>(radii.size() / 2));
  const Field mf = m_alpha(a.w, alpha, fewer);
  for (std::size_t z = 0; z < g.nodes(); ++z) CHECK(mf.v[z] <= ma.v[z]);
}

TEST_CASE("sharp averages") {
  const GridSpec g = GridSpec::base(1, 9, {41, 1}, 0.025, 0.01);
  Field c(g, 1, 1.7);
  CHECK(sharp_mq(c, {4, 20, 0, 0.1}, 1.0) == doctest::Approx(0.0).scale(1.0));
  Field lin(g, 1);
  for (std::size_t z = 0; z < g.nodes(); ++z) lin.v[z] = g.x(0, g.coords(z)[1]);
  const double alpha = 1.0;
  std::vector<double> vals;
  for (double r : {4 * g.h, 8 * g.h}) {
    const Cylinder q{4, 20, 0, r};
    // direct computation over the nodes of Q
    const Shape s = cylinder_shape(g, r, alpha);
    double mean = 0.0, n = 0.0;
    for_each_node(g, s, q, [&](std::size_t z) { mean += lin.v[z]; n += 1.0; });
    mean /= n;
    double dev = 0.0;
    for_each_node(g, s, q, [&](std::size_t z) { dev += std::abs(lin.v[z] - mean); });
    const double direct = dev / n / r;
    CHECK(sharp_mq(lin, q, alpha) == doctest::Approx(direct).epsilon(1e-13));
    // never above twice the mean deviation from the mean
    CHECK(sharp_mq(lin, q, alpha) <= 2.0 * direct + 1e-15);
    vals.push_back(direct);
  }
  // slope of a linear function: scale-free up to lattice effects
  CHECK(vals[0] == doctest::Approx(vals[1]).epsilon(0.1));
  CHECK(vals[1] == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("negative-norm averages") {
  const GridSpec g = GridSpec::base(1, 24, {32, 1}, 1.0 / 31, 0.01);
  Field w(g, 1), zero(g, 1);
  for (std::size_t z = 0; z < g.nodes(); ++z) w.v[z] = std::sin(3.0 * g.x(0, g.coords(z)[1]));
  const Cylinder q{12, 16, 0, 6 * g.h};
  const double alpha = 2.0;
  CHECK(n_flux(zero, q, alpha) == 0.0);
  CHECK(n_family(w, q, alpha) == doctest::Approx(0.0).scale(1.0));
  Field c(g, 1, -0.75);
  CHECK(n_flux(c, q, alpha) == doctest::Approx(0.75).epsilon(1e-14));

  // test-function tier below the flux tier on cylinders inside the grid
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const FieldPair fp = make_preset("random", g, 100 + trial);
    const double r = (2 + rng() % 5) * g.h;
    const double a = 0.2 + 3.0 * uniform01(rng);
    const Shape s = cylinder_shape(g, r, a);
    const int w0 = s.wx[0];
    if (2 * s.kt + 3 > g.nt || 2 * w0 + 3 > g.n[0]) continue;
    const Cylinder qq{s.kt + 1 + static_cast<int>(rng() % (g.nt - 2 * s.kt - 2)),
                      w0 + 1 + static_cast<int>(rng() % (g.n[0] - 2 * w0 - 2)), 0, r};
    CHECK(n_family(fp.w, qq, a) <= n_flux(fp.g, qq, a) * (1 + 1e-12) + 1e-15);
    ++checked;
  }
  CHECK(checked >= 30);
}

TEST_CASE("test family normalisation and support") {
  const GridSpec g = GridSpec::base(2, 21, {21, 21}, 0.05, 0.0025);
  const Cylinder q{10, 10, 10, 0.3};
  const double alpha = 0.2;
  for (int idx = 0; idx < kFamilySize; ++idx) {
    const Field xi = family_member(g, q, alpha, idx);
    const Field gx = gradient(xi), tx = dt_backward(xi);
    double sup = 0.0, sg = 0.0, st = 0.0;
    for (std::size_t z = 0; z < g.nodes(); ++z) {
      sup = std::max(sup, std::abs(xi.v[z]));
      sg = std::max(sg, gx.norm_at(z));
      st = std::max(st, std::abs(tx.v[z]));
      if (xi.v[z] != 0.0) {
        const auto c = g.coords(z);
        CHECK(std::abs(c[0] - q.k) * g.tau <= alpha * q.r * q.r * (1 + 1e-12));
      }
    }
    CHECK(sup + q.r * sg + alpha * q.r * q.r * st <= 1.0 + 1e-9);
    CHECK(sup > 0.0);
  }
  CHECK_THROWS_AS(family_member(g, q, alpha, kFamilySize), Error);
}

TEST_CASE("flux tier of N equals the maximal function of |G|") {
  const GridSpec g = GridSpec::base(2, 8, {10, 10}, 0.1, 0.01);
  const FieldPair fp = make_preset("random", g, 8);
  const auto radii = dyadic_radii(g, 1.0);
  const Field a = n_alpha_flux(fp.g, 1.0, radii), b = m_alpha(magnitude(fp.g), 1.0, radii);
  CHECK(a.v == b.v);
}

TEST_CASE("invalid cylinders") {
  const GridSpec g = GridSpec::base(1, 8, {8, 1}, 0.1, 0.1);
  CHECK_THROWS_AS(cylinder_shape(g, 0.0, 1.0), Error);
  CHECK_THROWS_AS(cylinder_shape(g, 1.0, -1.0), Error);
  CHECK_THROWS_AS(dyadic_radii(g, 0.0), Error);
}
