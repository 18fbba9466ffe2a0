#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include "paratrunc/error.hpp"
#include "paratrunc/fields.hpp"
#include "paratrunc/orlicz.hpp"

using namespace paratrunc;

namespace {

// sup_t (s t − φ(t)) by brute grid search on [0, tmax].
double grid_conjugate(const NFunction& phi, double s, double tmax = 10.0, double step = 1e-4) {
  double best = 0.0;
  for (double t = 0.0; t <= tmax; t += step) best = std::max(best, s * t - phi(t));
  return best;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("quadratic is self-conjugate") {
  const auto phi = NFunction::power(2.0);
  CHECK(phi.conjugate(3.0) == doctest::Approx(4.5).epsilon(1e-14));
}

TEST_CASE("quartic conjugate matches grid maximisation") {
  const auto phi = NFunction::power(4.0);
  CHECK(phi.conjugate(1.0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(phi.conjugate(1.0) == doctest::Approx(grid_conjugate(phi, 1.0)).epsilon(1e-6));
}

TEST_CASE("cubic: conjugate of the derivative is comparable to phi") {
  const auto phi = NFunction::power(3.0);
  const double star = grid_conjugate(phi, phi.d1(2.0));
  CHECK(star == doctest::Approx(16.0 / 3.0).epsilon(1e-6));
  CHECK(phi.conjugate(phi.d1(2.0)) / phi(2.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("associated function psi") {
  const auto psi2 = psi_from(NFunction::power(2.0));
  for (double t : {0.1, 1.0, 7.0}) CHECK(psi2(t) == doctest::Approx(t * t / 2).epsilon(1e-12));
  const auto phi4 = NFunction::power(4.0);
  const auto psi4 = psi_from(phi4);
  const double quad = simpson([&](double t) { return std::sqrt(phi4.d1(t) * t); }, 0.0, 2.0);
  CHECK(quad == doctest::Approx(8.0 / 3.0).epsilon(1e-9));
  CHECK(psi4(2.0) == doctest::Approx(quad).epsilon(1e-8));
  const auto& c = psi4.characteristics();
  CHECK(c.c1 > 0.0);
  CHECK(c.c2 < INFINITY);
}

TEST_CASE("shifted functions") {
  const auto phi = NFunction::power(3.0);
  const auto s0 = shifted(phi, 0.0);
  for (double t : {0.01, 0.5, 3.0}) CHECK(s0(t) == doctest::Approx(phi(t)).epsilon(1e-9));
  const auto q = NFunction::power(2.0);
  for (double a : {0.0, 0.3, 5.0}) {
    const auto qa = shifted(q, a);
    for (double t : {0.2, 1.0, 4.0}) CHECK(qa(t) == doctest::Approx(t * t / 2).epsilon(1e-9));
  }
  const double d2 = phi.characteristics().delta2;
  for (double a : {0.0, 0.1, 1.0, 10.0, 100.0}) {
    const auto pa = shifted(phi, a);
    double sup = 0.0;
    for (double t = 1e-3; t < 1e3; t *= 1.3) sup = std::max(sup, pa(2 * t) / pa(t));
    CHECK(sup <= 2.0 * d2);
  }
}

TEST_CASE("A and V maps") {
  const auto phi2 = NFunction::power(2.0);
  const std::vector<double> q{3.0, -1.0};
  std::vector<double> a(2), v(2);
  map_a(phi2, q, a);
  map_v(phi2, q, v);
  CHECK(a[0] == doctest::Approx(3.0));
  CHECK(a[1] == doctest::Approx(-1.0));
  CHECK(v[0] == doctest::Approx(3.0));
  CHECK(v[1] == doctest::Approx(-1.0));
  const auto phi4 = NFunction::power(4.0);
  const std::vector<double> z{2.0, 0.0};
  map_v(phi4, z, v);
  CHECK(v[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(v[1] == 0.0);
  const std::vector<double> zero{0.0, 0.0};
  map_a(phi4, zero, a);
  CHECK(a[0] == 0.0);
  const auto tm = tensor_maps(phi4, z, z);
  CHECK(tm.degenerate);
  CHECK(tm.r1 == 1.0);
}

TEST_CASE("Young inequality with computed constants") {
  std::mt19937_64 rng(7);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto phi = NFunction::power(p);
    for (double delta : {0.1, 0.5, 1.0}) {
      const double c = phi.young_constant(delta);
      for (int i = 0; i < 300; ++i) {
        const double t = std::exp(8.0 * uniform01(rng) - 4.0);
        const double s = std::exp(8.0 * uniform01(rng) - 4.0);
        const double gap = delta * phi(t) + c * phi.conjugate(s) - t * s;
        CHECK(gap >= -1e-12 * (1.0 + t * s));
      }
    }
  }
}

TEST_CASE("double conjugate of power functions") {
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const auto phi = NFunction::power(p);
    const auto star = phi.conjugate_function();
    for (double t = 1e-3; t < 1e3; t *= 1.7) CHECK(std::abs(star.conjugate(t) - phi(t)) <= 1e-8 * (1 + phi(t)));
  }
}

TEST_CASE("phi(t) <= t phi'(t) <= phi(2t)") {
  for (double p : {1.2, 2.0, 5.0}) {
    const auto phi = NFunction::power(p);
    for (double t = 1e-4; t < 1e4; t *= 2.1) {
      CHECK(phi(t) <= t * phi.d1(t) * (1 + 1e-14));
      CHECK(t * phi.d1(t) <= phi(2 * t) * (1 + 1e-14));
    }
  }
}

TEST_CASE("tabulated generator reproduces a power law") {
  std::vector<double> t, d;
  for (double x = 1e-3; x < 1e3; x *= 1.25) {
    t.push_back(x);
    d.push_back(x * x);  // φ' of t³/3
  }
  const auto tab = NFunction::tabulated(t, d);
  const auto ref = NFunction::power(3.0);
  for (double x : {0.01, 0.3, 1.0, 4.0, 50.0}) {
    CHECK(tab.d1(x) == doctest::Approx(ref.d1(x)).epsilon(1e-6));
    CHECK(tab(x) == doctest::Approx(ref(x)).epsilon(1e-4));
    CHECK(tab.conjugate(x) == doctest::Approx(ref.conjugate(x)).epsilon(1e-4));
  }
  CHECK(tab.characteristics().c1 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("tabulated generator from a CSV spec") {
  const char* path = "orlicz_table_test.csv";
  {
    std::ofstream f(path);
    for (double x = 1e-2; x < 1e2; x *= 1.5) f << x << ',' << x << '\n';
  }
  const auto tab = NFunction::parse(std::string("table:") + path);
  CHECK(tab(2.0) == doctest::Approx(2.0).epsilon(1e-4));
  std::remove(path);
}

TEST_CASE("rejected generators and specs") {
  CHECK_THROWS_AS(NFunction::power(1.0), Error);
  CHECK_THROWS_AS(NFunction::parse("q:2"), Error);
  CHECK_THROWS_AS(NFunction::parse("p:abc"), Error);
  CHECK_THROWS_AS(NFunction::tabulated({1.0, 2.0, 3.0}, {1.0, 0.5, 2.0}), Error);
  CHECK_THROWS_AS(NFunction::parse("table:/nonexistent/file.csv"), Error);
}

TEST_CASE("A/V equivalence ratios are bounded per exponent") {
  std::mt19937_64 rng(11);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto phi = NFunction::power(p);
    double lo = INFINITY, hi = 0.0;
    for (int i = 0; i < 2000; ++i) {
      std::vector<double> a(2), b(2);
      for (auto* v : {&a, &b})
        for (double& x : *v) x = std::exp(6.0 * uniform01(rng) - 3.0) * (uniform01(rng) < 0.5 ? -1 : 1);
      const auto tm = tensor_maps(phi, a, b);
      lo = std::min({lo, tm.r1, tm.r2});
      hi = std::max({hi, tm.r1, tm.r2});
    }
    CHECK(lo > 0.05);
    CHECK(hi < 20.0);
  }
}
