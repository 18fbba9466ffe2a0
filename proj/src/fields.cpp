#include "paratrunc/fields.hpp"

#include <cmath>
#include <numbers>

#include "paratrunc/error.hpp"

namespace paratrunc {

Field flux_from(const Field& w) {
  if (w.rank != 1) fail("flux_from: scalar field expected");
  const GridSpec& g = w.grid;
  const Field wt = dt_backward(w);
  Field out(g, g.m);
  const double share = g.h / g.m;
  for (int k = 0; k < g.nt; ++k) {
    for (int j = 0; j < g.n[1]; ++j) {
      double acc = 0.0;
      for (int i = 0; i < g.n[0]; ++i) {
        acc += wt.v[g.node(k, i, j)];
        out.at(g.node(k, i, j), 0) = share * acc;
      }
    }
    if (g.m == 2) {
      for (int i = 0; i < g.n[0]; ++i) {
        double acc = 0.0;
        for (int j = 0; j < g.n[1]; ++j) {
          acc += wt.v[g.node(k, i, j)];
          out.at(g.node(k, i, j), 1) = share * acc;
        }
      }
    }
  }
  return out;
}

namespace {

constexpr double kPi = std::numbers::pi;

double bump(double u) {
  return u >= 1.0 ? 0.0 : std::pow(1.0 - u * u, 3);
}

}  // namespace

FieldPair make_preset(const std::string& name, const GridSpec& g, std::uint64_t seed) {
  Field w(g, 1);
  const double lx = (g.n[0] - 1) * g.h;
  const double ly = g.m == 2 ? (g.n[1] - 1) * g.h : 1.0;
  // s ∈ [0, 1] runs from −t0 to 0.
  auto s_of = [&](int k) { return static_cast<double>(k) / (g.nt - 1); };
  auto x_of = [&](int i) { return i * g.h; };
  auto y_of = [&](int j) { return j * g.h; };
  auto face = [&](int k, int i, int j) {
    return k == 0 || i == 0 || i == g.n[0] - 1 || (g.m == 2 && (j == 0 || j == g.n[1] - 1));
  };
  auto fill = [&](auto&& f) {
    for (int k = 0; k < g.nt; ++k) {
      for (int i = 0; i < g.n[0]; ++i) {
        for (int j = 0; j < g.n[1]; ++j) {
          w.v[g.node(k, i, j)] = face(k, i, j) ? 0.0 : f(k, i, j);
        }
      }
    }
  };
  auto smooth = [&](int k, int i, int j) {
    double v = std::sin(0.5 * kPi * s_of(k)) * std::sin(kPi * x_of(i) / lx);
    if (g.m == 2) v *= std::sin(kPi * y_of(j) / ly);
    return v;
  };

  std::mt19937_64 rng(seed);
  if (name == "zero") {
  } else if (name == "smooth") {
    fill(smooth);
  } else if (name == "spike") {
    const double cx = (0.3 + 0.4 * uniform01(rng)) * lx;
    const double cy = (0.3 + 0.4 * uniform01(rng)) * ly;
    const double cs = 0.4 + 0.4 * uniform01(rng);
    const double width = 3.5 * g.h;
    const double twidth = std::max(6.0 / (g.nt - 1), 0.08);
    const double amp = 1.5;
    fill([&](int k, int i, int j) {
      double r2 = std::pow(x_of(i) - cx, 2);
      if (g.m == 2) r2 += std::pow(y_of(j) - cy, 2);
      const double b = bump(std::sqrt(r2) / width) * bump(std::abs(s_of(k) - cs) / twidth);
      return smooth(k, i, j) + amp * b;
    });
  } else if (name == "random") {
    struct Mode {
      int kx, ky, power;
      double amp, freq, phase;
    };
    std::vector<Mode> modes(4);
    for (auto& md : modes) {
      md.kx = 1 + static_cast<int>(uniform01(rng) * 4);
      md.ky = 1 + static_cast<int>(uniform01(rng) * 4);
      md.power = 1 + static_cast<int>(uniform01(rng) * 3);
      md.amp = 2.0 * uniform01(rng) - 1.0;
      md.freq = 2.0 * uniform01(rng);
      md.phase = 2.0 * kPi * uniform01(rng);
    }
    fill([&](int k, int i, int j) {
      const double s = s_of(k);
      double v = 0.0;
      for (const auto& md : modes) {
        double sp = std::sin(md.kx * kPi * x_of(i) / lx);
        if (g.m == 2) sp *= std::sin(md.ky * kPi * y_of(j) / ly);
        v += md.amp * std::pow(s, md.power) * std::cos(md.freq * kPi * s + md.phase) * sp;
      }
      return v;
    });
  } else {
    fail("unknown field preset '" + name + "' (zero|smooth|spike|random)");
  }
  Field flux = flux_from(w);
  return {std::move(w), std::move(flux)};
}

}  // namespace paratrunc
