#include "paratrunc/orlicz.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include "paratrunc/error.hpp"

namespace paratrunc {

namespace {

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss8(const F& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
    acc += kGlWeights[i] * f(mid + half * kGlNodes[i]);
  }
  return acc * half;
}

// ∫_0^t f for integrands that behave like a power near zero: dyadic panels
// [t 2^{-k-1}, t 2^{-k}], the last 2^{-60} t is dropped.
template <class F>
double integrate_from_zero(const F& f, double t) {
  if (t <= 0.0) return 0.0;
  double acc = 0.0;
  double hi = t;
  for (int k = 0; k < 60; ++k) {
    const double lo = 0.5 * hi;
    acc += gauss8(f, lo, hi);
    hi = lo;
  }
  return acc;
}

template <class F>
double bisect_increasing(const F& f, double target) {
  // Root of f(t) = target for nondecreasing f with f(0) = 0, on a log scale.
  if (target <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  int guard = 0;
  while (f(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 2100) fail_numeric("monotone search did not bracket the target");
  }
  if (lo == 0.0) {
    lo = hi;
    guard = 0;
    while (f(lo) >= target) {
      hi = lo;
      lo *= 0.5;
      if (++guard > 2100) return 0.0;
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

namespace detail {

class Generator {
 public:
  virtual ~Generator() = default;
  virtual double value(double t) const {
    return integrate_from_zero([this](double s) { return d1(s); }, t);
  }
  virtual double d1(double t) const = 0;
  virtual double d2(double t) const = 0;
  virtual double d1_inverse(double s) const {
    return bisect_increasing([this](double t) { return d1(t); }, s);
  }
  virtual double conjugate(double s) const {
    if (s <= 0.0) return 0.0;
    const double t = d1_inverse(s);
    return std::max(0.0, s * t - value(t));
  }
  virtual NFunction::Kind kind() const { return NFunction::Kind::derived; }
  virtual std::optional<double> exponent() const { return std::nullopt; }

  std::string description;
};

}  // namespace detail

namespace {

using detail::Generator;

class PowerGenerator final : public Generator {
 public:
  explicit PowerGenerator(double p) : p_(p), q_(p / (p - 1.0)) {
    std::ostringstream os;
    os << "p:" << p;
    description = os.str();
  }
  double value(double t) const override { return t <= 0 ? 0.0 : std::pow(t, p_) / p_; }
  double d1(double t) const override { return t <= 0 ? 0.0 : std::pow(t, p_ - 1.0); }
  double d2(double t) const override {
    if (t <= 0) return p_ >= 2.0 ? (p_ == 2.0 ? 1.0 : 0.0) : std::numeric_limits<double>::infinity();
    return (p_ - 1.0) * std::pow(t, p_ - 2.0);
  }
  double d1_inverse(double s) const override {
    return s <= 0 ? 0.0 : std::pow(s, 1.0 / (p_ - 1.0));
  }
  double conjugate(double s) const override {
    return s <= 0 ? 0.0 : std::pow(s, q_) / q_;
  }
  NFunction::Kind kind() const override { return NFunction::Kind::power; }
  std::optional<double> exponent() const override { return p_; }

 private:
  double p_;
  double q_;
};

// Monotone cubic Hermite (Fritsch-Carlson) slopes for data y over uniform x.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d[i] = 0.0;
    } else {
      const double h0 = x[i] - x[i - 1];
      const double h1 = x[i + 1] - x[i];
      const double w1 = 2.0 * h1 + h0;
      const double w2 = h1 + 2.0 * h0;
      d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  d[0] = delta[0];
  d[n - 1] = delta[n - 2];
  return d;
}

struct Hermite {
  std::vector<double> x, y, d;

  std::size_t segment(double u) const {
    auto it = std::upper_bound(x.begin(), x.end(), u);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - x.begin() - 1));
    return std::min(i, x.size() - 2);
  }
  // Value and derivative; linear extrapolation with end slopes.
  std::pair<double, double> eval(double u) const {
    if (u <= x.front()) return {y.front() + d.front() * (u - x.front()), d.front()};
    if (u >= x.back()) return {y.back() + d.back() * (u - x.back()), d.back()};
    const std::size_t i = segment(u);
    const double h = x[i + 1] - x[i];
    const double s = (u - x[i]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    const double v = h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1];
    const double dh00 = 6 * s * s - 6 * s;
    const double dh10 = 3 * s * s - 4 * s + 1;
    const double dh01 = -6 * s * s + 6 * s;
    const double dh11 = 3 * s * s - 2 * s;
    const double dv = (dh00 * y[i] + dh01 * y[i + 1]) / h + dh10 * d[i] + dh11 * d[i + 1];
    return {v, dv};
  }
};

class TableGenerator final : public Generator {
 public:
  TableGenerator(std::vector<double> t, std::vector<double> dphi) {
    if (t.size() != dphi.size() || t.size() < 2) fail("tabulated N-function needs at least two (t, phi') pairs");
    std::vector<std::size_t> order(t.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return t[a] < t[b]; });
    Hermite in;
    for (auto i : order) {
      if (!(t[i] > 0.0) || !(dphi[i] > 0.0) || !std::isfinite(t[i]) || !std::isfinite(dphi[i])) {
        fail("tabulated N-function: samples must have t > 0 and phi'(t) > 0");
      }
      if (!in.x.empty() && std::log(t[i]) <= in.x.back()) fail("tabulated N-function: duplicate t");
      if (!in.y.empty() && std::log(dphi[i]) <= in.y.back()) {
        fail("tabulated N-function: phi' must be strictly increasing (non-convex generator)");
      }
      in.x.push_back(std::log(t[i]));
      in.y.push_back(std::log(dphi[i]));
    }
    in.d = pchip_slopes(in.x, in.y);

    constexpr int per_decade = 16;
    const double lo = std::log(1e-8);
    const double step = std::log(10.0) / per_decade;
    const int count = 16 * per_decade + 1;
    for (int i = 0; i < count; ++i) {
      const double u = lo + step * i;
      table_.x.push_back(u);
      table_.y.push_back(in.eval(u).first);
    }
    table_.d = pchip_slopes(table_.x, table_.y);
    for (std::size_t i = 0; i < table_.x.size(); ++i) {
      const int sub = 4;
      for (int k = 0; k <= sub; ++k) {
        if (i + 1 == table_.x.size() && k > 0) break;
        const double u = table_.x[i] + (i + 1 < table_.x.size() ? (table_.x[i + 1] - table_.x[i]) * k / sub : 0.0);
        const double slope = table_.eval(u).second;
        if (!(slope > 0.0)) fail("tabulated N-function: phi' is not strictly increasing; characteristics undefined");
        if (slope > 1e3) fail("tabulated N-function: growth violates the Delta_2 condition");
      }
    }
    // Cumulative ∫_0^{t_i} φ'.
    cumulative_.resize(table_.x.size());
    const double t0 = std::exp(table_.x.front());
    cumulative_[0] = t0 * d1(t0) / (table_.d.front() + 1.0);
    for (std::size_t i = 1; i < table_.x.size(); ++i) {
      const double a = std::exp(table_.x[i - 1]);
      const double b = std::exp(table_.x[i]);
      cumulative_[i] = cumulative_[i - 1] + gauss8([this](double s) { return d1(s); }, a, b);
    }
    description = "table";
  }

  double d1(double t) const override {
    if (t <= 0.0) return 0.0;
    return std::exp(table_.eval(std::log(t)).first);
  }
  double d2(double t) const override {
    if (t <= 0.0) return 0.0;
    const auto [v, dv] = table_.eval(std::log(t));
    return std::exp(v) * dv / t;
  }
  double value(double t) const override {
    if (t <= 0.0) return 0.0;
    const double u = std::log(t);
    if (u <= table_.x.front()) {
      return t * d1(t) / (table_.d.front() + 1.0);
    }
    if (u >= table_.x.back()) {
      const double tm = std::exp(table_.x.back());
      const double k = table_.d.back();
      return cumulative_.back() + d1(tm) * tm / (k + 1.0) * (std::pow(t / tm, k + 1.0) - 1.0);
    }
    const std::size_t i = table_.segment(u);
    const double a = std::exp(table_.x[i]);
    return cumulative_[i] + gauss8([this](double s) { return d1(s); }, a, t);
  }
  double d1_inverse(double s) const override {
    if (s <= 0.0) return 0.0;
    const double g = std::log(s);
    if (g <= table_.y.front()) return std::exp(table_.x.front() + (g - table_.y.front()) / table_.d.front());
    if (g >= table_.y.back()) return std::exp(table_.x.back() + (g - table_.y.back()) / table_.d.back());
    auto it = std::upper_bound(table_.y.begin(), table_.y.end(), g);
    const std::size_t i = static_cast<std::size_t>(it - table_.y.begin() - 1);
    double lo = table_.x[i];
    double hi = table_.x[i + 1];
    for (int k = 0; k < 80; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (table_.eval(mid).first < g) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return std::exp(0.5 * (lo + hi));
  }
  NFunction::Kind kind() const override { return NFunction::Kind::tabulated; }

 private:
  Hermite table_;
  std::vector<double> cumulative_;
};

class DerivativeGenerator final : public Generator {
 public:
  DerivativeGenerator(std::function<double(double)> d1, std::function<double(double)> d2,
                      std::string desc)
      : d1_(std::move(d1)), d2_(std::move(d2)) {
    description = std::move(desc);
  }
  double d1(double t) const override { return t <= 0 ? 0.0 : d1_(t); }
  double d2(double t) const override { return d2_(t); }

 private:
  std::function<double(double)> d1_;
  std::function<double(double)> d2_;
};

class ShiftedGenerator final : public Generator {
 public:
  ShiftedGenerator(std::shared_ptr<const Generator> base, double a) : base_(std::move(base)), a_(a) {
    std::ostringstream os;
    os << base_->description << "@shift:" << a;
    description = os.str();
  }
  double d1(double t) const override {
    if (t <= 0.0) return 0.0;
    return base_->d1(a_ + t) * t / (a_ + t);
  }
  double d2(double t) const override {
    const double s = a_ + t;
    if (s <= 0.0) return base_->d2(0.0);
    return base_->d2(s) * t / s + base_->d1(s) * a_ / (s * s);
  }
  double value(double t) const override {
    if (t <= 0.0) return 0.0;
    auto f = [this](double s) { return d1(s); };
    const double inner = std::min(t, a_);
    double acc = 0.0;
    // Smooth on [0, a]: a few uniform panels.
    constexpr int panels = 4;
    for (int k = 0; k < panels; ++k) {
      acc += gauss8(f, inner * k / panels, inner * (k + 1) / panels);
    }
    double lo = inner;
    while (lo < t) {
      const double hi = std::min(t, std::max(2.0 * lo, lo + 1e-300));
      acc += gauss8(f, lo, hi);
      lo = hi;
    }
    return acc;
  }

 private:
  std::shared_ptr<const Generator> base_;
  double a_;
};

class ConjugateGenerator final : public Generator {
 public:
  explicit ConjugateGenerator(std::shared_ptr<const Generator> base) : base_(std::move(base)) {
    description = base_->description + "*";
  }
  double value(double s) const override { return base_->conjugate(s); }
  double d1(double s) const override { return base_->d1_inverse(s); }
  double d2(double s) const override {
    const double t = base_->d1_inverse(s);
    const double dd = base_->d2(t);
    return dd > 0 ? 1.0 / dd : std::numeric_limits<double>::infinity();
  }

 private:
  std::shared_ptr<const Generator> base_;
};

Characteristics measure(const Generator& g) {
  Characteristics c;
  if (auto p = g.exponent()) {
    const double q = *p / (*p - 1.0);
    c.c1 = c.c2 = *p - 1.0;
    c.delta2 = std::pow(2.0, *p);
    c.delta2_conj = std::pow(2.0, q);
    c.t_min = 0.0;
    c.t_max = std::numeric_limits<double>::infinity();
    return c;
  }
  c.t_min = 1e-6;
  c.t_max = 1e6;
  c.c1 = std::numeric_limits<double>::infinity();
  c.c2 = 0.0;
  constexpr int per_decade = 8;
  for (int i = 0; i <= 12 * per_decade; ++i) {
    const double t = c.t_min * std::pow(10.0, static_cast<double>(i) / per_decade);
    const double ratio = t * g.d2(t) / g.d1(t);
    c.c1 = std::min(c.c1, ratio);
    c.c2 = std::max(c.c2, ratio);
    const double v = g.value(t);
    if (v > 0) c.delta2 = std::max(c.delta2, g.value(2 * t) / v);
    const double cv = g.conjugate(t);
    if (cv > 0) c.delta2_conj = std::max(c.delta2_conj, g.conjugate(2 * t) / cv);
  }
  return c;
}

}  // namespace

namespace detail {
struct CharacteristicsCache {
  std::once_flag once;
  Characteristics value;
};
}  // namespace detail

NFunction::NFunction(std::shared_ptr<const detail::Generator> g)
    : gen_(std::move(g)), chars_(std::make_shared<detail::CharacteristicsCache>()) {}

NFunction NFunction::power(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) fail("power N-function needs exponent p > 1");
  return NFunction(std::make_shared<PowerGenerator>(p));
}

NFunction NFunction::tabulated(std::vector<double> t, std::vector<double> dphi) {
  return NFunction(std::make_shared<TableGenerator>(std::move(t), std::move(dphi)));
}

NFunction NFunction::from_derivative(std::function<double(double)> d1,
                                     std::function<double(double)> d2, std::string description) {
  return NFunction(std::make_shared<DerivativeGenerator>(std::move(d1), std::move(d2),
                                                         std::move(description)));
}

NFunction NFunction::parse(std::string_view spec) {
  if (spec.rfind("p:", 0) == 0) {
    const std::string num(spec.substr(2));
    char* end = nullptr;
    const double p = std::strtod(num.c_str(), &end);
    if (end == num.c_str() || *end != '\0') fail("bad N-function spec '" + std::string(spec) + "'");
    return power(p);
  }
  if (spec.rfind("table:", 0) == 0) {
    const std::string path(spec.substr(6));
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open N-function table '" + path + "'");
    std::vector<double> t, d;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      double a = 0, b = 0;
      if (!(ls >> a >> b)) continue;  // header
      t.push_back(a);
      d.push_back(b);
    }
    auto gen = std::make_shared<TableGenerator>(std::move(t), std::move(d));
    gen->description = std::string(spec);
    return NFunction(gen);
  }
  fail("unknown N-function spec '" + std::string(spec) + "' (expected p:<float> or table:<path>)");
}

double NFunction::operator()(double t) const { return gen_->value(t); }
double NFunction::d1(double t) const { return gen_->d1(t); }
double NFunction::d2(double t) const { return gen_->d2(t); }
double NFunction::conjugate(double s) const { return gen_->conjugate(s); }
double NFunction::d1_inverse(double s) const { return gen_->d1_inverse(s); }

double NFunction::inverse(double y) const {
  if (auto p = gen_->exponent()) return y <= 0 ? 0.0 : std::pow(*p * y, 1.0 / *p);
  return bisect_increasing([this](double t) { return gen_->value(t); }, y);
}

NFunction::Kind NFunction::kind() const { return gen_->kind(); }
std::optional<double> NFunction::exponent() const { return gen_->exponent(); }
const std::string& NFunction::description() const { return gen_->description; }

const Characteristics& NFunction::characteristics() const {
  std::call_once(chars_->once, [this] { chars_->value = measure(*gen_); });
  return chars_->value;
}

double NFunction::young_constant(double delta) const {
  if (!(delta > 0.0)) fail("Young constant needs delta > 0");
  if (delta >= 1.0) return 1.0;
  if (auto p = exponent()) return std::pow(delta, -1.0 / (*p - 1.0));
  const double k = std::ceil(std::log2(1.0 / delta));
  return std::pow(characteristics().delta2_conj, k);
}

NFunction NFunction::conjugate_function() const {
  return NFunction(std::make_shared<ConjugateGenerator>(gen_));
}

NFunction psi_from(const NFunction& phi) {
  if (auto p = phi.exponent()) return NFunction::power(*p / 2.0 + 1.0);
  return NFunction::from_derivative(
      [phi](double t) { return std::sqrt(phi.d1(t) * t); },
      [phi](double t) {
        const double g = std::sqrt(phi.d1(t) * t);
        return g > 0 ? (phi.d2(t) * t + phi.d1(t)) / (2.0 * g) : 0.0;
      },
      "psi(" + phi.description() + ")");
}

NFunction shifted(const NFunction& phi, double a) {
  if (!(a >= 0.0)) fail("shift needs a >= 0");
  if (a == 0.0) return phi;
  return NFunction(std::make_shared<ShiftedGenerator>(phi.gen_, a));
}

namespace {

double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace

void map_a(const NFunction& phi, std::span<const double> q, std::span<double> out) {
  const double n = norm(q);
  const double scale = n > 0 ? phi.d1(n) / n : 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = scale * q[i];
}

void map_v(const NFunction& phi, std::span<const double> q, std::span<double> out) {
  const double n = norm(q);
  const double scale = n > 0 ? std::sqrt(phi.d1(n) * n) / n : 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = scale * q[i];
}

TensorMaps tensor_maps(const NFunction& phi, std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) fail("tensor_maps: P and Q must have the same shape");
  TensorMaps r;
  const std::size_t n = p.size();
  r.a_p.resize(n);
  r.v_p.resize(n);
  std::vector<double> a_q(n), v_q(n);
  map_a(phi, p, r.a_p);
  map_v(phi, p, r.v_p);
  map_a(phi, q, a_q);
  map_v(phi, q, v_q);
  double diff2 = 0.0, mono = 0.0, vdiff2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = p[i] - q[i];
    diff2 += d * d;
    mono += (r.a_p[i] - a_q[i]) * d;
    vdiff2 += (r.v_p[i] - v_q[i]) * (r.v_p[i] - v_q[i]);
  }
  if (diff2 == 0.0 || vdiff2 == 0.0) {
    r.degenerate = true;
    return r;
  }
  r.r1 = mono / vdiff2;
  r.r2 = vdiff2 / shifted(phi, norm(p))(std::sqrt(diff2));
  return r;
}

}  // namespace paratrunc
