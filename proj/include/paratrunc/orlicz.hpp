#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace paratrunc {

namespace detail {
class Generator;
struct CharacteristicsCache;
}

/// Sampled constants of an N-function. All of them are measured on a
/// finite log-spaced range and are therefore range-local.
struct Characteristics {
  double c1 = 0.0;          ///< inf of t·φ''(t)/φ'(t)
  double c2 = 0.0;          ///< sup of t·φ''(t)/φ'(t)
  double delta2 = 0.0;      ///< sup φ(2t)/φ(t)
  double delta2_conj = 0.0; ///< sup φ*(2t)/φ*(t)
  double t_min = 0.0;
  double t_max = 0.0;
};

/// Convex generator φ with φ(0) = 0, evaluated together with its first two
/// derivatives and its complementary function.
///
/// Values are immutable and cheap to copy; the generator is shared.
class NFunction {
 public:
  enum class Kind { power, tabulated, derived };

  /// φ(t) = t^p / p, p > 1.
  static NFunction power(double p);

  /// Tabulated generator from samples (t_i, φ'(t_i)). The samples are
  /// resampled onto a log grid spanning [1e-8, 1e8] with monotone cubic
  /// interpolation in log-log coordinates.
  static NFunction tabulated(std::vector<double> t, std::vector<double> dphi);

  /// Parses `p:<float>` or `table:<path>` (CSV of t,φ'(t) pairs).
  static NFunction parse(std::string_view spec);

  /// Generator given only through φ' and φ''; φ and φ* by quadrature and
  /// monotone search.
  static NFunction from_derivative(std::function<double(double)> d1,
                                   std::function<double(double)> d2,
                                   std::string description);

  double operator()(double t) const;
  double d1(double t) const;
  double d2(double t) const;

  /// φ*(s) = sup_{t ≥ 0} (s t − φ(t)).
  double conjugate(double s) const;

  /// (φ')^{-1}(s).
  double d1_inverse(double s) const;

  /// φ^{-1}(y) by monotone root finding.
  double inverse(double y) const;

  Kind kind() const;
  std::optional<double> exponent() const;
  const std::string& description() const;
  const Characteristics& characteristics() const;

  /// c_δ such that t s ≤ δ φ(t) + c_δ φ*(s). Derived from the Δ₂ constant of
  /// φ*: c_δ = Δ₂(φ*)^⌈log₂(1/δ)⌉ (exact δ^{-1/(p-1)} for power kinds).
  double young_constant(double delta) const;

  /// The complementary function φ* as an NFunction of its own.
  NFunction conjugate_function() const;

 private:
  explicit NFunction(std::shared_ptr<const detail::Generator> g);
  friend NFunction shifted(const NFunction& phi, double a);

  std::shared_ptr<const detail::Generator> gen_;
  std::shared_ptr<detail::CharacteristicsCache> chars_;
};

/// ψ with ψ'(t) = sqrt(φ'(t) t).
NFunction psi_from(const NFunction& phi);

/// φ_a with φ_a'(t) = φ'(a + t) t / (a + t).
NFunction shifted(const NFunction& phi, double a);

/// A(Q) = φ'(|Q|) Q/|Q| and V(Q) = ψ'(|Q|) Q/|Q|, with A(0) = V(0) = 0.
void map_a(const NFunction& phi, std::span<const double> q, std::span<double> out);
void map_v(const NFunction& phi, std::span<const double> q, std::span<double> out);

struct TensorMaps {
  std::vector<double> a_p;
  std::vector<double> v_p;
  double r1 = 1.0;  ///< (A(P)−A(Q))·(P−Q) / |V(P)−V(Q)|²
  double r2 = 1.0;  ///< |V(P)−V(Q)|² / φ_{|P|}(|P−Q|)
  bool degenerate = false;  ///< P == Q, ratios reported as 1
};

TensorMaps tensor_maps(const NFunction& phi, std::span<const double> p,
                       std::span<const double> q);

}  // namespace paratrunc
