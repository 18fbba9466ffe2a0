#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace paratrunc {

class NFunction;

/// Closed node box [t_lo, t_hi] × Π[lo_d, hi_d] marking the closure of the
/// space-time domain inside a (possibly padded) grid.
struct Domain {
  int t_lo = 0;
  int t_hi = 0;
  std::array<int, 2> lo{0, 0};
  std::array<int, 2> hi{0, 0};
};

/// Uniform space-time lattice. Time node k sits at t_origin + k·τ, spatial
/// node i along axis d at x_origin[d] + i·h. For m = 1 the second axis has a
/// single node.
struct GridSpec {
  int m = 1;
  int nt = 0;
  std::array<int, 2> n{0, 1};
  double h = 0.0;
  double tau = 0.0;
  double t0 = 0.0;  ///< J = (−t0, 0)
  double t_origin = 0.0;
  std::array<double, 2> x_origin{0.0, 0.0};
  Domain domain;

  /// Grid on J̄ × Ω̄ with Ω = (0, (n_d − 1)h): nt time nodes, the last at t = 0.
  static GridSpec base(int m, int nt, std::array<int, 2> n, double h, double tau);

  std::size_t nodes() const {
    return static_cast<std::size_t>(nt) * static_cast<std::size_t>(n[0]) *
           static_cast<std::size_t>(n[1]);
  }
  std::size_t node(int k, int i, int j = 0) const {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(n[0]) +
            static_cast<std::size_t>(i)) *
               static_cast<std::size_t>(n[1]) +
           static_cast<std::size_t>(j);
  }
  /// Stride of one step along axis d (0 = time, 1.. = space).
  std::size_t stride(int axis) const;
  std::array<int, 3> coords(std::size_t node) const;

  double t(int k) const { return t_origin + k * tau; }
  double x(int d, int i) const { return x_origin[d] + i * h; }
  double cell() const { return m == 1 ? tau * h : tau * h * h; }
  bool in_domain(int k, int i, int j) const;

  /// Same lattice (counts, steps, origins). Domain boxes are not compared.
  bool same_lattice(const GridSpec& o) const;
  void validate() const;
};

/// Scalar or vector samples on a GridSpec, layout [t][x1][x2][component].
struct Field {
  GridSpec grid;
  int rank = 1;
  std::vector<double> v;

  Field() = default;
  Field(const GridSpec& g, int rank, double fill = 0.0);

  double& at(std::size_t node, int c = 0) { return v[node * rank + c]; }
  double at(std::size_t node, int c = 0) const { return v[node * rank + c]; }
  /// Euclidean norm over components at a node.
  double norm_at(std::size_t node) const;
  void check_finite() const;
};

/// Forward differences along each spatial axis; one-sided backward at the
/// last node. Result has rank m.
Field gradient(const Field& f);
/// Backward-difference divergence with zero flux before the first node. On
/// fields vanishing near the far faces it is the negative adjoint of
/// gradient.
Field divergence(const Field& g);
/// Backward time difference, zero before the first time node.
Field dt_backward(const Field& f);
/// Pointwise |f|.
Field magnitude(const Field& f);

/// τh^m Σ w (ξ(t+τ) − ξ(t))/τ, with ξ = 0 past the last time node.
double weak_time_pairing(const Field& w, const Field& xi);
/// τh^m Σ_d Σ G_d (ψ(x+h e_d) − ψ(x))/h, with ψ = 0 past the last node.
double weak_flux_pairing(const Field& g, const Field& psi);

/// Trapezoidal weight of a node (product of 1 or 1/2 per axis) times the
/// cell volume.
double trapezoid_weight(const GridSpec& g, int k, int i, int j);

/// ⟨f⟩_ρ with trapezoidal weights. Throws on ‖ρ‖₁ = 0.
std::vector<double> weighted_mean(const Field& f, const Field& rho);
/// Trapezoidal ∫ φ(|f|).
double modular_integral(const Field& f, const NFunction& phi);

/// Fields after zero extension below −t0 and outside Ω plus even (w) / odd
/// (G) reflection across t = 0, on a grid padded by pad_t time nodes and
/// pad_x space nodes on each side.
struct Extension {
  Field w;
  Field g;
  int pad_t = 0;
  int pad_x = 0;
};
Extension extend(const Field& w, const Field& g, int pad_t, int pad_x);

/// Restriction of a field on an extended grid back to the base box of size
/// `base`, starting at offsets (pad_t, pad_x).
Field restrict_to(const Field& f, const GridSpec& base, int pad_t, int pad_x);

/// Checks the homogeneous boundary data: zero on the spatial faces and at
/// the initial time slice, up to tol·max|w|.
void validate_boundary(const Field& w, double tol = 1e-12);

/// PTF1 binary field files.
void write_ptf(const Field& f, const std::string& path);
Field read_ptf(const std::string& path);
/// m = 1 CSV: one row per time node, one column per spatial node.
void write_csv(const Field& f, const std::string& path);
Field read_csv(const std::string& path, double h, double tau);

}  // namespace paratrunc
