#pragma once

#include <cstddef>
#include <vector>

#include "paratrunc/grid.hpp"

namespace paratrunc {

/// Closed α-parabolic cylinder [tc − αr², tc + αr²] × B̄_r(xc) centred at a
/// grid node.
struct Cylinder {
  int k = 0;
  int i = 0;
  int j = 0;
  double r = 0.0;
};

/// Node stencil of a cylinder: time half-width kt, and for every offset dj
/// along the second spatial axis (a single entry when m = 1) the half-width
/// along the first axis.
struct Shape {
  int kt = 0;
  int rj = 0;
  std::vector<int> wx;  ///< indexed by dj + rj
  double count = 0.0;  ///< lattice count of the unclipped cylinder
};

/// Relative slack applied to membership tests so that nodes exactly on the
/// boundary count as inside.
inline constexpr double kGeomSlack = 1e-12;

Shape cylinder_shape(const GridSpec& g, double r, double alpha);

/// max(sqrt(|Δt|/α), |Δx|).
double parabolic_distance(double alpha, double dt, double dx);

/// Radii h·2^k: downward until a cylinder holds a single node, upward until
/// one cylinder reaches across the whole grid.
std::vector<double> dyadic_radii(const GridSpec& g, double alpha);

/// Calls fn(node) for the grid nodes of Q (clipped to the grid).
template <class Fn>
void for_each_node(const GridSpec& g, const Shape& s, const Cylinder& q, Fn&& fn) {
  const int k0 = q.k - s.kt < 0 ? 0 : q.k - s.kt;
  const int k1 = q.k + s.kt >= g.nt ? g.nt - 1 : q.k + s.kt;
  for (int k = k0; k <= k1; ++k) {
    for (int dj = -s.rj; dj <= s.rj; ++dj) {
      const int j = q.j + dj;
      if (j < 0 || j >= g.n[1]) continue;
      const int w = s.wx[dj + s.rj];
      const int i0 = q.i - w < 0 ? 0 : q.i - w;
      const int i1 = q.i + w >= g.n[0] ? g.n[0] - 1 : q.i + w;
      for (int i = i0; i <= i1; ++i) fn(g.node(k, i, j));
    }
  }
}

/// M_Q(f) = Σ_{Q ∩ grid} |f| divided by the lattice count of Q, i.e. f is
/// taken as zero off the grid.
double mean_abs(const Field& f, const Cylinder& q, double alpha);
/// Plain mean over the grid nodes of Q.
std::vector<double> mean_over(const Field& f, const Cylinder& q, double alpha);
/// ⨍_Q |a − ⟨a⟩_Q| / r over the grid nodes of Q.
double sharp_mq(const Field& a, const Cylinder& q, double alpha);

/// Flux-bound tier of N_Q(∂_t w): ⨍_Q |G|.
double n_flux(const Field& g, const Cylinder& q, double alpha);
/// Test-family tier: max over normalised tensor bumps ξ of r |Σ_Q w ∂_t ξ| / #Q.
double n_family(const Field& w, const Cylinder& q, double alpha);

/// Number of members in the fixed test family (3 scales × 5 offsets).
inline constexpr int kFamilySize = 15;
/// Member `idx` of the family on Q, sampled on the grid and normalised so
/// that ‖ξ‖_∞ + r‖∇ξ‖_∞ + αr²‖∂_t ξ‖_∞ = 1 with difference quotients. Nodes
/// whose backward neighbours leave Q are zeroed. Returns an all-zero field
/// when the member does not resolve on the grid.
Field family_member(const GridSpec& g, const Cylinder& q, double alpha, int idx);

/// Centred averages A_r(z) = M_{Q_r(z)}(f) at every node for one radius.
Field centred_means(const Field& f, double r, double alpha);
/// Max over cylinders of radius r containing each node of per-centre values.
Field dilate(const Field& per_centre, double r, double alpha);

/// M^α f at every node: sup over node-centred cylinders with radii from the
/// list that contain the node.
Field m_alpha(const Field& f, double alpha, const std::vector<double>& radii);
/// M^{♯,α} a at every node (direct evaluation per cylinder, then dilation).
Field sharp_alpha(const Field& a, double alpha, const std::vector<double>& radii);
/// N^α in flux-bound tier: identical to m_alpha(|G|).
Field n_alpha_flux(const Field& g, double alpha, const std::vector<double>& radii);
/// N^α in test-family tier at every node. Cost grows with |Q| per centre.
Field n_alpha_family(const Field& w, double alpha, const std::vector<double>& radii);

/// Zero outside the domain box (χ_{J×Ω} f).
Field mask_to_domain(const Field& f);

}  // namespace paratrunc
