#pragma once

#include <cstdint>
#include <vector>

#include "paratrunc/grid.hpp"
#include "paratrunc/maximal.hpp"
#include "paratrunc/orlicz.hpp"

namespace paratrunc {

enum class PoincareMode { weak, modular };

struct PoincareGap {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  ///< lhs / rhs, 0 when both vanish
  double c0 = 0.0;     ///< ‖ρ‖_∞ |Q| / ‖ρ‖₁ over Q
};

/// weak:    ⨍_Q |a − ⟨a⟩_ρ|/r  against  ⨍_Q |∇a| + α ⨍_Q |G|
/// modular: ⨍_Q φ(|a − ⟨a⟩_ρ|/r)  against  ⨍_Q φ(|∇a|) + φ(α ⨍_Q |G|)
/// g may be null (taken as zero). phi is required in modular mode.
PoincareGap poincare_gap(const Field& a, const Field* g, const Cylinder& q, double alpha, const Field& rho,
                         PoincareMode mode, const NFunction* phi);

/// Flux of ∂_t a on Q only: cumulative sums from the near face of the ball,
/// minus the row mean. Zero outside Q's bounding box.
Field local_flux(const Field& a, const Cylinder& q, double alpha);

struct TimeOscillation {
  double oscillation = 0.0;  ///< ⨍_I |⟨a(t)⟩_η − ⟨a⟩_{η×I}| dt
  double family = 0.0;       ///< r α N_Q(∂_t a), test-family tier
  double flux = -1.0;        ///< r α ⨍_Q |G| when G is given
  double c0 = 0.0;           ///< (‖η‖_∞ + r‖∇η‖_∞) |B| / ‖η‖₁
};

/// eta holds one weight per spatial node of the grid (size n0·n1). Throws if
/// the measured c0 exceeds c0_max.
TimeOscillation time_oscillation(const Field& a, const Cylinder& q, double alpha, const std::vector<double>& eta,
                                 double c0_max, const Field* g);

struct NormConjugate {
  double oscillation = 0.0;  ///< ∫_I |f − ⟨f⟩_I|
  double mean_zero = 0.0;    ///< max over mean-zero β, ‖β‖_∞ ≤ 1, of ∫ f β
  double primitive = 0.0;    ///< max over γ with γ = 0 at the ends, ‖γ'‖_∞ ≤ 1, of |∫ f γ'|
};

/// f sampled at spacing dt on I. Families are fixed (seeded) and finite.
NormConjugate norm_conjugate_check(const std::vector<double>& f, double dt);

struct PoincareBatteryResult {
  std::vector<double> ratios;
  double max = 0.0;
  double median = 0.0;
  double max_c0 = 0.0;
};

/// n random admissible (a, G, ρ, Q) on the unit box with t0 = 1, m spatial
/// dimensions. Members are defined in continuum coordinates, so `refine`
/// levels resample the same members with (h, τ) → (h/2^l, τ/4^l).
PoincareBatteryResult poincare_battery(int n, std::uint64_t seed, PoincareMode mode, const NFunction& phi, int m,
                                       int refine);

}  // namespace paratrunc
