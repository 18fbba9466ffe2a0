#pragma once

#include <cstdint>
#include <vector>

#include "paratrunc/grid.hpp"
#include "paratrunc/orlicz.hpp"
#include "paratrunc/whitney.hpp"

namespace paratrunc {

struct TruncationParams {
  double lambda = 0.0;
  double alpha = 0.0;  ///< ≤ 0 selects λ/φ'(λ)
  NFunction phi = NFunction::power(2.0);
  int pad_t = 0;       ///< 0 selects a starting pad that grows as needed
  int pad_x = 0;
  std::uint64_t seed = 1;
  int holder_pairs = 10000;
};

/// Position of ¾Q_j and ⅘Q_j relative to the space-time domain.
enum class AverageCase {
  inside,        ///< ¾Q_j ⊂ J×Ω: w_j is the ρ_j-mean
  near_time,     ///< ⅘B_j ⊂ Ω but ¾Q_j ⊄ J×Ω: w_j = 0
  near_space,    ///< ⅘B_j ⊄ Ω: w_j = 0
};

struct TruncationResult {
  GridSpec base;
  Extension ext;  ///< w and G on the padded grid; J×Ω is its domain box
  double lambda = 0.0;
  double alpha = 0.0;
  std::vector<double> radii;
  Mask bad;
  Field wlam;
  WhitneyCover cover;
  std::vector<double> wj;
  std::vector<AverageCase> cases;
  std::size_t bad_count = 0;
  bool degenerate = false;  ///< bad set covers all of J×Ω
};

/// {M^α(χ∇w) > λ} ∪ {α M^α(χG) > λ} on the grid of the fields.
Mask bad_set(const Field& w, const Field& g, double lambda, double alpha, const std::vector<double>& radii);

/// w_j for every cylinder of the cover, with the case tags.
std::vector<double> local_averages(const Field& w, const WhitneyCover& cover, std::vector<AverageCase>* cases);

/// w − Σ_j ρ_j (w − w_j), summed per node in cylinder order.
Field apply_truncation(const Field& w, const WhitneyCover& cover, const std::vector<double>& wj);

TruncationResult truncate(const Field& w, const Field& g, const TruncationParams& params);

struct IbpResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double energy = 0.0;  ///< ½ Σ w² |∂_t η|, the natural size of either side
};

/// Both sides of ⟨∂_t w, w_λ η⟩ = ½∫(w_λ² − 2 w w_λ) ∂_t η + ∫_O ∂_t w_λ (w_λ − w) η
/// with η = max((t⁺ − t)/(t⁺ − t⁻), 0). The left side is evaluated through
/// the flux: −⟨G, ∇(w_λ η)⟩.
IbpResult ibp_residual(const TruncationResult& res, double t_plus, double t_minus);

struct TruncationReport {
  bool prop_a_exact = true;
  double prop_a_max_diff = 0.0;
  double c_b = 0.0;
  double c_c = 0.0;
  double c_c_l1 = 0.0;
  bool c_c_vacuous = false;
  double c_d_flux = 0.0;
  double c_d_family = 0.0;
  std::size_t d_violations = 0;
  std::size_t d_flux_cylinders = 0;
  std::size_t d_family_cylinders = 0;
  double c_e = 0.0;
  double c_wj = 0.0;
  double c_diff = 0.0;
  double c_nqout = 0.0;
  IbpResult ibp;
  double bad_fraction = 0.0;
  std::size_t cylinders = 0;
  int max_neighbours = 0;
};

/// Measures every property of the truncation. ∇ and N^α are taken on the
/// padded grid; η for the integration by parts uses t⁺ = 0, t⁻ = −t0.
TruncationReport verify_properties(const TruncationResult& res, const TruncationParams& params);

}  // namespace paratrunc
