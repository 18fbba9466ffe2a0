#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "paratrunc/grid.hpp"
#include "paratrunc/maximal.hpp"
#include "paratrunc/orlicz.hpp"
#include "paratrunc/truncation.hpp"
#include "paratrunc/whitney.hpp"

namespace paratrunc {

/// Data of the approximation problem on Q = the whole base grid. The
/// enlargement Q̃ is taken equal to Q.
struct CaloricProblem {
  Field u;
  Field H;  ///< dt_backward(u) = divergence(H) at interior nodes
  NFunction phi = NFunction::power(2.0);
  double sigma = 0.5;
  double q = 1.0;
  double theta = 0.25;
};

struct SolverConfig {
  double eps = 0.0;        ///< regularisation of |∇h|; ≤ 0 selects 1e-6 · max|∇data|
  double tol = 1e-10;      ///< bound on τ‖residual‖_∞ per step
  int max_iter = 60;
  double linear_tol = 1e-8;  ///< relative residual accepted from the sparse solve
};

struct HeatSolution {
  Field h;
  Field flux;  ///< A_ε(∇h); divergence(flux) = dt_backward(h) at interior nodes
  double eps = 0.0;
  int newton_iterations = 0;
  int picard_steps = 0;
  double max_residual = 0.0;  ///< largest accepted τ‖residual‖_∞
};

/// Implicit Euler for ∂_t h = div A_ε(∇h). Each step minimises
/// Σ |v − h_prev|²/(2τ) + Σ φ_ε(|D⁺v|) over the interior nodes, with v fixed
/// to `data` on the spatial faces; the first time slice is copied from data.
HeatSolution solve_phi_heat(const NFunction& phi, const Field& data, const SolverConfig& cfg);

/// A(∇f) with the exact (unregularised) A.
Field flux_of(const NFunction& phi, const Field& f);

struct EnergyCheck {
  double sup_l2 = 0.0;  ///< sup_t ⨍_B |w|² / (t⁺ − t⁻)
  double v_gap = 0.0;   ///< ⨍_Q |V(∇u) − V(∇h)|²
  double rhs = 0.0;     ///< ⨍_Q φ(|∇u|) + φ*(|G|)
  double ratio = 0.0;
};

EnergyCheck energy_check(const NFunction& phi, const Field& u, const Field& h, const Field& H);

struct LambdaLevel {
  double lambda = 0.0;
  double alpha = 0.0;
  double grad_fraction = 0.0;  ///< |{M^α(χ∇w) > λ}| / |Q|
  double flux_fraction = 0.0;  ///< |{M^α(χG) > φ'(λ)}| / |Q|
  double term = 0.0;           ///< φ(λ)(grad + flux fraction) / φ(γ)
};

struct GoodLambda {
  double gamma = 0.0;
  double phi_gamma = 0.0;
  int level = -1;              ///< selected m, −1 for the zero-data sentinel
  double lambda = 0.0;
  double alpha = 0.0;
  double bound = 0.0;          ///< term at the selected level times m₀
  double bad_fraction = 0.0;   ///< |{M^α(χ∇w) > λ} ∪ {αM^α(χG) > λ}| / |Q|
  double pigeonhole = 0.0;     ///< Σ_m terms
  std::vector<LambdaLevel> levels;
  Mask bad;
};

/// Scans λ = 2^m γ for m = 0..m₀ and keeps the level with the smallest
/// term. phi_gamma ≤ 0 means φ(γ) = ⨍φ(|∇w|) + ⨍φ*(|G|).
GoodLambda good_lambda_select(const NFunction& phi, const Field& w, const Field& g, int m0,
                              double phi_gamma = 0.0);

/// Cylinders and scaling of the test functions used by `defect`.
struct TestFamily {
  double alpha = 1.0;
  std::vector<Cylinder> cylinders;
};

/// Cylinders of two radii placed on a lattice so that every member vanishes
/// near the parabolic boundary and the final time.
TestFamily default_test_family(const GridSpec& g);

struct DefectResult {
  double delta = 0.0;
  double numerator = 0.0;    ///< at the maximising member
  double denominator = 0.0;
  std::size_t members = 0;
};

DefectResult defect(const NFunction& phi, const Field& u, const Field& H, const TestFamily& family);

/// (⨍_I (⨍_B f^{2σ})^{q/σ})^{1/q} against sup_I(⨍_B f²)^{(q−1)/q} (⨍_I(⨍_B f)²)^{1/q}
/// for f ≥ 0 given per node; ratio = lhs / rhs.
struct InterpolationCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};
InterpolationCheck interpolation_check(const Field& f, double sigma, double q);

struct ExperimentReport {
  double eps = 0.0;
  int newton_iterations = 0;
  DefectResult defect;
  double gamma = 0.0;
  double phi_gamma = 0.0;
  GoodLambda good_lambda;
  double d1 = 0.0;
  double d2 = 0.0;
  double d1_ratio = 0.0;  ///< D₁/φ(γ)
  double d2_ratio = 0.0;
  double total_ratio = 0.0;
  EnergyCheck energy;
  bool truncated = false;
  double bad_fraction = 0.0;
  double term_i1 = 0.0;   ///< ⨍ |w_λ|²/2 · (−∂_t η)
  double term_i2 = 0.0;   ///< ⨍ χ_O |w − w_λ| |∂_t w_λ| η
  double term_ii2 = 0.0;  ///< ⨍ χ_O (|A(∇u)| + |A(∇h)|) λ
  double term_iv = 0.0;   ///< (⨍|V(∇u) − V(∇h)|^{2θ})^{1/θ}
  double term_vi = 0.0;   ///< ⨍_I (⨍_B |w| / sqrt(t⁺ − t⁻))²
  InterpolationCheck interpolation;
};

/// Solves for h with the boundary values of u, forms w = u − h, measures the
/// defect, selects λ, truncates w and evaluates the two distances.
ExperimentReport approximation_experiment(const CaloricProblem& p, const SolverConfig& cfg, int m0);

/// Perturbed problem for sweeps: h0 solves the φ-heat equation from a sine
/// (plus `slope`·x on the faces) initial profile, u = h0 + ε·b with a smooth
/// interior bump b, H = A_ε(∇h0) + ε·flux_from(b).
struct PerturbedSetup {
  int m = 1;
  int nt = 65;
  std::array<int, 2> n{33, 1};
  double t0 = 0.1;
  double slope = 0.0;
  double eps = 0.0;
};
CaloricProblem perturbed_problem(const PerturbedSetup& s, const NFunction& phi, const SolverConfig& cfg);

}  // namespace paratrunc
