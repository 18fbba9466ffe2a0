#include "paratrunc/report.hpp"

#include <cmath>

#include "paratrunc/error.hpp"

namespace paratrunc {
namespace {

// JSON has no infinities; they are written as strings.
Json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

const char* case_name(AverageCase c) {
  switch (c) {
    case AverageCase::inside: return "inside";
    case AverageCase::near_time: return "near_time";
    case AverageCase::near_space: return "near_space";
  }
  return "?";
}

}  // namespace

Json new_report(const std::string& kind) {
  Json r = Json::object();
  r["schema_version"] = kReportSchema;
  r["kind"] = kind;
  r["anchors"] = Json::object();
  return r;
}

void put(Json& report, const std::string& key, const Json& value, const std::string& anchor) {
  if (report["anchors"].contains(key)) fail("report: duplicate key " + key);
  report[key] = value.is_number_float() ? num(value.get<double>()) : value;
  report["anchors"][key] = anchor;
}

void put_truncation(Json& report, const TruncationResult& res, const TruncationReport& r) {
  put(report, "lambda", res.lambda, "truncation level lambda");
  put(report, "alpha", res.alpha, "cylinder scaling alpha = lambda / phi'(lambda) unless given");
  put(report, "bad_fraction", r.bad_fraction, "bad set: share of the domain where the maximal functions exceed lambda");
  put(report, "cylinders", r.cylinders, "Whitney cover of the bad set: number of cylinders");
  put(report, "max_neighbours", r.max_neighbours, "Whitney cover: largest neighbour set");
  put(report, "degenerate", res.degenerate, "bad set covers the whole domain");
  put(report, "prop_a_exact", r.prop_a_exact, "truncation equals w off the bad set");
  put(report, "prop_a_max_diff", r.prop_a_max_diff, "truncation equals w off the bad set: largest deviation");
  put(report, "c_b", r.c_b, "gradient bound: sup M(grad w_lambda) / lambda");
  put(report, "c_c", r.c_c, "modular stability: int phi(|grad(w_lambda - w)|) / (int_O phi(|grad w|) + phi(lambda)|O|)");
  put(report, "c_c_l1", r.c_c_l1, "L1 stability: int |grad(w_lambda - w)| / (int_O |grad w| + lambda|O|)");
  put(report, "c_c_vacuous", r.c_c_vacuous, "modular stability: empty bad set");
  put(report, "c_d_flux", r.c_d_flux, "time derivative bound, flux tier: alpha N_Q(dt w_lambda) / lambda");
  put(report, "c_d_family", r.c_d_family, "time derivative bound, test-function tier");
  put(report, "d_violations", r.d_violations, "test-function tier exceeding the flux tier");
  put(report, "d_flux_cylinders", r.d_flux_cylinders, "time derivative bound: cylinders in the flux tier");
  put(report, "d_family_cylinders", r.d_family_cylinders, "time derivative bound: cylinders in the test-function tier");
  put(report, "c_e", r.c_e, "parabolic Lipschitz quotient of w_lambda over lambda");
  put(report, "c_wj", r.c_wj, "local averages: mean over 3/4 Q_j of |w - w_j| / (r_j lambda)");
  put(report, "c_diff", r.c_diff, "neighbouring averages: |w_j - w_k| / (r_j lambda)");
  put(report, "c_nqout", r.c_nqout, "negative-norm bound on the bad set");
  put(report, "ibp_residual", r.ibp.residual, "integration by parts with the truncated test function: |lhs - rhs|");
  put(report, "ibp_lhs", r.ibp.lhs, "integration by parts: pairing of the flux with grad(w_lambda eta)");
  put(report, "ibp_rhs", r.ibp.rhs, "integration by parts: time-derivative side");
  put(report, "ibp_energy", r.ibp.energy, "integration by parts: energy scale 1/2 int w^2 |dt eta|");
  Json cases = Json::object();
  for (const char* c : {"inside", "near_time", "near_space"}) cases[c] = 0;
  for (AverageCase c : res.cases) cases[case_name(c)] = cases[case_name(c)].get<int>() + 1;
  put(report, "average_cases", cases, "local averages: cylinders per position relative to the domain");
}

void put_cover(Json& report, const CoverDiagnostics& d) {
  put(report, "cylinders", d.cylinders, "Whitney cover: number of cylinders");
  put(report, "half_cover_mismatch", d.half_cover_mismatch, "Whitney cover: half cylinders cover exactly the open set");
  put(report, "inner_violations", d.inner_violations, "Whitney cover: 8Q inside the open set");
  put(report, "outer_violations", d.outer_violations, "Whitney cover: 16Q meets the complement");
  put(report, "radius_violations", d.radius_violations, "Whitney cover: touching cylinders have comparable radii");
  put(report, "quarter_overlaps", d.quarter_overlaps, "Whitney cover: quarter cylinders are disjoint");
  put(report, "max_overlap", d.max_overlap, "Whitney cover: pointwise overlap of the cylinders");
  put(report, "max_overlap_4q", d.max_overlap_4q, "Whitney cover: pointwise overlap of the 4x enlarged cylinders");
  put(report, "max_neighbours", d.max_neighbours, "Whitney cover: neighbour count");
  put(report, "min_fat_ratio", d.min_fat_ratio, "Whitney cover: relative size of neighbour intersections");
  put(report, "bump_sandwich_violations", d.bump_sandwich_violations, "partition of unity: bump between half and three-quarter cylinder");
  put(report, "rho_support_violations", d.rho_support_violations, "partition of unity: support in three-quarter cylinder");
  put(report, "partition_error", d.partition_error, "partition of unity: sum equals one on the open set");
  put(report, "local_partition_error", d.local_partition_error, "partition of unity: neighbour sums equal one");
  put(report, "derivative_bound", d.derivative_bound, "partition of unity: scaled derivative bound");
}

void put_poincare(Json& report, const PoincareBatteryResult& r) {
  Json ratios = Json::array();
  for (double x : r.ratios) ratios.push_back(num(x));
  put(report, "ratios", ratios, "parabolic Poincare inequality: lhs / rhs per battery member");
  put(report, "max", r.max, "parabolic Poincare inequality: battery maximum");
  put(report, "median", r.median, "parabolic Poincare inequality: battery median");
  put(report, "max_c0", r.max_c0, "parabolic Poincare inequality: weight constant");
}

void put_good_lambda(Json& report, const GoodLambda& gl, int m0) {
  put(report, "m0", m0, "good-lambda selection: number of dyadic levels");
  put(report, "gamma", gl.gamma, "good-lambda selection: gamma with phi(gamma) = mean phi(|grad w|) + mean phi*(|G|)");
  put(report, "phi_gamma", gl.phi_gamma, "good-lambda selection: phi(gamma)");
  put(report, "selected_level", gl.level, "good-lambda selection: m with lambda = 2^m gamma (-1 on zero data)");
  put(report, "selected_lambda", gl.lambda, "good-lambda selection: lambda");
  put(report, "selected_alpha", gl.alpha, "good-lambda selection: alpha = lambda / phi'(lambda)");
  put(report, "good_lambda_bound", gl.bound, "good-lambda selection: m0 phi(lambda) |bad| / (phi(gamma) |Q|)");
  put(report, "good_lambda_bad_fraction", gl.bad_fraction, "good-lambda selection: bad set share at the selected level");
  put(report, "pigeonhole_sum", gl.pigeonhole, "good-lambda selection: sum over levels of phi(2^m gamma) |level set| / (phi(gamma) |Q|)");
  Json levels = Json::array();
  for (const auto& l : gl.levels) {
    levels.push_back({{"lambda", num(l.lambda)},
                      {"alpha", num(l.alpha)},
                      {"grad_fraction", num(l.grad_fraction)},
                      {"flux_fraction", num(l.flux_fraction)},
                      {"term", num(l.term)}});
  }
  put(report, "levels", levels, "good-lambda selection: per-level level-set measures");
}

void put_experiment(Json& report, const ExperimentReport& r) {
  put(report, "regularisation", r.eps, "comparison solver: regularisation of |grad h|");
  put(report, "newton_iterations", r.newton_iterations, "comparison solver: accepted nonlinear steps");
  put(report, "defect", r.defect.delta, "almost caloric defect: max over test functions of the normalised weak residual");
  put(report, "defect_numerator", r.defect.numerator, "almost caloric defect: weak residual at the maximiser");
  put(report, "defect_denominator", r.defect.denominator, "almost caloric defect: normalisation at the maximiser");
  put(report, "defect_members", r.defect.members, "almost caloric defect: test functions evaluated");
  put(report, "d1", r.d1, "distance to the comparison function in the mixed Lebesgue norm of u - h");
  put(report, "d2", r.d2, "distance to the comparison function in V(grad u) - V(grad h)");
  put(report, "d1_ratio", r.d1_ratio, "d1 / phi(gamma)");
  put(report, "d2_ratio", r.d2_ratio, "d2 / phi(gamma)");
  put(report, "total_ratio", r.total_ratio, "(d1 + d2) / phi(gamma)");
  put(report, "energy_sup_l2", r.energy.sup_l2, "energy estimate: sup in time of the mean of |w|^2");
  put(report, "energy_v_gap", r.energy.v_gap, "energy estimate: mean of |V(grad u) - V(grad h)|^2");
  put(report, "energy_rhs", r.energy.rhs, "energy estimate: mean phi(|grad u|) + phi*(|G|)");
  put(report, "energy_ratio", r.energy.ratio, "energy estimate: measured constant");
  put(report, "truncated", r.truncated, "truncation of u - h performed (false on zero data)");
  put(report, "experiment_bad_fraction", r.bad_fraction, "bad set share at the selected level");
  put(report, "term_i1", r.term_i1, "mean |w_lambda|^2 / 2 times -dt eta");
  put(report, "term_i2", r.term_i2, "mean over the bad set of |w - w_lambda| |dt w_lambda| eta");
  put(report, "term_ii2", r.term_ii2, "mean over the bad set of (|A(grad u)| + |A(grad h)|) lambda");
  put(report, "term_iv", r.term_iv, "(mean |V(grad u) - V(grad h)|^(2 theta))^(1/theta)");
  put(report, "term_vi", r.term_vi, "time mean of (space mean |w| / sqrt(t+ - t-))^2");
  put(report, "interpolation_ratio", r.interpolation.ratio, "mixed-norm interpolation: lhs / rhs (0 unless sigma > 1/2)");
  put_good_lambda(report, r.good_lambda, static_cast<int>(r.good_lambda.levels.empty() ? 0 : r.good_lambda.levels.size() - 1));
  report["anchors"]["phi_gamma"] = "phi(gamma) = mean phi(|grad u|) + mean phi*(|H|)";
  report["gamma"] = num(r.gamma);
  report["phi_gamma"] = num(r.phi_gamma);
}

void put_heat(Json& report, const HeatSolution& s) {
  put(report, "regularisation", s.eps, "comparison solver: regularisation of |grad h|");
  put(report, "newton_iterations", s.newton_iterations, "comparison solver: accepted nonlinear steps");
  put(report, "picard_steps", s.picard_steps, "comparison solver: steps taken with the isotropic fallback");
  put(report, "max_residual", s.max_residual, "comparison solver: largest accepted step residual");
}

void put_characteristics(Json& report, const NFunction& phi) {
  const Characteristics& c = phi.characteristics();
  put(report, "phi", phi.description(), "N-function");
  put(report, "char_c1", c.c1, "N-function: inf t phi''/phi'");
  put(report, "char_c2", c.c2, "N-function: sup t phi''/phi'");
  put(report, "delta2", c.delta2, "N-function: doubling constant");
  put(report, "delta2_conj", c.delta2_conj, "N-function: doubling constant of the conjugate");
}

std::string dump(const Json& report) { return report.dump(2) + "\n"; }

}  // namespace paratrunc
