#include "paratrunc/paratrunc.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <new>
#include <sstream>
#include <string>

#include "paratrunc/caloric.hpp"
#include "paratrunc/error.hpp"
#include "paratrunc/fields.hpp"
#include "paratrunc/grid.hpp"
#include "paratrunc/maximal.hpp"
#include "paratrunc/orlicz.hpp"
#include "paratrunc/parallel.hpp"
#include "paratrunc/poincare.hpp"
#include "paratrunc/report.hpp"
#include "paratrunc/truncation.hpp"
#include "paratrunc/whitney.hpp"

struct pt_field {
  paratrunc::Field f;
};

struct pt_nfunction {
  paratrunc::NFunction phi;
};

namespace {

using namespace paratrunc;

thread_local std::string g_last_error;

int guarded(const std::function<void()>& body) {
  try {
    body();
    g_last_error.clear();
    return PT_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const Json::exception& e) {
    g_last_error = std::string("invalid configuration: ") + e.what();
    return PT_EINVAL;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PT_ENUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PT_ENUMERIC;
  } catch (...) {
    g_last_error = "unknown failure";
    return PT_ENUMERIC;
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class T>
T opt(const Json& cfg, const char* key, T fallback) {
  return cfg.contains(key) && !cfg[key].is_null() ? cfg[key].get<T>() : fallback;
}

std::string need_string(const Json& cfg, const char* key) {
  if (!cfg.contains(key) || !cfg[key].is_string()) fail(std::string("missing string field '") + key + "'");
  return cfg[key].get<std::string>();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Field load_field(const std::string& path, const Json& cfg) {
  if (ends_with(path, ".csv")) return read_csv(path, opt(cfg, "h", 0.0), opt(cfg, "tau", 0.0));
  return read_ptf(path);
}

void save_field(const Field& f, const std::string& path) {
  if (ends_with(path, ".csv"))
    write_csv(f, path);
  else
    write_ptf(f, path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed: " + path);
}

GridSpec grid_from(const Json& cfg) {
  const int m = opt(cfg, "m", 1);
  const int nt = opt(cfg, "nt", 64);
  std::array<int, 2> n{256, 1};
  if (cfg.contains("n")) {
    const auto& a = cfg["n"];
    if (!a.is_array() || a.empty()) fail("'n' must be a nonempty array");
    n[0] = a[0].get<int>();
    n[1] = a.size() > 1 ? a[1].get<int>() : n[0];
  } else if (m == 2) {
    n = {48, 48};
  }
  if (m != 1 && m != 2) fail("m must be 1 or 2");
  if (nt < 4 || n[0] < 4 || (m == 2 && n[1] < 4)) fail("grid needs at least 4 nodes per axis");
  const double h = opt(cfg, "h", 1.0 / (n[0] - 1));
  const double tau = opt(cfg, "tau", 1.0 / (nt - 1));
  return GridSpec::base(m, nt, n, h, tau);
}

Json grid_json(const GridSpec& g) {
  return {{"m", g.m}, {"nt", g.nt}, {"n", {g.n[0], g.n[1]}}, {"h", g.h}, {"tau", g.tau}, {"t0", g.t0}};
}

Json stats_json(const Field& f) {
  double mx = 0.0, l2 = 0.0;
  for (std::size_t z = 0; z < f.grid.nodes(); ++z) {
    const double a = f.norm_at(z);
    mx = std::max(mx, a);
    l2 += a * a;
  }
  Json j = grid_json(f.grid);
  j["rank"] = f.rank;
  j["max_abs"] = mx;
  j["l2"] = std::sqrt(l2 * f.grid.cell());
  return j;
}

NFunction phi_from(const Json& cfg) { return NFunction::parse(opt<std::string>(cfg, "phi", "p:2")); }

SolverConfig solver_from(const Json& cfg) {
  SolverConfig s;
  s.eps = opt(cfg, "eps_reg", s.eps);
  s.tol = opt(cfg, "tol", s.tol);
  s.max_iter = opt(cfg, "max_iter", s.max_iter);
  s.linear_tol = opt(cfg, "linear_tol", s.linear_tol);
  return s;
}

// Problem JSON: either {"u": path, "H": path} or {"setup": {...}}.
CaloricProblem problem_from(const Json& cfg, const NFunction& phi, const SolverConfig& sc) {
  Json prob = cfg.contains("problem") ? cfg["problem"] : Json::object();
  if (prob.is_string()) {
    std::ifstream in(prob.get<std::string>());
    if (!in) throw Error(ErrorCode::io, "cannot read problem file " + prob.get<std::string>());
    prob = Json::parse(in);
  }
  CaloricProblem p;
  if (prob.contains("u")) {
    p.u = read_ptf(prob["u"].get<std::string>());
    p.H = read_ptf(need_string(prob, "H"));
    p.phi = phi;
  } else {
    const Json setup = prob.contains("setup") ? prob["setup"] : prob;
    PerturbedSetup s;
    s.m = opt(setup, "m", s.m);
    s.nt = opt(setup, "nt", s.nt);
    if (setup.contains("n")) {
      s.n[0] = setup["n"][0].get<int>();
      s.n[1] = setup["n"].size() > 1 ? setup["n"][1].get<int>() : s.n[0];
    } else if (s.m == 2) {
      s.n = {17, 17};
    }
    s.t0 = opt(setup, "t0", s.t0);
    s.slope = opt(setup, "slope", s.slope);
    s.eps = opt(setup, "eps", s.eps);
    p = perturbed_problem(s, phi, sc);
  }
  p.sigma = opt(cfg, "sigma", p.sigma);
  p.q = opt(cfg, "q", p.q);
  p.theta = opt(cfg, "theta", p.theta);
  return p;
}

Json op_field_gen(const Json& cfg) {
  const GridSpec g = grid_from(cfg);
  const FieldPair fp = make_preset(opt<std::string>(cfg, "preset", "smooth"), g, opt<std::uint64_t>(cfg, "seed", 1));
  if (cfg.contains("out")) save_field(fp.w, cfg["out"].get<std::string>());
  if (cfg.contains("out_g")) save_field(fp.g, cfg["out_g"].get<std::string>());
  Json r = new_report("field_gen");
  r["w"] = stats_json(fp.w);
  r["g"] = stats_json(fp.g);
  return r;
}

Json op_field_convert(const Json& cfg) {
  const Field f = load_field(need_string(cfg, "in"), cfg);
  save_field(f, need_string(cfg, "out"));
  Json r = new_report("field_convert");
  r["field"] = stats_json(f);
  return r;
}

Json op_field_stats(const Json& cfg) {
  const Field f = load_field(need_string(cfg, "in"), cfg);
  Json r = new_report("field_stats");
  r["field"] = stats_json(f);
  return r;
}

// α given as a number, or "auto": λ/φ'(λ) with λ from the config or sup|f|.
double alpha_from(const Json& cfg, const NFunction& phi, double fallback_lambda) {
  if (cfg.contains("alpha") && cfg["alpha"].is_number()) {
    const double a = cfg["alpha"].get<double>();
    if (!(a > 0.0)) fail("alpha must be positive");
    return a;
  }
  if (cfg.contains("alpha") && cfg["alpha"] != "auto") fail("alpha must be a number or \"auto\"");
  double lam = opt(cfg, "lambda_for_alpha", fallback_lambda);
  if (!(lam > 0.0)) lam = 1.0;
  return lam / phi.d1(lam);
}

Json op_maximal(const Json& cfg) {
  const Field f = load_field(need_string(cfg, "in"), cfg);
  const NFunction phi = phi_from(cfg);
  double sup = 0.0;
  for (std::size_t z = 0; z < f.grid.nodes(); ++z) sup = std::max(sup, f.norm_at(z));
  const double alpha = alpha_from(cfg, phi, sup);
  const auto radii = dyadic_radii(f.grid, alpha);
  const std::string op = opt<std::string>(cfg, "op", "m");
  Field out;
  if (op == "m")
    out = m_alpha(magnitude(f), alpha, radii);
  else if (op == "sharp")
    out = sharp_alpha(f, alpha, radii);
  else if (op == "n")
    out = n_alpha_family(f, alpha, radii);
  else
    fail("maximal: op must be m, sharp or n");
  if (cfg.contains("out")) save_field(out, cfg["out"].get<std::string>());
  double mx = 0.0, mean = 0.0;
  for (double x : out.v) {
    mx = std::max(mx, x);
    mean += x;
  }
  mean /= static_cast<double>(out.v.size());
  Json r = new_report("maximal");
  r["op"] = op;
  put(r, "alpha", alpha, "cylinder scaling alpha");
  put(r, "radii", radii.size(), "number of dyadic radii");
  put(r, "sup", mx, op == "n" ? "sup of the negative-norm maximal function" : "sup of the parabolic maximal function");
  put(r, "mean", mean, "mean of the maximal function over the grid");
  put(r, "input_sup", sup, "sup of the input field");
  return r;
}

Json op_whitney(const Json& cfg) {
  const Field f = load_field(need_string(cfg, "mask"), cfg);
  Mask o(f.grid.nodes());
  for (std::size_t z = 0; z < o.size(); ++z) o[z] = f.norm_at(z) != 0.0;
  const double alpha = opt(cfg, "alpha", 1.0);
  WhitneyCover cover = whitney_cover(o, f.grid, alpha);
  partition_of_unity(cover);
  const CoverDiagnostics d = check_cover(cover, o, opt(cfg, "measure_4q", false));
  Json r = new_report("whitney");
  put(r, "alpha", alpha, "cylinder scaling alpha");
  put_cover(r, d);
  if (cfg.contains("out")) {
    Json cyl = Json::array();
    for (const Cylinder& q : cover.cylinders) {
      Json x = {f.grid.x(0, q.i)};
      if (f.grid.m == 2) x.push_back(f.grid.x(1, q.j));
      cyl.push_back({{"node", {q.k, q.i, q.j}}, {"t", f.grid.t(q.k)}, {"x", x}, {"r", q.r}, {"alpha", alpha}});
    }
    write_text(cfg["out"].get<std::string>(), Json({{"cylinders", cyl}}).dump(2) + "\n");
  }
  if (cfg.contains("weights")) {
    std::ostringstream os;
    os.precision(17);
    os << "cylinder,node,value\n";
    for (std::size_t j = 0; j < cover.rho.size(); ++j)
      for (const auto& [node, val] : cover.rho[j]) os << j << ',' << node << ',' << val << '\n';
    write_text(cfg["weights"].get<std::string>(), os.str());
  }
  return r;
}

Json op_truncate(const Json& cfg) {
  const Field w = load_field(need_string(cfg, "w"), cfg);
  const Field g = load_field(need_string(cfg, "g"), cfg);
  const NFunction phi = phi_from(cfg);
  Json r = new_report("truncate");
  put(r, "phi", phi.description(), "N-function");
  TruncationParams tp;
  tp.phi = phi;
  tp.seed = opt<std::uint64_t>(cfg, "seed", 1);
  tp.pad_t = opt(cfg, "pad_t", 0);
  tp.pad_x = opt(cfg, "pad_x", 0);
  if (!cfg.contains("lambda")) fail("truncate: lambda is required");
  const Json& lam = cfg["lambda"];
  if (lam.is_number()) {
    tp.lambda = lam.get<double>();
    if (cfg.contains("alpha") && cfg["alpha"].is_number()) tp.alpha = cfg["alpha"].get<double>();
    else if (cfg.contains("alpha") && cfg["alpha"] != "auto") fail("alpha must be a number or \"auto\"");
  } else {
    const std::string s = lam.get<std::string>();
    const std::string prefix = "goodlambda:";
    if (s.rfind(prefix, 0) != 0) fail("lambda must be a number or goodlambda:<m0>");
    const int m0 = std::stoi(s.substr(prefix.size()));
    const GoodLambda gl = good_lambda_select(phi, w, g, m0);
    put_good_lambda(r, gl, m0);
    if (gl.level < 0) {
      put(r, "truncated", false, "truncation skipped on zero data");
      return r;
    }
    tp.lambda = gl.lambda;
    tp.alpha = gl.alpha;
  }
  const TruncationResult res = truncate(w, g, tp);
  const TruncationReport rep = verify_properties(res, tp);
  put_truncation(r, res, rep);
  if (cfg.contains("dump_wlam")) {
    save_field(restrict_to(res.wlam, res.base, res.ext.pad_t, res.ext.pad_x), cfg["dump_wlam"].get<std::string>());
  }
  return r;
}

Json op_poincare(const Json& cfg) {
  const std::string mode = opt<std::string>(cfg, "mode", "weak");
  if (mode != "weak" && mode != "modular") fail("poincare: mode must be weak or modular");
  const NFunction phi = phi_from(cfg);
  const auto res = poincare_battery(opt(cfg, "battery", 100), opt<std::uint64_t>(cfg, "seed", 1),
                                    mode == "weak" ? PoincareMode::weak : PoincareMode::modular, phi,
                                    opt(cfg, "m", 1), opt(cfg, "refine", 0));
  Json r = new_report("poincare");
  r["mode"] = mode;
  put(r, "phi", phi.description(), "N-function");
  put_poincare(r, res);
  return r;
}

Json op_caloric_solve(const Json& cfg) {
  const NFunction phi = phi_from(cfg);
  const SolverConfig sc = solver_from(cfg);
  const CaloricProblem p = problem_from(cfg, phi, sc);
  const HeatSolution s = solve_phi_heat(phi, p.u, sc);
  if (cfg.contains("out")) save_field(s.h, cfg["out"].get<std::string>());
  if (cfg.contains("out_flux")) save_field(s.flux, cfg["out_flux"].get<std::string>());
  Json r = new_report("caloric_solve");
  put(r, "phi", phi.description(), "N-function");
  put_heat(r, s);
  return r;
}

Json op_caloric_experiment(const Json& cfg) {
  const NFunction phi = phi_from(cfg);
  const SolverConfig sc = solver_from(cfg);
  const CaloricProblem p = problem_from(cfg, phi, sc);
  const ExperimentReport e = approximation_experiment(p, sc, opt(cfg, "m0", 6));
  Json r = new_report("caloric_experiment");
  put(r, "phi", phi.description(), "N-function");
  put(r, "sigma", p.sigma, "mixed-norm exponent sigma");
  put(r, "q", p.q, "mixed-norm exponent q");
  put(r, "theta", p.theta, "gradient-distance exponent theta");
  put_experiment(r, e);
  return r;
}

std::string csv_number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// Tables for plotting: "lambda" sweeps a truncation over dyadic levels, "eps"
// sweeps the caloric experiment over perturbation sizes.
Json op_sweep(const Json& cfg) {
  const std::string kind = opt<std::string>(cfg, "kind", "lambda");
  const NFunction phi = phi_from(cfg);
  std::ostringstream csv;
  Json rows = Json::array();
  if (kind == "lambda") {
    const Field w = load_field(need_string(cfg, "w"), cfg);
    const Field g = load_field(need_string(cfg, "g"), cfg);
    const auto lambdas = cfg.at("lambdas").get<std::vector<double>>();
    csv << "lambda,alpha,bad_fraction,c_b,c_c,c_d_flux,c_e\n";
    for (double lam : lambdas) {
      TruncationParams tp;
      tp.lambda = lam;
      tp.phi = phi;
      const TruncationResult res = truncate(w, g, tp);
      const TruncationReport rep = verify_properties(res, tp);
      csv << csv_number(lam) << ',' << csv_number(res.alpha) << ',' << csv_number(rep.bad_fraction) << ','
          << csv_number(rep.c_b) << ',' << csv_number(rep.c_c) << ',' << csv_number(rep.c_d_flux) << ','
          << csv_number(rep.c_e) << '\n';
      rows.push_back({{"lambda", lam}, {"c_b", rep.c_b}, {"c_c", rep.c_c}, {"bad_fraction", rep.bad_fraction}});
    }
  } else if (kind == "eps") {
    const SolverConfig sc = solver_from(cfg);
    const auto eps = cfg.at("eps").get<std::vector<double>>();
    csv << "eps,defect,d1,d2,total_ratio,energy_ratio\n";
    for (double e : eps) {
      Json c = cfg;
      c["problem"] = cfg.contains("problem") ? cfg["problem"] : Json::object();
      if (c["problem"].contains("setup"))
        c["problem"]["setup"]["eps"] = e;
      else
        c["problem"]["eps"] = e;
      const CaloricProblem p = problem_from(c, phi, sc);
      const ExperimentReport rep = approximation_experiment(p, sc, opt(cfg, "m0", 6));
      csv << csv_number(e) << ',' << csv_number(rep.defect.delta) << ',' << csv_number(rep.d1) << ','
          << csv_number(rep.d2) << ',' << csv_number(rep.total_ratio) << ',' << csv_number(rep.energy.ratio) << '\n';
      rows.push_back({{"eps", e}, {"defect", rep.defect.delta}, {"total_ratio", rep.total_ratio}});
    }
  } else {
    fail("sweep: kind must be lambda or eps");
  }
  if (cfg.contains("csv")) write_text(cfg["csv"].get<std::string>(), csv.str());
  Json r = new_report("sweep");
  r["sweep_kind"] = kind;
  put(r, "rows", rows, kind == "lambda" ? "truncation constants per level" : "approximation distances per perturbation");
  return r;
}

Json op_orlicz(const Json& cfg) {
  const NFunction phi = phi_from(cfg);
  Json r = new_report("orlicz");
  put_characteristics(r, phi);
  put(r, "young_constant_half", phi.young_constant(0.5), "Young inequality constant for delta = 1/2");
  return r;
}

const std::map<std::string, Json (*)(const Json&)>& ops() {
  static const std::map<std::string, Json (*)(const Json&)> table = {
      {"field_gen", op_field_gen},
      {"field_convert", op_field_convert},
      {"field_stats", op_field_stats},
      {"maximal", op_maximal},
      {"whitney", op_whitney},
      {"truncate", op_truncate},
      {"poincare", op_poincare},
      {"caloric_solve", op_caloric_solve},
      {"caloric_experiment", op_caloric_experiment},
      {"sweep", op_sweep},
      {"orlicz", op_orlicz},
  };
  return table;
}

}  // namespace

extern "C" {

PT_API const char* pt_last_error(void) { return g_last_error.c_str(); }

PT_API void pt_string_free(char* s) { std::free(s); }

PT_API int pt_schema_version(void) { return kReportSchema; }

PT_API int pt_set_threads(int n) {
  return guarded([&] { set_thread_count(n); });
}

PT_API int pt_nfunction_parse(const char* spec, pt_nfunction** out) {
  return guarded([&] {
    if (!spec || !out) fail("null argument");
    *out = new pt_nfunction{NFunction::parse(spec)};
  });
}

PT_API void pt_nfunction_free(pt_nfunction* f) { delete f; }

PT_API int pt_nfunction_eval(const pt_nfunction* f, double t, double* phi, double* dphi, double* conj) {
  return guarded([&] {
    if (!f) fail("null N-function");
    if (!(t >= 0.0) || !std::isfinite(t)) fail("argument must be finite and nonnegative");
    if (phi) *phi = f->phi(t);
    if (dphi) *dphi = f->phi.d1(t);
    if (conj) *conj = f->phi.conjugate(t);
  });
}

PT_API int pt_field_read(const char* path, pt_field** out) {
  return guarded([&] {
    if (!path || !out) fail("null argument");
    *out = new pt_field{read_ptf(path)};
  });
}

PT_API int pt_field_write(const pt_field* f, const char* path) {
  return guarded([&] {
    if (!f || !path) fail("null argument");
    write_ptf(f->f, path);
  });
}

PT_API int pt_field_preset(const char* name, int m, int nt, int n1, int n2, double h, double tau, uint64_t seed,
                           pt_field** w, pt_field** g) {
  return guarded([&] {
    if (!name || !w || !g) fail("null argument");
    const GridSpec grid = GridSpec::base(m, nt, {n1, m == 2 ? n2 : 1}, h, tau);
    FieldPair fp = make_preset(name, grid, seed);
    auto* pw = new pt_field{std::move(fp.w)};
    try {
      *g = new pt_field{std::move(fp.g)};
    } catch (...) {
      delete pw;
      throw;
    }
    *w = pw;
  });
}

PT_API int pt_field_data(const pt_field* f, const double** data, size_t* len) {
  return guarded([&] {
    if (!f || !data || !len) fail("null argument");
    *data = f->f.v.data();
    *len = f->f.v.size();
  });
}

PT_API int pt_field_info(const pt_field* f, char** json) {
  return guarded([&] {
    if (!f || !json) fail("null argument");
    *json = copy_string(stats_json(f->f).dump());
  });
}

PT_API void pt_field_free(pt_field* f) { delete f; }

PT_API int pt_run(const char* op, const char* config_json, char** report_json) {
  return guarded([&] {
    if (!op || !report_json) fail("null argument");
    *report_json = nullptr;
    const auto it = ops().find(op);
    if (it == ops().end()) fail(std::string("unknown operation ") + op);
    const Json cfg = config_json && *config_json ? Json::parse(config_json) : Json::object();
    if (!cfg.is_object()) fail("configuration must be a JSON object");
    if (cfg.contains("threads")) set_thread_count(cfg["threads"].get<int>());
    *report_json = copy_string(dump(it->second(cfg)));
  });
}

}  // extern "C"
