// Command-line front end. Everything goes through the C API: arguments are
// turned into a JSON configuration and handed to pt_run.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "paratrunc/paratrunc.h"

using Json = nlohmann::json;

namespace {

int exit_code(int rc) {
  if (rc == PT_OK) return 0;
  return rc == PT_ENUMERIC ? 2 : 1;
}

// A value given as a number or a keyword (auto, goodlambda:<m0>).
Json number_or_word(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return s;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return Json::parse(in);
}

int run(const std::string& op, const Json& cfg, const std::string& report_path) {
  char* out = nullptr;
  const int rc = pt_run(op.c_str(), cfg.dump().c_str(), &out);
  if (rc != PT_OK) {
    std::cerr << "paratrunc " << op << ": " << pt_last_error() << "\n";
    return exit_code(rc);
  }
  const std::string text = out;
  pt_string_free(out);
  if (report_path.empty() || report_path == "-") {
    std::cout << text;
    return 0;
  }
  std::ofstream f(report_path, std::ios::binary);
  if (!f || !(f << text)) {
    std::cerr << "paratrunc: cannot write " << report_path << "\n";
    return 1;
  }
  return 0;
}

template <class T>
void set_if(Json& cfg, const char* key, const std::optional<T>& v) {
  if (v) cfg[key] = *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parabolic Lipschitz truncation and caloric approximation toolkit"};
  app.set_help_flag("--help", "print help");  // -h is the space step
  app.require_subcommand(1);
  app.fallthrough();  // --threads may follow the subcommand
  std::optional<int> threads;
  app.add_option("--threads", threads, "worker threads (default: PARATRUNC_THREADS or 1)");
  std::string report;

  std::string op;
  Json cfg = Json::object();

  // field
  auto* field = app.add_subcommand("field", "generate, convert or describe fields");
  field->require_subcommand(1);
  auto* gen = field->add_subcommand("gen", "write a preset field and its flux");
  std::string preset = "smooth", out, out_g;
  int m = 1;
  std::optional<int> nt;
  std::vector<int> n;
  std::optional<double> h, tau;
  std::uint64_t seed = 1;
  gen->add_option("--preset", preset, "zero | smooth | spike | random")->check(CLI::IsMember({"zero", "smooth", "spike", "random"}));
  gen->add_option("--m", m, "spatial dimension")->check(CLI::Range(1, 2));
  gen->add_option("--nt", nt, "time nodes");
  gen->add_option("--n", n, "space nodes per axis");
  gen->add_option("--h", h, "space step");
  gen->add_option("--tau", tau, "time step");
  gen->add_option("--seed", seed, "seed");
  gen->add_option("--out", out, "output field (PTF1, or .csv for m = 1)")->required();
  gen->add_option("--out-g", out_g, "output flux field");
  gen->add_option("--report", report, "report path (default stdout)");
  gen->callback([&] {
    op = "field_gen";
    cfg["preset"] = preset;
    cfg["m"] = m;
    set_if(cfg, "nt", nt);
    if (!n.empty()) cfg["n"] = n;
    set_if(cfg, "h", h);
    set_if(cfg, "tau", tau);
    cfg["seed"] = seed;
    cfg["out"] = out;
    if (!out_g.empty()) cfg["out_g"] = out_g;
  });

  auto* conv = field->add_subcommand("convert", "convert between PTF1 and CSV (m = 1)");
  std::string in;
  conv->add_option("--in", in, "input field")->required();
  conv->add_option("--out", out, "output field")->required();
  conv->add_option("--h", h, "space step for CSV input");
  conv->add_option("--tau", tau, "time step for CSV input");
  conv->add_option("--report", report, "report path");
  conv->callback([&] {
    op = "field_convert";
    cfg["in"] = in;
    cfg["out"] = out;
    set_if(cfg, "h", h);
    set_if(cfg, "tau", tau);
  });

  auto* stats = field->add_subcommand("stats", "describe a field");
  stats->add_option("--in", in, "input field")->required();
  stats->add_option("--h", h, "space step for CSV input");
  stats->add_option("--tau", tau, "time step for CSV input");
  stats->add_option("--report", report, "report path");
  stats->callback([&] {
    op = "field_stats";
    cfg["in"] = in;
    set_if(cfg, "h", h);
    set_if(cfg, "tau", tau);
  });

  // maximal
  auto* maximal = app.add_subcommand("maximal", "parabolic maximal functions of a field");
  std::string mop = "m", alpha = "auto", phi = "p:2", radii = "dyadic";
  maximal->add_option("--in", in, "input field")->required();
  maximal->add_option("--op", mop, "m | sharp | n")->check(CLI::IsMember({"m", "sharp", "n"}));
  maximal->add_option("--alpha", alpha, "number or auto");
  maximal->add_option("--phi", phi, "N-function for alpha = auto");
  maximal->add_option("--radii", radii, "radius family")->check(CLI::IsMember({"dyadic"}));
  maximal->add_option("--out", out, "output field");
  maximal->add_option("--report", report, "report path");
  maximal->callback([&] {
    op = "maximal";
    cfg["in"] = in;
    cfg["op"] = mop;
    cfg["alpha"] = number_or_word(alpha);
    cfg["phi"] = phi;
    if (!out.empty()) cfg["out"] = out;
  });

  // whitney
  auto* whitney = app.add_subcommand("whitney", "Whitney cover and partition of unity of a mask");
  std::string mask, weights;
  double walpha = 1.0;
  bool measure_4q = false;
  whitney->add_option("--mask", mask, "field whose nonzero nodes form the open set")->required();
  whitney->add_option("--alpha", walpha, "cylinder scaling");
  whitney->add_option("--out", out, "JSON dump of the cylinders");
  whitney->add_option("--weights", weights, "CSV of partition weights");
  whitney->add_flag("--measure-4q", measure_4q, "also measure the overlap of 4Q");
  whitney->add_option("--report", report, "report path");
  whitney->callback([&] {
    op = "whitney";
    cfg["mask"] = mask;
    cfg["alpha"] = walpha;
    cfg["measure_4q"] = measure_4q;
    if (!out.empty()) cfg["out"] = out;
    if (!weights.empty()) cfg["weights"] = weights;
  });

  // truncate
  auto* trunc = app.add_subcommand("truncate", "Lipschitz truncation with measured properties");
  std::string w, g, lambda, dump;
  trunc->add_option("--w", w, "field w")->required();
  trunc->add_option("--g", g, "flux G with dt w = div G")->required();
  trunc->add_option("--phi", phi, "N-function");
  trunc->add_option("--lambda", lambda, "number or goodlambda:<m0>")->required();
  trunc->add_option("--alpha", alpha, "number or auto");
  trunc->add_option("--seed", seed, "seed for the sampled node pairs");
  trunc->add_option("--dump-wlam", dump, "write the truncated field");
  trunc->add_option("--report", report, "report path");
  trunc->callback([&] {
    op = "truncate";
    cfg["w"] = w;
    cfg["g"] = g;
    cfg["phi"] = phi;
    cfg["lambda"] = number_or_word(lambda);
    cfg["alpha"] = number_or_word(alpha);
    cfg["seed"] = seed;
    if (!dump.empty()) cfg["dump_wlam"] = dump;
  });

  // poincare
  auto* poin = app.add_subcommand("poincare", "randomised Poincare battery");
  int battery = 100, refine = 0;
  std::string mode = "weak";
  poin->add_option("--battery", battery, "members")->check(CLI::PositiveNumber);
  poin->add_option("--seed", seed, "seed");
  poin->add_option("--mode", mode, "weak | modular")->check(CLI::IsMember({"weak", "modular"}));
  poin->add_option("--phi", phi, "N-function");
  poin->add_option("--m", m, "spatial dimension")->check(CLI::Range(1, 2));
  poin->add_option("--refine", refine, "grid refinement level")->check(CLI::Range(0, 4));
  poin->add_option("--report", report, "report path");
  poin->callback([&] {
    op = "poincare";
    cfg["battery"] = battery;
    cfg["seed"] = seed;
    cfg["mode"] = mode;
    cfg["phi"] = phi;
    cfg["m"] = m;
    cfg["refine"] = refine;
  });

  // caloric
  auto* cal = app.add_subcommand("caloric", "comparison solver and approximation experiment");
  cal->require_subcommand(1);
  std::string problem;
  std::optional<int> m0;
  std::optional<double> sigma, q, theta, tol, eps_reg;
  auto caloric_common = [&](CLI::App* sub) {
    sub->add_option("--problem", problem, "problem JSON");
    sub->add_option("--phi", phi, "N-function");
    sub->add_option("--tol", tol, "nonlinear tolerance");
    sub->add_option("--eps-reg", eps_reg, "regularisation of |grad h|");
    sub->add_option("--report", report, "report path");
  };
  auto caloric_cfg = [&] {
    if (!problem.empty()) cfg["problem"] = load_json_file(problem);
    cfg["phi"] = phi;
    set_if(cfg, "tol", tol);
    set_if(cfg, "eps_reg", eps_reg);
  };
  auto* solve = cal->add_subcommand("solve", "solve the comparison problem");
  caloric_common(solve);
  solve->add_option("--out", out, "output field h");
  solve->callback([&] {
    op = "caloric_solve";
    caloric_cfg();
    if (!out.empty()) cfg["out"] = out;
  });
  auto* exper = cal->add_subcommand("experiment", "full approximation experiment");
  caloric_common(exper);
  exper->add_option("--m0", m0, "good-lambda levels")->check(CLI::PositiveNumber);
  exper->add_option("--sigma", sigma, "sigma in (0,1)");
  exper->add_option("--q", q, "q >= 1");
  exper->add_option("--theta", theta, "theta in (0,1)");
  exper->callback([&] {
    op = "caloric_experiment";
    caloric_cfg();
    set_if(cfg, "m0", m0);
    set_if(cfg, "sigma", sigma);
    set_if(cfg, "q", q);
    set_if(cfg, "theta", theta);
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "parameter sweeps written as CSV tables");
  std::string sweep_cfg, csv;
  sweep->add_option("--config", sweep_cfg, "sweep JSON")->required();
  sweep->add_option("--csv", csv, "CSV output");
  sweep->add_option("--report", report, "report path");
  sweep->callback([&] {
    op = "sweep";
    cfg = load_json_file(sweep_cfg);
    if (!csv.empty()) cfg["csv"] = csv;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "paratrunc: " << e.what() << "\n";
    return 1;
  }
  if (threads) cfg["threads"] = *threads;
  return run(op, cfg, report);
}
