// gppl: fit, cross-validate, infer, simulate, bench and export graph operators.
//
// Exit codes: 0 ok, 1 malformed input, 2 dimension mismatch, 3 a solver did
// not converge (outputs are still written).

#include "gppl/clime.hpp"
#include "gppl/experiments.hpp"
#include "gppl/graph.hpp"
#include "gppl/inference.hpp"
#include "gppl/io.hpp"
#include "gppl/manifest.hpp"
#include "gppl/model_select.hpp"
#include "gppl/normal.hpp"
#include "gppl/simgen.hpp"
#include "gppl/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace gppl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitDimension = 2;
constexpr int kExitNonconvergence = 3;

// ---- small parsing helpers ------------------------------------------------

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw FormatError("cannot parse " + what + " value '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, const std::string& what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("cannot parse " + what + " value '" + s + "'");
  return v;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& t : split_list(s)) out.push_back(parse_double(t, what));
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& t : split_list(s)) out.push_back(static_cast<int>(parse_int(t, what)));
  return out;
}

// 1-based list on the command line, 0-based in memory.
std::vector<Index> parse_index_list(const std::string& s, Index bound, const std::string& what) {
  std::vector<Index> out;
  for (const auto& t : split_list(s)) {
    const long long v = parse_int(t, what);
    if (v < 1 || v > bound)
      throw std::out_of_range(what + " " + t + " is outside 1.." + std::to_string(bound));
    out.push_back(static_cast<Index>(v - 1));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct SigmaChoice {
  std::optional<double> known;
};

SigmaChoice parse_sigma(const std::string& s) {
  if (s == "estimate") return {};
  if (s.rfind("known:", 0) == 0) {
    const double v = parse_double(s.substr(6), "--sigma");
    if (v <= 0.0) throw std::invalid_argument("--sigma known:<v> needs v > 0");
    return {v};
  }
  throw FormatError("--sigma must be 'estimate' or 'known:<value>'");
}

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json one_based(const std::vector<Index>& idx) {
  json a = json::array();
  for (Index i : idx) a.push_back(i + 1);
  return a;
}

std::string csv_field(double x) { return format_double(x); }

// ---- config file ----------------------------------------------------------

// A JSON object whose keys are long option names ("lambda-g" or "lambda_g").
// Its entries are spliced in before the command-line flags, which therefore
// win (every option keeps its last value).
std::vector<std::string> config_arguments(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError("config " + path.string() + " must hold a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "config") continue;
    const std::string flag = "--" + name;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!joined.empty()) joined += ",";
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      args.push_back(flag);
      args.push_back(joined);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag);
      args.push_back(value.dump());
    } else {
      throw FormatError("config key '" + key + "' has an unsupported value");
    }
  }
  return args;
}

std::optional<std::string> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

// ---- shared options -------------------------------------------------------

struct Common {
  std::string out_dir = ".";
  std::string config;
  std::uint64_t seed = 1;
  bool timings = false;
};

struct DataOptions {
  std::string design;
  std::string response;
  std::string graph;
};

struct PenaltyOptions {
  std::string kind = "gppl";
  int k = 0;
};

struct SolverOptions {
  int max_iter = SolverConfig{}.max_iter;
  double eps_abs = SolverConfig{}.eps_abs;
  double eps_rel = SolverConfig{}.eps_rel;

  SolverConfig config() const {
    SolverConfig c;
    c.max_iter = max_iter;
    c.eps_abs = eps_abs;
    c.eps_rel = eps_rel;
    c.validate();
    return c;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out-dir", c.out_dir, "Output directory (created if missing)");
  app->add_option("--config", c.config, "JSON file of option values; flags override it");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_flag("--timings", c.timings, "Record wall-clock timings in manifest.json");
}

void add_data(CLI::App* app, DataOptions& d) {
  app->add_option("--design", d.design, "Design matrix X (CSV)");
  app->add_option("--response", d.response, "Response y (CSV, one column)");
  app->add_option("--graph", d.graph, "Edge list (\"n <count>\" header, 1-based pairs)");
}

void add_penalty(CLI::App* app, PenaltyOptions& p) {
  app->add_option("--kind", p.kind, "gppl, lasso, smooth, spline, graph-smooth or graph-spline");
  app->add_option("--k", p.k, "Operator order (gppl)");
}

void add_solver(CLI::App* app, SolverOptions& s) {
  app->add_option("--max-iter", s.max_iter, "ADMM iteration budget");
  app->add_option("--eps-abs", s.eps_abs, "ADMM absolute tolerance");
  app->add_option("--eps-rel", s.eps_rel, "ADMM relative tolerance");
}

struct LoadedData {
  std::optional<RegressionProblem> problem;
  std::optional<UndirectedGraph> graph;
};

LoadedData load_data(const DataOptions& d, PenaltyKind kind, RunManifest& m) {
  if (d.design.empty()) throw std::invalid_argument("--design is required");
  if (d.response.empty()) throw std::invalid_argument("--response is required");
  LoadedData out;
  Matrix X = read_csv_matrix(d.design);
  Vector y = read_csv_vector(d.response);
  m.add_input(d.design);
  m.add_input(d.response);
  out.problem.emplace(std::move(X), std::move(y));
  if (!d.graph.empty()) {
    out.graph = read_edge_list(d.graph);
    m.add_input(d.graph);
    if (out.graph->num_nodes() != out.problem->features())
      throw DimensionError("graph has " + std::to_string(out.graph->num_nodes()) + " nodes but X has " +
                           std::to_string(out.problem->features()) + " columns");
  } else if (needs_graph(kind)) {
    throw std::invalid_argument("--graph is required for kind " + std::string(to_string(kind)));
  }
  return out;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void prepare_out_dir(const Common& c, RunManifest& m, const std::string& command) {
  fs::create_directories(c.out_dir);
  m.command = command;
  m.config_path = c.config;
  m.seeds = {c.seed};
}

void emit(const Common& c, RunManifest& m, const std::string& name, const std::string& text) {
  write_file(fs::path(c.out_dir) / name, text);
  m.add_output(c.out_dir, name);
}

void emit_json(const Common& c, RunManifest& m, const std::string& name, const json& j) {
  emit(c, m, name, j.dump(2) + "\n");
}

void emit_vector(const Common& c, RunManifest& m, const std::string& name, const Vector& v,
                 const std::string& header) {
  write_csv(fs::path(c.out_dir) / name, v, header);
  m.add_output(c.out_dir, name);
}

json fit_json(const FitResult& fit, const PenaltySpec& spec) {
  json j;
  j["kind"] = std::string(to_string(spec.kind));
  j["lambda"] = spec.lambda;
  j["lambda_g"] = spec.lambda_g;
  j["k"] = spec.k;
  j["beta"] = to_json(fit.beta_hat);
  j["objective"] = fit.objective;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["primal_residual"] = fit.primal_residual;
  j["dual_residual"] = fit.dual_residual;
  j["s1"] = fit.support_s1.size();
  j["s2"] = fit.support_s2.size();
  j["support_threshold"] = fit.support_threshold;
  j["support_s1"] = one_based(fit.support_s1);
  j["support_s2"] = one_based(fit.support_s2);
  return j;
}

FitResult run_fit(const LoadedData& data, const PenaltySpec& spec, const SolverConfig& cfg) {
  if (data.graph) return fit(*data.problem, *data.graph, spec, cfg);
  return fit(*data.problem, spec, cfg);
}

void finish(const Common& c, RunManifest& m, Clock::time_point t0) {
  if (c.timings) m.timings["total"] = seconds_since(t0);
  write_manifest(c.out_dir, m);
}

// ---- fit ------------------------------------------------------------------

struct FitOptions {
  Common common;
  DataOptions data;
  PenaltyOptions penalty;
  SolverOptions solver;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double lambda_g = 0.0;
};

int cmd_fit(const FitOptions& o) {
  const auto t0 = Clock::now();
  RunManifest m;
  const PenaltyKind kind = parse_penalty_kind(o.penalty.kind);
  if (std::isnan(o.lambda)) throw std::invalid_argument("--lambda is required");
  const PenaltySpec spec{kind, o.lambda, o.lambda_g, o.penalty.k};
  spec.validate();
  const SolverConfig cfg = o.solver.config();
  const LoadedData data = load_data(o.data, kind, m);
  prepare_out_dir(o.common, m, "fit");

  const FitResult res = run_fit(data, spec, cfg);
  m.parameters = {{"kind", o.penalty.kind}, {"k", o.penalty.k}, {"lambda", o.lambda},
                  {"lambda_g", o.lambda_g}, {"max_iter", cfg.max_iter}, {"eps_abs", cfg.eps_abs},
                  {"eps_rel", cfg.eps_rel}};
  emit_vector(o.common, m, "beta.csv", res.beta_hat, "beta");
  emit_json(o.common, m, "fit.json", fit_json(res, spec));
  finish(o.common, m, t0);
  if (!res.converged) {
    std::cerr << "gppl fit: ADMM did not converge in " << res.iterations << " iterations\n";
    return kExitNonconvergence;
  }
  return kExitOk;
}

// ---- cv -------------------------------------------------------------------

struct CvOptions {
  Common common;
  DataOptions data;
  PenaltyOptions penalty;
  SolverOptions solver;
  int folds = 5;
  std::string lambda_grid;
  int lambda_count = 50;
  double lambda_ratio = 1e-4;
  std::string gamma_grid = "0,0.1,0.5,1,2,5";
  std::string k_candidates;
};

int cmd_cv(const CvOptions& o) {
  const auto t0 = Clock::now();
  RunManifest m;
  const PenaltyKind kind = parse_penalty_kind(o.penalty.kind);
  const LoadedData data = load_data(o.data, kind, m);
  prepare_out_dir(o.common, m, "cv");

  CVConfig cv;
  cv.folds = o.folds;
  cv.seed = o.common.seed;
  cv.solver = o.solver.config();
  cv.lambda_grid = o.lambda_grid.empty()
                       ? default_lambda_grid(*data.problem, o.lambda_count, o.lambda_ratio)
                       : parse_double_list(o.lambda_grid, "--lambda-grid");
  cv.gamma_grid = parse_double_list(o.gamma_grid, "--gamma-grid");
  cv.k_candidates = o.k_candidates.empty() ? std::vector<int>{o.penalty.k}
                                           : parse_int_list(o.k_candidates, "--k-candidates");
  const CVResult res = cross_validate(*data.problem, data.graph ? &*data.graph : nullptr, kind, cv);

  json j;
  j["kind"] = o.penalty.kind;
  j["seed"] = res.seed;
  j["folds"] = res.folds;
  j["lambda_grid"] = res.lambda_grid;
  j["gamma_grid"] = res.gamma_grid;
  j["k_candidates"] = res.k_candidates;
  j["best"] = {{"lambda", res.best.lambda}, {"gamma", res.best.gamma},
               {"lambda_g", res.best.lambda_g}, {"k", res.best.k}};
  j["best_error"] = res.best_error;
  json members = json::array();
  for (const auto& f : res.fold_members) {
    std::vector<Index> v(f.begin(), f.end());
    members.push_back(one_based(v));
  }
  j["fold_members"] = members;
  // mean_errors[k][gamma][lambda], fold_errors[k][gamma][lambda][fold]
  json mean = json::array(), per_fold = json::array();
  for (std::size_t ki = 0; ki < res.k_candidates.size(); ++ki) {
    json mk = json::array(), fk = json::array();
    for (std::size_t gi = 0; gi < res.gamma_grid.size(); ++gi) {
      json mg = json::array(), fg = json::array();
      for (std::size_t li = 0; li < res.lambda_grid.size(); ++li) {
        mg.push_back(res.mean_error(ki, gi, li));
        json fl = json::array();
        for (int f = 0; f < res.folds; ++f) fl.push_back(res.fold_error(ki, gi, li, static_cast<std::size_t>(f)));
        fg.push_back(fl);
      }
      mk.push_back(mg);
      fk.push_back(fg);
    }
    mean.push_back(mk);
    per_fold.push_back(fk);
  }
  j["mean_errors"] = mean;
  j["fold_errors"] = per_fold;
  j["nonconverged_fits"] = res.nonconverged_fits;
  const PenaltySpec spec{kind, res.best.lambda, res.best.lambda_g, res.best.k};
  j["refit"] = fit_json(res.refit, spec);

  m.parameters = {{"kind", o.penalty.kind}, {"folds", o.folds}, {"lambda_grid", res.lambda_grid},
                  {"gamma_grid", res.gamma_grid}, {"k_candidates", res.k_candidates}};
  emit_json(o.common, m, "cv.json", j);
  emit_vector(o.common, m, "beta.csv", res.refit.beta_hat, "beta");
  finish(o.common, m, t0);
  if (!res.refit.converged) {
    std::cerr << "gppl cv: refit did not converge\n";
    return kExitNonconvergence;
  }
  return kExitOk;
}

// ---- infer ----------------------------------------------------------------

struct InferOptions {
  Common common;
  DataOptions data;
  PenaltyOptions penalty;
  SolverOptions solver;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double lambda_g = 0.0;
  std::string beta;
  double mu = std::numeric_limits<double>::quiet_NaN();
  double mu_c = 0.05;
  double alpha = 0.05;
  std::string sigma = "estimate";
  std::string coordinates;
  std::string test_coordinates;
  std::string test_edges;
  std::string clime_method = "auto";
  std::string perturbation = "auto";
  std::string theta_format = "csv";
};

double resolve_perturbation(const std::string& s, const Matrix& sigma_N, Index samples) {
  if (s == "auto") return samples < sigma_N.rows() ? clime_default_perturbation(sigma_N, samples) : 0.0;
  if (s == "default") return clime_default_perturbation(sigma_N, samples);
  const double v = parse_double(s, "--perturbation");
  if (v < 0.0) throw std::invalid_argument("--perturbation must be non-negative");
  return v;
}

int cmd_infer(const InferOptions& o) {
  const auto t0 = Clock::now();
  RunManifest m;
  const PenaltyKind kind = parse_penalty_kind(o.penalty.kind);
  const SigmaChoice sigma = parse_sigma(o.sigma);
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw std::invalid_argument("--alpha must lie in (0, 1)");
  if (o.theta_format != "csv" && o.theta_format != "mtx" && o.theta_format != "both")
    throw FormatError("--theta-format must be csv, mtx or both");
  const ClimeMethod method = parse_clime_method(o.clime_method);
  const LoadedData data = load_data(o.data, kind, m);
  const RegressionProblem& problem = *data.problem;
  const Index n = problem.features();
  const Index N = problem.samples();
  prepare_out_dir(o.common, m, "infer");
  bool converged = true;

  Vector beta_hat;
  std::optional<FitResult> fitted;
  std::optional<PenaltySpec> spec;
  if (!o.beta.empty()) {
    beta_hat = read_csv_vector(o.beta);
    m.add_input(o.beta);
    if (beta_hat.size() != n) throw DimensionError("--beta has the wrong length");
  } else {
    if (std::isnan(o.lambda)) throw std::invalid_argument("infer needs --beta or --lambda");
    spec = PenaltySpec{kind, o.lambda, o.lambda_g, o.penalty.k};
    spec->validate();
    fitted = run_fit(data, *spec, o.solver.config());
    beta_hat = fitted->beta_hat;
    converged = converged && fitted->converged;
  }

  std::vector<Index> rows;
  if (!o.coordinates.empty()) rows = parse_index_list(o.coordinates, n, "coordinate");
  std::vector<Index> tested_edges;
  if (!o.test_edges.empty()) {
    if (!data.graph) throw std::invalid_argument("--test-edges needs --graph");
    tested_edges = parse_index_list(o.test_edges, data.graph->num_edges(), "edge");
    if (!rows.empty()) {
      for (Index e : tested_edges) {
        rows.push_back(data.graph->edge(e).u);
        rows.push_back(data.graph->edge(e).v);
      }
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    }
  }

  const Matrix sigma_N = problem.X().transpose() * problem.X() / static_cast<double>(N);
  ClimeConfig cc;
  cc.method = method;
  cc.strict = false;
  cc.perturbation = resolve_perturbation(o.perturbation, sigma_N, N);
  const double mu = std::isnan(o.mu) ? clime_default_mu(o.mu_c, n, N) : o.mu;
  const auto tc = Clock::now();
  const PrecisionSurrogate theta = clime_fit(sigma_N, mu, cc, rows);
  if (o.common.timings) m.timings["clime"] = seconds_since(tc);
  converged = converged && theta.converged();

  const InferenceReport rep = infer(problem, beta_hat, theta, sigma.known, o.alpha);

  json ij;
  ij["coordinates"] = one_based(rep.coordinates);
  ij["beta_tilde"] = to_json(rep.beta_tilde);
  ij["variance"] = to_json(rep.variance);
  ij["se"] = to_json(rep.se);
  json iv = json::array();
  for (Index r = 0; r < rep.intervals.rows(); ++r) iv.push_back({rep.intervals(r, 0), rep.intervals(r, 1)});
  ij["intervals"] = iv;
  ij["defined"] = rep.defined;
  ij["alpha"] = rep.alpha;
  ij["sigma_used"] = rep.sigma_used;
  ij["sigma_is_estimated"] = rep.sigma_is_estimated;
  ij["samples"] = rep.samples;

  json tests = json::array();
  auto record = [&](const TestResult& t) {
    tests.push_back({{"kind", std::string(to_string(t.kind))}, {"target", t.target + 1},
                     {"statistic", t.statistic}, {"p_value", t.p_value}, {"reject", t.reject}});
  };
  const std::vector<Index> coord_tests =
      o.test_coordinates.empty() ? rep.coordinates : parse_index_list(o.test_coordinates, n, "coordinate");
  for (Index j : coord_tests) {
    const auto pos = rep.position(j);
    if (!pos) throw std::out_of_range("coordinate " + std::to_string(j + 1) + " was not solved");
    if (!rep.defined[static_cast<std::size_t>(*pos)]) continue;
    record(test_coordinate(rep, j));
  }
  for (Index e : tested_edges) record(test_edge(rep, theta, sigma_N, *data.graph, e));

  json cj;
  cj["rows"] = one_based(theta.rows);
  cj["mu"] = theta.mu;
  cj["perturbation"] = theta.perturbation;
  cj["feasibility"] = theta.feasibility;
  cj["raw_feasibility"] = theta.raw_feasibility;
  cj["l1_norms"] = to_json(theta.l1_norms);
  cj["iterations"] = theta.iterations;
  json methods = json::array();
  for (auto mm : theta.methods) methods.push_back(std::string(to_string(mm)));
  cj["methods"] = methods;
  cj["failed_rows"] = one_based(theta.failed_rows);
  cj["converged"] = theta.converged();

  m.parameters = {{"mu", mu}, {"alpha", o.alpha}, {"sigma", o.sigma},
                  {"clime_method", o.clime_method}, {"perturbation", theta.perturbation}};
  if (spec) {
    m.parameters["kind"] = o.penalty.kind;
    m.parameters["k"] = o.penalty.k;
    m.parameters["lambda"] = o.lambda;
    m.parameters["lambda_g"] = o.lambda_g;
    emit_vector(o.common, m, "beta.csv", beta_hat, "beta");
    emit_json(o.common, m, "fit.json", fit_json(*fitted, *spec));
  }
  emit_json(o.common, m, "inference.json", ij);
  emit_json(o.common, m, "tests.json", tests);
  emit_json(o.common, m, "clime.json", cj);
  if (o.theta_format != "mtx") {
    write_csv(fs::path(o.common.out_dir) / "theta.csv", theta.theta_hat);
    m.add_output(o.common.out_dir, "theta.csv");
  }
  if (o.theta_format != "csv") {
    write_matrix_market(fs::path(o.common.out_dir) / "theta.mtx", theta.theta_hat);
    m.add_output(o.common.out_dir, "theta.mtx");
  }
  finish(o.common, m, t0);
  if (!converged) {
    std::cerr << "gppl infer: a solver did not converge (see fit.json / clime.json)\n";
    return kExitNonconvergence;
  }
  return kExitOk;
}

// ---- simulate -------------------------------------------------------------

struct SimulateOptions {
  Common common;
  std::string family = "path";
  int scenario = 1;
  long long samples = 200;
  double sigma_eps = kDefaultSigmaEps;
};

int cmd_simulate(const SimulateOptions& o) {
  const auto t0 = Clock::now();
  RunManifest m;
  const ScenarioSpec spec{parse_family(o.family), o.scenario, static_cast<Index>(o.samples), o.sigma_eps,
                          o.common.seed};
  spec.validate();
  prepare_out_dir(o.common, m, "simulate");
  const SyntheticDataset d = make_dataset(spec);

  write_csv(fs::path(o.common.out_dir) / "X.csv", d.problem.X());
  m.add_output(o.common.out_dir, "X.csv");
  emit_vector(o.common, m, "y.csv", d.problem.y(), "y");
  emit_vector(o.common, m, "beta_star.csv", d.beta_star, "beta_star");
  write_edge_list(fs::path(o.common.out_dir) / "graph.edges", d.graph);
  m.add_output(o.common.out_dir, "graph.edges");

  m.parameters = {{"family", std::string(to_string(spec.family))},
                  {"scenario", spec.scenario},
                  {"samples", spec.samples},
                  {"features", d.problem.features()},
                  {"edges", d.graph.num_edges()},
                  {"sigma_eps", spec.sigma_eps}};
  const int k = scenario_order(spec.scenario);
  if (k >= 0) {
    const StructureCounts sc = structure_counts(d.beta_star, build_diff_operator(d.graph, k));
    m.parameters["k"] = k;
    m.parameters["s1"] = sc.s1;
    m.parameters["s2"] = sc.s2;
  }
  finish(o.common, m, t0);
  return kExitOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchOptions {
  Common common;
  std::string study = "error";
  std::string family = "path";
  int scenario = 1;
  long long samples = 200;
  std::string methods = "gppl";
  int reps = -1;
  double sigma_eps = kDefaultSigmaEps;
  int lambda_count = 50;
  double lambda_ratio = 1e-4;
  std::string gamma_grid = "0,0.1,0.5,1,2,5";
  int folds = 5;
  double mu_c = 0.05;
  double mu_c_estimated = 0.08;
  double alpha = 0.05;
  long long coordinate = 1;
  long long edge = 1;
  std::string perturbation = "default";
  std::string clime_method = "auto";
};

TuningGrid tuning_grid(const BenchOptions& o) {
  TuningGrid g;
  g.lambda_count = o.lambda_count;
  g.lambda_ratio = o.lambda_ratio;
  g.gamma_grid = parse_double_list(o.gamma_grid, "--gamma-grid");
  g.folds = o.folds;
  return g;
}

int bench_error(const BenchOptions& o, RunManifest& m) {
  const int reps = o.reps < 0 ? 20 : o.reps;
  std::ostringstream table, detail;
  table << "family,scenario,samples,method,reps,mean_l2_error,se\n";
  detail << "method,rep,seed,l2_error,lambda,gamma,lambda_g,k,s1,s2,converged,nonconverged_cv_fits\n";
  bool converged = true;
  json methods = json::array();
  for (const auto& name : split_list(o.methods)) {
    BenchCell cell;
    cell.family = parse_family(o.family);
    cell.scenario = o.scenario;
    cell.samples = static_cast<Index>(o.samples);
    cell.method = parse_penalty_kind(name);
    cell.reps = reps;
    cell.seed = o.common.seed;
    cell.sigma_eps = o.sigma_eps;
    cell.tuning = tuning_grid(o);
    const auto tc = Clock::now();
    const BenchResult r = run_bench_cell(cell);
    if (o.common.timings) m.timings[name] = seconds_since(tc);
    table << to_string(cell.family) << ',' << cell.scenario << ',' << cell.samples << ',' << name << ','
          << cell.reps << ',' << csv_field(r.mean) << ',' << csv_field(r.se) << '\n';
    for (const auto& rep : r.reps) {
      converged = converged && rep.converged;
      detail << name << ',' << rep.rep << ',' << rep.seed << ',' << csv_field(rep.l2_error) << ','
             << csv_field(rep.tuning.lambda) << ',' << csv_field(rep.tuning.gamma) << ','
             << csv_field(rep.tuning.lambda_g) << ',' << rep.tuning.k << ',' << rep.s1 << ',' << rep.s2 << ','
             << (rep.converged ? 1 : 0) << ',' << rep.nonconverged_cv_fits << '\n';
    }
    methods.push_back(name);
  }
  m.parameters = {{"study", "error"}, {"family", o.family}, {"scenario", o.scenario},
                  {"samples", o.samples}, {"methods", methods}, {"reps", reps},
                  {"sigma_eps", o.sigma_eps}, {"lambda_count", o.lambda_count},
                  {"lambda_ratio", o.lambda_ratio}, {"gamma_grid", o.gamma_grid}, {"folds", o.folds}};
  emit(o.common, m, "bench.csv", table.str());
  emit(o.common, m, "bench_reps.csv", detail.str());
  return converged ? kExitOk : kExitNonconvergence;
}

int bench_inference(const BenchOptions& o, RunManifest& m) {
  InferenceStudyConfig c;
  c.family = parse_family(o.family);
  c.scenario = o.scenario;
  c.samples = static_cast<Index>(o.samples);
  c.trials = o.reps < 0 ? 200 : o.reps;
  c.seed = o.common.seed;
  c.sigma_eps = o.sigma_eps;
  c.mu_c_known = o.mu_c;
  c.mu_c_estimated = o.mu_c_estimated;
  c.alpha = o.alpha;
  c.coordinate = static_cast<Index>(o.coordinate - 1);
  c.edge = static_cast<Index>(o.edge - 1);
  c.perturbation = o.perturbation == "default" ? std::numeric_limits<double>::quiet_NaN()
                                               : parse_double(o.perturbation, "--perturbation");
  c.tuning = tuning_grid(o);
  c.clime.method = parse_clime_method(o.clime_method);
  c.clime.strict = false;
  const InferenceStudyResult r = run_inference_study(c);

  const std::size_t T = r.trials.size();
  std::vector<double> zk, ze;
  for (const auto& t : r.trials) {
    zk.push_back(t.z_known);
    ze.push_back(t.z_estimated);
  }
  std::sort(zk.begin(), zk.end());
  std::sort(ze.begin(), ze.end());
  std::ostringstream qq, cov;
  qq << "rank,theoretical,z_known,z_estimated\n";
  for (std::size_t i = 0; i < T; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(T);
    qq << i + 1 << ',' << csv_field(normal_quantile(p)) << ',' << csv_field(zk[i]) << ',' << csv_field(ze[i])
       << '\n';
  }
  cov << "trial,beta_tilde_known,lo_known,hi_known,covered_known,beta_tilde_estimated,lo_estimated,"
         "hi_estimated,covered_estimated,sigma_hat,edge_statistic,edge_p_value,edge_reject\n";
  for (const auto& t : r.trials) {
    cov << t.trial << ',' << csv_field(t.beta_tilde_known) << ',' << csv_field(t.lo_known) << ','
        << csv_field(t.hi_known) << ',' << (t.covered_known ? 1 : 0) << ',' << csv_field(t.beta_tilde_estimated)
        << ',' << csv_field(t.lo_estimated) << ',' << csv_field(t.hi_estimated) << ','
        << (t.covered_estimated ? 1 : 0) << ',' << csv_field(t.sigma_hat) << ','
        << csv_field(t.edge_test.statistic) << ',' << csv_field(t.edge_test.p_value) << ','
        << (t.edge_test.reject ? 1 : 0) << '\n';
  }
  json s;
  s["trials"] = T;
  s["beta_star_coordinate"] = r.beta_star_coordinate;
  s["tuning"] = {{"lambda", r.tuning.lambda}, {"gamma", r.tuning.gamma}, {"lambda_g", r.tuning.lambda_g},
                 {"k", r.tuning.k}};
  s["mu_known"] = r.mu_known;
  s["mu_estimated"] = r.mu_estimated;
  s["perturbation"] = r.perturbation;
  s["feasibility_known"] = r.feasibility_known;
  s["feasibility_estimated"] = r.feasibility_estimated;
  s["coverage_known"] = r.coverage_known;
  s["coverage_estimated"] = r.coverage_estimated;
  s["type1_error"] = r.type1_error;
  s["ks_known"] = {{"statistic", r.ks_known.statistic}, {"p_value", r.ks_known.p_value}};
  s["ks_estimated"] = {{"statistic", r.ks_estimated.statistic}, {"p_value", r.ks_estimated.p_value}};
  s["max_decomposition_error"] = r.max_decomposition_error;
  s["bias_bound_holds"] = r.bias_bound_holds;

  m.parameters = {{"study", "inference"}, {"family", o.family}, {"scenario", o.scenario},
                  {"samples", o.samples}, {"trials", c.trials}, {"sigma_eps", o.sigma_eps},
                  {"mu_c", o.mu_c}, {"mu_c_estimated", o.mu_c_estimated}, {"alpha", o.alpha},
                  {"coordinate", o.coordinate}, {"edge", o.edge}, {"perturbation", r.perturbation},
                  {"lambda_count", o.lambda_count}, {"lambda_ratio", o.lambda_ratio},
                  {"gamma_grid", o.gamma_grid}, {"folds", o.folds}};
  emit(o.common, m, "qq.csv", qq.str());
  emit(o.common, m, "coverage.csv", cov.str());
  emit_json(o.common, m, "inference_study.json", s);
  return kExitOk;
}

int cmd_bench(const BenchOptions& o) {
  const auto t0 = Clock::now();
  RunManifest m;
  if (o.reps >= 0 && o.reps < 2) throw std::invalid_argument("--reps must be at least 2");
  prepare_out_dir(o.common, m, "bench");
  int code = kExitOk;
  if (o.study == "error")
    code = bench_error(o, m);
  else if (o.study == "inference")
    code = bench_inference(o, m);
  else
    throw FormatError("--study must be 'error' or 'inference'");
  finish(o.common, m, t0);
  return code;
}

// ---- graph ----------------------------------------------------------------

struct GraphOptions {
  Common common;
  std::string graph;
  std::string family;
  int k = 0;
};

int cmd_graph(const GraphOptions& o) {
  const auto t0 = Clock::now();
  RunManifest m;
  if (o.graph.empty() == o.family.empty()) throw std::invalid_argument("give exactly one of --graph and --family");
  if (o.k < 0) throw std::invalid_argument("--k must be non-negative");
  UndirectedGraph g;
  if (!o.graph.empty()) {
    g = read_edge_list(o.graph);
    m.add_input(o.graph);
  } else {
    g = family_graph(parse_family(o.family));
  }
  prepare_out_dir(o.common, m, "graph");
  const DiffOperator op = build_diff_operator(g, o.k);
  write_matrix_market(fs::path(o.common.out_dir) / "operator.mtx", op.matrix);
  m.add_output(o.common.out_dir, "operator.mtx");
  write_matrix_market(fs::path(o.common.out_dir) / "incidence.mtx", build_incidence(g));
  m.add_output(o.common.out_dir, "incidence.mtx");
  write_matrix_market(fs::path(o.common.out_dir) / "laplacian.mtx", build_laplacian(g));
  m.add_output(o.common.out_dir, "laplacian.mtx");
  json j;
  j["nodes"] = g.num_nodes();
  j["edges"] = g.num_edges();
  j["max_degree"] = g.max_degree();
  j["k"] = o.k;
  j["operator_rows"] = op.rows();
  j["operator_cols"] = op.cols();
  j["operator_nonzeros"] = op.matrix.nonZeros();
  j["components"] = connected_components(g).size();
  emit_json(o.common, m, "graph.json", j);
  m.parameters = {{"k", o.k}, {"family", o.family}};
  finish(o.common, m, t0);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (auto cfg = find_config(args); cfg && !args.empty() && args[0].rfind("-", 0) != 0) {
      std::vector<std::string> extra = config_arguments(*cfg);
      args.insert(args.begin() + 1, extra.begin(), extra.end());
    }
  } catch (const std::exception& e) {
    std::cerr << "gppl: " << e.what() << "\n";
    return kExitInput;
  }

  CLI::App app{"Graph piecewise-polynomial lasso: estimation, cross-validation and inference"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  FitOptions fo;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one penalized regression");
  add_common(fit_cmd, fo.common);
  add_data(fit_cmd, fo.data);
  add_penalty(fit_cmd, fo.penalty);
  add_solver(fit_cmd, fo.solver);
  fit_cmd->add_option("--lambda", fo.lambda, "l1 weight on beta (lambda_1 for ridge kinds)");
  fit_cmd->add_option("--lambda-g", fo.lambda_g, "Weight on the operator term (lambda_2 for ridge kinds)");

  CvOptions co;
  auto* cv_cmd = app.add_subcommand("cv", "K-fold cross-validation over lambda, gamma and k");
  add_common(cv_cmd, co.common);
  add_data(cv_cmd, co.data);
  add_penalty(cv_cmd, co.penalty);
  add_solver(cv_cmd, co.solver);
  cv_cmd->add_option("--folds", co.folds, "Number of folds");
  cv_cmd->add_option("--lambda-grid", co.lambda_grid, "Comma-separated lambda values (overrides count/ratio)");
  cv_cmd->add_option("--lambda-count", co.lambda_count, "Size of the default log-spaced lambda grid");
  cv_cmd->add_option("--lambda-ratio", co.lambda_ratio, "lambda_min / lambda_max of the default grid");
  cv_cmd->add_option("--gamma-grid", co.gamma_grid, "Comma-separated ratios lambda_g / lambda");
  cv_cmd->add_option("--k-candidates", co.k_candidates, "Comma-separated operator orders (default: --k)");

  InferOptions io;
  auto* infer_cmd = app.add_subcommand("infer", "De-biased estimates, intervals and tests");
  add_common(infer_cmd, io.common);
  add_data(infer_cmd, io.data);
  add_penalty(infer_cmd, io.penalty);
  add_solver(infer_cmd, io.solver);
  infer_cmd->add_option("--lambda", io.lambda, "Fit beta_hat with this lambda");
  infer_cmd->add_option("--lambda-g", io.lambda_g, "lambda_g for the fit");
  infer_cmd->add_option("--beta", io.beta, "Use this beta_hat (CSV) instead of fitting");
  infer_cmd->add_option("--mu", io.mu, "CLIME constraint level (default mu-c * sqrt(log n / N))");
  infer_cmd->add_option("--mu-c", io.mu_c, "Constant in the default mu");
  infer_cmd->add_option("--alpha", io.alpha, "Level of the intervals and tests");
  infer_cmd->add_option("--sigma", io.sigma, "known:<value> or estimate");
  infer_cmd->add_option("--coordinates", io.coordinates, "1-based coordinates to solve (default: all)");
  infer_cmd->add_option("--test-coordinates", io.test_coordinates, "1-based coordinates to test (default: all solved)");
  infer_cmd->add_option("--test-edges", io.test_edges, "1-based edge indices to test for equal endpoints");
  infer_cmd->add_option("--clime-method", io.clime_method, "auto, admm or interior-point");
  infer_cmd->add_option("--perturbation", io.perturbation,
                        "Diagonal loading for CLIME: auto (only when N < n), default, or a value");
  infer_cmd->add_option("--theta-format", io.theta_format, "csv, mtx or both");

  SimulateOptions so;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a synthetic scenario to disk");
  add_common(sim_cmd, so.common);
  sim_cmd->add_option("--family", so.family, "path or grid");
  sim_cmd->add_option("--scenario", so.scenario, "1 to 4");
  sim_cmd->add_option("--samples", so.samples, "Number of rows N");
  sim_cmd->add_option("--sigma-eps", so.sigma_eps, "Noise standard deviation");

  BenchOptions bo;
  auto* bench_cmd = app.add_subcommand("bench", "Monte-Carlo error table or inference study");
  add_common(bench_cmd, bo.common);
  bench_cmd->add_option("--study", bo.study, "error or inference");
  bench_cmd->add_option("--family", bo.family, "path or grid");
  bench_cmd->add_option("--scenario", bo.scenario, "1 to 4");
  bench_cmd->add_option("--samples", bo.samples, "Number of rows N");
  bench_cmd->add_option("--method,--kind", bo.methods, "Comma-separated penalty kinds (error study)");
  bench_cmd->add_option("--reps", bo.reps, "Repetitions (default 20) or trials (default 200)");
  bench_cmd->add_option("--sigma-eps", bo.sigma_eps, "Noise standard deviation");
  bench_cmd->add_option("--lambda-count", bo.lambda_count, "Size of the lambda grid");
  bench_cmd->add_option("--lambda-ratio", bo.lambda_ratio, "lambda_min / lambda_max");
  bench_cmd->add_option("--gamma-grid", bo.gamma_grid, "Comma-separated ratios lambda_g / lambda");
  bench_cmd->add_option("--folds", bo.folds, "Cross-validation folds");
  bench_cmd->add_option("--mu-c", bo.mu_c, "CLIME constant for the known-sigma intervals");
  bench_cmd->add_option("--mu-c-estimated", bo.mu_c_estimated, "CLIME constant for the estimated-sigma intervals");
  bench_cmd->add_option("--alpha", bo.alpha, "Level of the intervals and the edge test");
  bench_cmd->add_option("--coordinate", bo.coordinate, "1-based coordinate whose interval is tracked");
  bench_cmd->add_option("--edge", bo.edge, "1-based edge tested for equal endpoints");
  bench_cmd->add_option("--perturbation", bo.perturbation, "default or a value");
  bench_cmd->add_option("--clime-method", bo.clime_method, "auto, admm or interior-point");

  GraphOptions go;
  auto* graph_cmd = app.add_subcommand("graph", "Export difference operators in MatrixMarket format");
  add_common(graph_cmd, go.common);
  graph_cmd->add_option("--graph", go.graph, "Edge list");
  graph_cmd->add_option("--family", go.family, "path or grid, instead of --graph");
  graph_cmd->add_option("--k", go.k, "Operator order");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fo);
    if (cv_cmd->parsed()) return cmd_cv(co);
    if (infer_cmd->parsed()) return cmd_infer(io);
    if (sim_cmd->parsed()) return cmd_simulate(so);
    if (bench_cmd->parsed()) return cmd_bench(bo);
    if (graph_cmd->parsed()) return cmd_graph(go);
  } catch (const DimensionError& e) {
    std::cerr << "gppl: dimension mismatch: " << e.what() << "\n";
    return kExitDimension;
  } catch (const ConvergenceError& e) {
    std::cerr << "gppl: " << e.what() << "\n";
    return kExitNonconvergence;
  } catch (const std::exception& e) {
    std::cerr << "gppl: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
