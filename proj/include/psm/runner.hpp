#pragma once

#include "psm/basis.hpp"
#include "psm/io.hpp"
#include "psm/loss.hpp"
#include "psm/problems.hpp"
#include "psm/solvers.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace psm {

inline const std::vector<std::string>& solver_names() {
  static const std::vector<std::string> names{"ad", "gf-implicit-euler", "quasi-newton", "newton"};
  return names;
}

/// Unset optionals fall back to the problem defaults.
struct RunConfig {
  std::string problem;
  std::optional<std::string> solver;
  std::optional<int> n_domain;
  std::optional<int> n_boundary;
  std::optional<std::string> pde_norm;
  std::string bnd_norm = "l2";
  std::optional<double> tau;
  int max_iters = 20000;
  double tol = 1e-12;
  /// Uniform evaluation points per axis; 0 picks 100 (2D) or 20 (4D).
  int eval_points = 0;
  std::string output_dir;  ///< where surrogates go; empty disables saving
  std::string records;     ///< JSON-lines file to append to; empty disables
  std::string csv;         ///< companion CSV; empty disables
  std::uint64_t seed = 0;  ///< only used for generated test vectors
  bool quiet = false;
};

struct FieldErrors {
  double eps1 = 0.0;
  double eps_inf = 0.0;
};

struct ResultRecord {
  json config;
  std::string problem;
  std::string solver;
  int n_domain = 0;
  int n_boundary = 0;
  std::string pde_norm;
  double eps1 = 0.0;
  double eps_inf = 0.0;
  std::size_t eval_n = 0;
  std::map<std::string, FieldErrors> field_errors;
  std::map<std::string, double> params;
  std::map<std::string, double> eps_param;
  double final_loss = 0.0;
  int iterations = 0;
  double seconds = 0.0;
  std::optional<double> min_eigenvalue;
  std::optional<double> condition_estimate;
  bool converged = false;
  bool non_unique = false;
  std::string message;
  std::map<std::string, std::string> surrogate_files;
};

inline json config_to_json(const RunConfig& c) {
  json j{{"problem", c.problem},   {"bnd-norm", c.bnd_norm},     {"max-iters", c.max_iters}, {"tol", c.tol},
         {"eval-points", c.eval_points}, {"output-dir", c.output_dir}, {"records", c.records},     {"csv", c.csv},
         {"seed", c.seed}};
  if (c.solver) j["solver"] = *c.solver;
  if (c.n_domain) j["n-domain"] = *c.n_domain;
  if (c.n_boundary) j["n-boundary"] = *c.n_boundary;
  if (c.pde_norm) j["pde-norm"] = *c.pde_norm;
  if (c.tau) j["tau"] = *c.tau;
  return j;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  is >> out;
  if (is.fail() || !(is >> std::ws).eof()) throw std::invalid_argument("config key '" + key + "': bad value '" + v + "'");
  return out;
}

}  // namespace detail

/// Sets one kebab-case key. Unknown keys are usage errors.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "problem") c.problem = value;
  else if (key == "solver") c.solver = value;
  else if (key == "n-domain") c.n_domain = parse_number<int>(key, value);
  else if (key == "n-boundary") c.n_boundary = parse_number<int>(key, value);
  else if (key == "pde-norm") c.pde_norm = value;
  else if (key == "bnd-norm") c.bnd_norm = value;
  else if (key == "tau") c.tau = parse_number<double>(key, value);
  else if (key == "max-iters") c.max_iters = parse_number<int>(key, value);
  else if (key == "tol") c.tol = parse_number<double>(key, value);
  else if (key == "eval-points") c.eval_points = parse_number<int>(key, value);
  else if (key == "output-dir") c.output_dir = value;
  else if (key == "records") c.records = value;
  else if (key == "csv") c.csv = value;
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

/// Reads either a JSON object or `key = value` lines ('#' starts a comment).
inline RunConfig parse_config(const std::string& text, RunConfig c = {}) {
  const std::string body = detail::trim(text);
  if (!body.empty() && body.front() == '{') {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      throw std::invalid_argument(std::string("config: ") + e.what());
    }
    for (const auto& [k, v] : j.items()) {
      if (v.is_null()) continue;
      apply_setting(c, k, v.is_string() ? v.get<std::string>() : v.dump());
    }
    return c;
  }
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return c;
}

inline RunConfig load_config(const std::string& path, RunConfig c = {}) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(c));
}

namespace detail {

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

inline json record_to_json(const ResultRecord& r) {
  json fe = json::object();
  for (const auto& [k, v] : r.field_errors) fe[k] = {{"eps1", v.eps1}, {"eps_inf", v.eps_inf}};
  return json{{"config", r.config},
              {"problem", r.problem},
              {"solver", r.solver},
              {"n_domain", r.n_domain},
              {"n_boundary", r.n_boundary},
              {"pde_norm", r.pde_norm},
              {"eps1", r.eps1},
              {"eps_inf", r.eps_inf},
              {"eval_n", r.eval_n},
              {"field_errors", fe},
              {"params", r.params},
              {"eps_param", r.eps_param},
              {"final_loss", r.final_loss},
              {"iters", r.iterations},
              {"wall_time_seconds", r.seconds},
              {"min_eigenvalue", detail::optional_number(r.min_eigenvalue)},
              {"condition_estimate", detail::optional_number(r.condition_estimate)},
              {"converged", r.converged},
              {"non_unique", r.non_unique},
              {"message", r.message},
              {"surrogates", r.surrogate_files}};
}

inline ResultRecord record_from_json(const json& j) {
  ResultRecord r;
  try {
    r.config = j.value("config", json::object());
    r.problem = j.at("problem").get<std::string>();
    r.solver = j.at("solver").get<std::string>();
    r.n_domain = j.at("n_domain").get<int>();
    r.n_boundary = j.at("n_boundary").get<int>();
    r.pde_norm = j.value("pde_norm", "");
    r.eps1 = j.at("eps1").get<double>();
    r.eps_inf = j.at("eps_inf").get<double>();
    r.eval_n = j.value("eval_n", std::size_t{0});
    const json fe = j.value("field_errors", json::object());
    for (const auto& [k, v] : fe.items()) {
      r.field_errors[k] = FieldErrors{v.at("eps1").get<double>(), v.at("eps_inf").get<double>()};
    }
    r.params = j.value("params", std::map<std::string, double>{});
    r.eps_param = j.value("eps_param", std::map<std::string, double>{});
    r.final_loss = j.at("final_loss").get<double>();
    r.iterations = j.at("iters").get<int>();
    r.seconds = j.at("wall_time_seconds").get<double>();
    if (j.contains("min_eigenvalue") && !j["min_eigenvalue"].is_null()) r.min_eigenvalue = j["min_eigenvalue"].get<double>();
    if (j.contains("condition_estimate") && !j["condition_estimate"].is_null()) {
      r.condition_estimate = j["condition_estimate"].get<double>();
    }
    r.converged = j.value("converged", false);
    r.non_unique = j.value("non_unique", false);
    r.message = j.value("message", "");
    r.surrogate_files = j.value("surrogates", std::map<std::string, std::string>{});
  } catch (const json::exception& e) {
    throw FormatError(std::string("result record: ") + e.what());
  }
  return r;
}

inline const char* csv_header() { return "problem,solver,n_domain,n_boundary,eps1,eps_inf,eps_param,final_loss,iters,seconds"; }

inline std::string csv_row(const ResultRecord& r) {
  std::string ep;
  for (const auto& [k, v] : r.eps_param) {
    if (!ep.empty()) ep += ';';
    ep += format_double(v);
  }
  std::ostringstream os;
  os << r.problem << ',' << r.solver << ',' << r.n_domain << ',' << r.n_boundary << ',' << format_double(r.eps1) << ','
     << format_double(r.eps_inf) << ',' << ep << ',' << format_double(r.final_loss) << ',' << r.iterations << ','
     << format_double(r.seconds);
  return os.str();
}

/// `problem | solver | eps1 | eps_inf | eps_param | t(s)`
inline std::string table_row(const ResultRecord& r) {
  std::ostringstream os;
  os << std::left << std::setw(18) << r.problem << " | " << std::setw(17) << r.solver << " | " << std::scientific
     << std::setprecision(3) << r.eps1 << " | " << r.eps_inf << " | ";
  if (r.eps_param.empty()) {
    os << "    -    ";
  } else {
    bool first = true;
    for (const auto& [k, v] : r.eps_param) {
      os << (first ? "" : " ") << k << "=" << v;
      first = false;
    }
  }
  os << " | " << std::fixed << std::setprecision(2) << r.seconds;
  if (!r.converged) os << "  (FAILED: " << r.message << ")";
  return os.str();
}

inline void append_record(const ResultRecord& r, const std::string& jsonl, const std::string& csv) {
  if (!jsonl.empty()) {
    std::ofstream out(jsonl, std::ios::app);
    if (!out) throw std::runtime_error("cannot open '" + jsonl + "'");
    out << record_to_json(r).dump() << '\n';
  }
  if (!csv.empty()) {
    const bool fresh = !std::filesystem::exists(csv) || std::filesystem::file_size(csv) == 0;
    std::ofstream out(csv, std::ios::app);
    if (!out) throw std::runtime_error("cannot open '" + csv + "'");
    if (fresh) out << csv_header() << '\n';
    out << csv_row(r) << '\n';
  }
}

inline std::vector<ResultRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<ResultRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError("'" + path + "': " + e.what());
    }
  }
  return out;
}

inline std::string describe(const ResultRecord& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "problem       " << r.problem << "\n"
     << "solver        " << r.solver << "\n"
     << "degrees       domain " << r.n_domain << ", boundary " << r.n_boundary << "\n"
     << "pde norm      " << r.pde_norm << "\n"
     << "eps1          " << r.eps1 << "\n"
     << "eps_inf       " << r.eps_inf << "   (" << r.eval_n << " evaluation points)\n";
  for (const auto& [k, v] : r.field_errors) os << "  field " << k << "     eps1 " << v.eps1 << ", eps_inf " << v.eps_inf << "\n";
  for (const auto& [k, v] : r.params) {
    os << "param " << k << "       " << v;
    if (auto it = r.eps_param.find(k); it != r.eps_param.end()) os << "   (error " << it->second << ")";
    os << "\n";
  }
  os << "final loss    " << r.final_loss << "\n"
     << "iterations    " << r.iterations << "\n"
     << "seconds       " << r.seconds << "\n";
  if (r.min_eigenvalue) os << "min eigenval. " << *r.min_eigenvalue << "\n";
  if (r.condition_estimate) os << "condition     " << *r.condition_estimate << "\n";
  os << "converged     " << (r.converged ? "yes" : "no") << (r.non_unique ? " (non-unique minimiser)" : "") << "\n";
  if (!r.message.empty()) os << "message       " << r.message << "\n";
  for (const auto& [k, v] : r.surrogate_files) os << "surrogate " << k << "   " << v << "\n";
  return os.str();
}

/// Fills unset options from the problem defaults and checks consistency.
/// Throws std::invalid_argument for usage errors.
inline RunConfig resolve_config(RunConfig c) {
  const ProblemDefaults d = problem_defaults(c.problem);
  if (!c.solver) c.solver = d.solver;
  if (!c.n_domain) c.n_domain = d.n_domain;
  if (!c.n_boundary) c.n_boundary = d.n_boundary;
  if (!c.pde_norm) c.pde_norm = d.pde_norm;
  if (!c.tau) c.tau = d.tau;
  if (std::find(solver_names().begin(), solver_names().end(), *c.solver) == solver_names().end()) {
    std::string msg = "unknown solver '" + *c.solver + "'; valid names:";
    for (const auto& s : solver_names()) msg += " " + s;
    throw std::invalid_argument(msg);
  }
  if (*c.n_domain < 1 || *c.n_boundary < 1) throw std::invalid_argument("degrees must be >= 1");
  if (!(*c.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (c.max_iters < 0) throw std::invalid_argument("max-iters must be >= 0");
  if (c.eval_points < 0) throw std::invalid_argument("eval-points must be >= 0");
  (void)parse_norm(*c.pde_norm);
  (void)parse_norm(c.bnd_norm);
  return c;
}

/// Solves one configured problem. Solver failures are reported in the
/// record (converged = false) rather than thrown.
inline ResultRecord run(const RunConfig& raw) {
  const RunConfig c = resolve_config(raw);
  const ProblemSpec problem = make_problem(c.problem);
  ResultRecord rec;
  rec.config = config_to_json(c);
  rec.problem = c.problem;
  rec.solver = *c.solver;
  rec.n_domain = *c.n_domain;
  rec.n_boundary = *c.n_boundary;
  rec.pde_norm = *c.pde_norm;

  detail::Stopwatch clock;
  LossSpec spec;
  spec.pde = parse_norm(*c.pde_norm);
  spec.aux = parse_norm(c.bnd_norm);
  const auto ops = std::make_shared<const OperatorCache>(TensorGrid(*c.n_domain, problem.box));
  const AssembledLoss loss = assemble_loss(problem, spec, ops, *c.n_boundary);
  const Objective obj = loss.objective();
  const Vector x0 = loss.initial_guess();

  SolveReport rep;
  try {
    if (*c.solver == "ad") {
      if (!loss.affine()) throw std::invalid_argument("solver 'ad' requires a linear problem; '" + c.problem + "' is nonlinear");
      const auto ne = loss.normal_equations();
      rep = analytic_descent(ne.kk, ne.rhs);
    } else if (*c.solver == "gf-implicit-euler") {
      FlowOptions fo;
      fo.tau = *c.tau;
      fo.max_iters = c.max_iters;
      fo.step_tol = c.tol;
      fo.grad_tol = c.tol;
      rep = implicit_euler_flow(obj, x0, fo);
    } else if (*c.solver == "quasi-newton") {
      LbfgsOptions lo;
      lo.max_iters = c.max_iters;
      lo.grad_tol = c.tol;
      // Gauss-Newton model at the start point as the initial inverse Hessian.
      auto llt = std::make_shared<Eigen::LLT<Matrix>>(loss.gauss_newton_hessian(x0));
      if (llt->info() == Eigen::Success) lo.preconditioner = [llt](const Vector& v) { return Vector(llt->solve(v)); };
      rep = quasi_newton_minimise(obj, x0, lo);
    } else {
      NewtonOptions no;
      no.max_iters = std::min(c.max_iters, 200);
      no.tol = c.tol;
      rep = newton_minimise(obj, x0, no);
    }
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    rep.x = x0;
    rep.converged = false;
    rep.message = e.what();
  }
  rep.final_loss = loss.value(rep.x);

  rec.final_loss = rep.final_loss;
  rec.iterations = rep.iterations;
  rec.min_eigenvalue = rep.min_eigenvalue;
  rec.condition_estimate = rep.condition_estimate;
  rec.converged = rep.converged;
  rec.non_unique = rep.non_unique;
  rec.message = rep.message;

  const int per_axis = c.eval_points > 0 ? c.eval_points : default_eval_points_per_axis(problem.m);
  bool first = true;
  for (std::size_t f = 0; f < problem.fields.size(); ++f) {
    const auto& decl = problem.fields[f];
    if (!decl.unknown) continue;
    const Surrogate s = interpolate(ops->grid(), loss.field_values(rep.x, static_cast<int>(f)));
    if (auto it = problem.ground_truth.find(decl.name); it != problem.ground_truth.end()) {
      const ErrorMetrics e = evaluate_errors(s, it->second, per_axis);
      rec.field_errors[decl.name] = FieldErrors{e.eps1, e.eps_inf};
      rec.eps1 = first ? e.eps1 : std::max(rec.eps1, e.eps1);
      rec.eps_inf = first ? e.eps_inf : std::max(rec.eps_inf, e.eps_inf);
      rec.eval_n = e.n;
      first = false;
    }
    if (!c.output_dir.empty()) {
      std::filesystem::create_directories(c.output_dir);
      const std::string path = (std::filesystem::path(c.output_dir) / (c.problem + "-" + decl.name + ".json")).string();
      save_surrogate(s.to_basis(BasisKind::Chebyshev), path);
      rec.surrogate_files[decl.name] = path;
    }
  }
  for (std::size_t p = 0; p < problem.params.size(); ++p) {
    const auto& decl = problem.params[p];
    if (!decl.unknown) continue;
    const double v = loss.param_value(rep.x, static_cast<int>(p));
    rec.params[decl.name] = v;
    if (auto it = problem.param_truth.find(decl.name); it != problem.param_truth.end()) rec.eps_param[decl.name] = std::abs(v - it->second);
  }
  rec.seconds = clock.seconds();
  append_record(rec, c.records, c.csv);
  return rec;
}

/// Degrees of the reduced smoke preset.
inline RunConfig smoke_config(const std::string& name) {
  RunConfig c;
  c.problem = name;
  const auto d = problem_defaults(name);
  if (name == "poisson4d") {
    c.n_domain = 4;
    c.n_boundary = 4;
  } else {
    c.n_domain = std::min(d.n_domain, 12);
    c.n_boundary = std::min(d.n_boundary, 12);
  }
  return c;
}

struct SuiteOptions {
  std::string preset = "smoke";
  bool parallel = false;
  std::string output_dir;
  std::string records;
  std::string csv;
  bool quiet = false;
};

/// Runs every built-in; a failing run is recorded and the suite continues.
inline std::vector<ResultRecord> suite(const SuiteOptions& opt, std::ostream* log = nullptr) {
  if (opt.preset != "smoke" && opt.preset != "paper-tables") {
    throw std::invalid_argument("unknown preset '" + opt.preset + "'; valid presets: paper-tables smoke");
  }
  std::vector<RunConfig> configs;
  for (const auto& name : problem_names()) {
    RunConfig c = opt.preset == "smoke" ? smoke_config(name) : RunConfig{};
    c.problem = name;
    c.output_dir = opt.output_dir;
    configs.push_back(c);
  }
  auto guarded = [](const RunConfig& c) {
    try {
      return run(c);
    } catch (const std::exception& e) {
      ResultRecord r;
      r.problem = c.problem;
      r.solver = c.solver.value_or("");
      r.message = e.what();
      return r;
    }
  };
  std::vector<ResultRecord> out;
  if (opt.parallel) {
    std::vector<std::future<ResultRecord>> futures;
    for (const auto& c : configs) futures.push_back(std::async(std::launch::async, guarded, c));
    for (auto& f : futures) out.push_back(f.get());
  } else {
    for (const auto& c : configs) {
      out.push_back(guarded(c));
      if (log) *log << table_row(out.back()) << std::endl;
    }
  }
  if (log && opt.parallel) {
    for (const auto& r : out) *log << table_row(r) << '\n';
  }
  for (const auto& r : out) append_record(r, opt.records, opt.csv);
  return out;
}

}  // namespace psm
