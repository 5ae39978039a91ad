#include "psm/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

const char* kRunKeys[] = {"problem", "solver",      "n-domain",   "n-boundary", "pde-norm", "bnd-norm", "tau",
                          "max-iters", "tol",       "eval-points", "output-dir", "records",  "csv",      "seed"};

int do_run(const std::string& config_path, const std::map<std::string, std::string>& overrides) {
  psm::RunConfig c;
  if (!config_path.empty()) c = psm::load_config(config_path);
  for (const auto& [k, v] : overrides) psm::apply_setting(c, k, v);
  if (c.problem.empty()) throw std::invalid_argument("no problem given; valid names: " + [] {
    std::string s;
    for (const auto& n : psm::problem_names()) s += n + " ";
    return s;
  }());
  const psm::ResultRecord r = psm::run(c);
  std::cout << psm::table_row(r) << std::endl;
  return r.converged ? 0 : 1;
}

int do_suite(const psm::SuiteOptions& opt) {
  const auto records = psm::suite(opt, &std::cout);
  int failed = 0;
  for (const auto& r : records) failed += r.converged ? 0 : 1;
  std::cout << records.size() << " runs, " << failed << " failed" << std::endl;
  for (const auto& r : records) {
    if (!r.converged) std::cout << "  " << r.problem << ": " << r.message << "\n";
  }
  return failed == 0 ? 0 : 1;
}

int do_show(const std::string& path, bool all) {
  const auto records = psm::read_records(path);
  if (records.empty()) throw std::invalid_argument("'" + path + "' contains no records");
  if (!all) {
    std::cout << psm::describe(records.back());
    return 0;
  }
  for (std::size_t i = 0; i < records.size(); ++i) std::cout << (i ? "\n" : "") << psm::describe(records[i]);
  return 0;
}

int do_eval(const std::string& surrogate_path, const std::string& points_path) {
  const psm::Surrogate s = psm::load_surrogate(surrogate_path);
  std::ifstream in(points_path);
  if (!in) throw std::invalid_argument("cannot open '" + points_path + "'");
  const auto rows = psm::read_points_csv(in);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != s.m) {
      throw psm::FormatError("point has " + std::to_string(row.size()) + " coordinates, surrogate dimension is " +
                             std::to_string(s.m));
    }
    for (double x : row) std::cout << psm::format_double(x) << ',';
    std::cout << psm::format_double(s.evaluate(row)) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral polynomial surrogates for PDE forward and inverse problems"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "solve one problem");
  std::string config_path;
  std::map<std::string, std::string> overrides;
  run->add_option("--config", config_path, "key=value or JSON config file");
  for (const char* key : kRunKeys) {
    run->add_option_function<std::string>(std::string("--") + key, [&overrides, key](const std::string& v) { overrides[key] = v; });
  }

  auto* suite = app.add_subcommand("suite", "run every built-in problem");
  psm::SuiteOptions sopt;
  suite->add_option("--preset", sopt.preset, "paper-tables or smoke")->capture_default_str();
  suite->add_flag("--parallel", sopt.parallel, "run problems concurrently");
  suite->add_option("--output-dir", sopt.output_dir);
  suite->add_option("--records", sopt.records);
  suite->add_option("--csv", sopt.csv);

  auto* show = app.add_subcommand("show", "pretty-print result records");
  std::string show_path;
  bool show_all = false;
  show->add_option("records", show_path, "JSON-lines file")->required();
  show->add_flag("--all", show_all, "print every record, not only the last");

  auto* eval = app.add_subcommand("eval", "evaluate a saved surrogate");
  std::string eval_surrogate, eval_points;
  eval->add_option("surrogate", eval_surrogate)->required();
  eval->add_option("points", eval_points, "CSV of coordinates")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return do_run(config_path, overrides);
    if (*suite) return do_suite(sopt);
    if (*show) return do_show(show_path, show_all);
    return do_eval(eval_surrogate, eval_points);
  } catch (const std::invalid_argument& e) {
    std::cerr << "psm: " << e.what() << '\n';
    return 2;
  } catch (const psm::FormatError& e) {
    std::cerr << "psm: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "psm: " << e.what() << '\n';
    return 1;
  }
}
