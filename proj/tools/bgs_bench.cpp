// Experiment runner: one problem, one solver, several replications.
//
//   bgs-bench --solver BGS --problem MAXQ-gen --n 50 --reps 5 --out runs.csv
//   bgs-bench --config exp.ini --m 10
//   bgs-bench catalog --format json

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bundlegs/harness.hpp"

namespace {

using namespace bundlegs;

void print_catalog(const std::string& format) {
  if (harness::parse_format(format) == harness::Format::JSON) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : problems::catalog()) {
      out.push_back({{"number", e.number},
                     {"name", e.name},
                     {"fixed_dimension", e.fixed_dimension},
                     {"f_star", e.f_star}});
    }
    std::cout << out.dump(2) << '\n';
    return;
  }
  std::cout << "number,name,fixed_dimension,f_star\n";
  for (const auto& e : problems::catalog())
    std::cout << e.number << ',' << e.name << ',' << e.fixed_dimension << ",\"" << e.f_star
              << "\"\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bundle gradient sampling benchmark runner"};
  app.set_config("--config", "", "key=value file; command-line flags take precedence");

  std::string solver = "BGS";
  std::string format = "csv";
  std::string out_path;
  std::string trace_path;
  std::optional<double> tol, eps0, mu, alpha, gamma, beta, theta, sigma, eps_tol, fd_h;
  std::optional<int> m;
  bool no_time = false;
  bool checks = false;
  harness::ExperimentSpec spec;

  app.add_option("--solver", solver, "BGS or GS")->capture_default_str();
  app.add_option("--problem", spec.problem, "catalog name or number")->capture_default_str();
  app.add_option("--n", spec.n, "dimension")->capture_default_str();
  app.add_option("--reps", spec.replications, "replications")->capture_default_str();
  app.add_option("--seed", spec.seed_base, "seed of the first replication")
      ->capture_default_str();
  app.add_option("--tol", tol, "relative-error stop (default 5e-4, or 5e-3 for n > 200)");
  app.add_option("--m", m, "sample size (default 2n for fixed-size problems, else ceil(n/10))");
  app.add_option("--eps0", eps0, "initial sampling radius");
  app.add_option("--mu", mu, "radius reduction factor (BGS)");
  app.add_option("--alpha", alpha, "penalty exponent (BGS)");
  app.add_option("--gamma", gamma, "linearization error scale (BGS), backtracking factor (GS)");
  app.add_option("--beta", beta, "sufficient decrease parameter");
  app.add_option("--theta", theta, "maximum kept weight (BGS)");
  app.add_option("--sigma", sigma, "maximum perturbation (BGS)");
  app.add_option("--eps-tol", eps_tol, "stationarity stop on v (BGS)");
  app.add_option("--max-iters", spec.max_iters, "outer iteration cap")->capture_default_str();
  app.add_option("--fd-h", fd_h, "use forward differences with this step");
  app.add_flag("--checks", checks, "enable differentiability checks in FDP (BGS)");
  app.add_option("--jobs", spec.jobs, "replications run in parallel")->capture_default_str();
  app.add_option("--out", out_path, "report file (default stdout)");
  app.add_option("--format", format, "csv or json")->capture_default_str();
  app.add_option("--trace", trace_path, "per-pass trace CSV");
  app.add_flag("--no-time", no_time, "report time_s = 0 for byte-stable output");

  std::string catalog_format = "csv";
  CLI::App* catalog = app.add_subcommand("catalog", "list the test problems");
  catalog->add_option("--format", catalog_format, "csv or json")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (catalog->parsed()) {
      print_catalog(catalog_format);
      return 0;
    }

    spec.solver = harness::parse_solver(solver);
    const harness::Format report_format = harness::parse_format(format);
    spec.stop_rel_err = tol;
    spec.sample_size = m;
    spec.record_time = !no_time;
    spec.keep_traces = !trace_path.empty();

    auto& b = spec.bgs;
    auto& g = spec.gs;
    if (eps0) b.eps0 = g.eps0 = *eps0;
    if (mu) b.mu = *mu;
    if (alpha) b.alpha = *alpha;
    if (gamma) b.gamma = g.armijo_gamma = *gamma;
    if (beta) b.beta = g.armijo_beta = *beta;
    if (theta) b.theta = *theta;
    if (sigma) b.sigma = *sigma;
    if (eps_tol) b.eps_tol = *eps_tol;
    if (fd_h) b.gradient = g.gradient = problems::GradientMode::forward_difference(*fd_h);
    b.differentiability_checks = checks;

    const harness::ExperimentResult result = harness::run_experiment(spec);
    if (out_path.empty()) {
      harness::emit_report(std::cout, result, report_format);
    } else {
      harness::emit_report(out_path, result, report_format);
    }
    if (!trace_path.empty()) harness::write_trace(trace_path, result);

    for (const auto& r : result.runs) {
      if (r.aborted) std::cerr << "seed " << r.seed << " aborted: " << r.message << '\n';
    }
    if (!result.aggregate.excluded_seeds.empty())
      std::cerr << result.aggregate.excluded_seeds.size() << " run(s) excluded from the mean\n";
    return result.any_aborted() ? 1 : 0;
  } catch (const std::exception& e) {
    std::cerr << "bgs-bench: " << e.what() << '\n';
    return 2;
  }
}
