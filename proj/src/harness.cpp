#include "bundlegs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace bundlegs::harness {

namespace {

using nlohmann::json;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Shortest representation that reads back to the same double.
std::string number(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buffer, end);
}

bool fixed_size(const std::string& problem) {
  const std::string key = lower(problem);
  for (const auto& e : problems::catalog())
    if (lower(e.name) == key || std::to_string(e.number) == key) return e.fixed_dimension != 0;
  throw std::invalid_argument("unknown problem: " + problem);
}

json to_json(const RunReport& r) {
  return json{{"solver", r.solver},       {"problem", r.problem},
              {"n", r.n},                 {"seed", r.seed},
              {"iters", r.iters},         {"g_eval", r.g_eval},
              {"time_s", r.time_s},       {"E_final", r.E_final},
              {"converged", r.converged}, {"stop_reason", r.stop_reason},
              {"aborted", r.aborted},     {"message", r.message}};
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

}  // namespace

std::string to_string(Solver solver) { return solver == Solver::BGS ? "BGS" : "GS"; }

Solver parse_solver(const std::string& text) {
  const std::string key = lower(text);
  if (key == "bgs" || key == "b-gs") return Solver::BGS;
  if (key == "gs") return Solver::GS;
  throw std::invalid_argument("unknown solver: " + text);
}

Format parse_format(const std::string& text) {
  const std::string key = lower(text);
  if (key == "csv") return Format::CSV;
  if (key == "json") return Format::JSON;
  throw std::invalid_argument("unknown format: " + text);
}

double ExperimentSpec::resolved_tolerance() const {
  if (stop_rel_err) return *stop_rel_err;
  return n <= 200 ? 5e-4 : 5e-3;
}

int ExperimentSpec::resolved_sample_size() const {
  if (sample_size) return *sample_size;
  return fixed_size(problem) ? 2 * n : (n + 9) / 10;
}

void ExperimentSpec::validate() const {
  if (replications < 1) throw std::invalid_argument("replications must be at least 1");
  if (!(resolved_tolerance() > 0.0)) throw std::invalid_argument("stop_rel_err must be positive");
  if (sample_size && *sample_size < 1) throw std::invalid_argument("m must be positive");
  if (max_iters < 0) throw std::invalid_argument("iteration cap must be nonnegative");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  fixed_size(problem);
}

bool ExperimentResult::any_aborted() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunReport& r) { return r.aborted; });
}

Vector perturb_start(const Vector& x0, int n, Rng& rng) {
  if (n != x0.size() || n < 1) throw std::invalid_argument("perturb_start: n must equal dim(x0)");
  return sample_ball_point(x0, (x0.norm() + 1.0) / n, rng);
}

double relative_error(double f, double f_star) { return (f - f_star) / (std::abs(f_star) + 1.0); }

RunReport run_single(const ExperimentSpec& spec, std::uint64_t seed) {
  const problems::ObjectiveOracle oracle = problems::make_problem(spec.problem, spec.n);
  const double tol = spec.resolved_tolerance();
  const double f_star = oracle.f_star();

  Rng rng(seed);
  const Vector start = perturb_start(oracle.x0(), spec.n, rng);
  const std::uint64_t solver_seed = rng();

  bgs::RunHooks hooks;
  hooks.stop_at = [&](double f) { return relative_error(f, f_star) <= tol; };

  const auto t0 = std::chrono::steady_clock::now();
  bgs::RunResult result;
  if (spec.solver == Solver::BGS) {
    bgs::SolverConfig config = spec.bgs;
    config.m = spec.resolved_sample_size();
    config.seed = solver_seed;
    config.max_outer = spec.max_iters;
    config.min_radius = spec.min_radius;
    result = bgs::run(oracle, config, start, hooks);
  } else {
    gs::GsConfig config = spec.gs;
    if (spec.sample_size) config.sample_size = *spec.sample_size;
    config.seed = solver_seed;
    config.max_iters = spec.max_iters;
    config.min_radius = spec.min_radius;
    result = gs::gs_run(oracle, config, start, hooks);
  }
  const auto t1 = std::chrono::steady_clock::now();

  RunReport report;
  report.solver = to_string(spec.solver);
  report.problem = oracle.name();
  report.n = spec.n;
  report.seed = seed;
  report.iters = result.outer_iterations;
  report.g_eval = result.grad_evals;
  report.time_s = spec.record_time ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
  report.E_final = relative_error(result.f, f_star);
  report.converged = report.E_final <= tol || result.reason == bgs::StopReason::Converged;
  report.stop_reason = bgs::to_string(result.reason);
  report.aborted = result.aborted();
  report.message = result.message;
  report.f_star = f_star;
  if (spec.keep_traces) report.trace = std::move(result.trace);
  return report;
}

AggregateRow aggregate_runs(const std::vector<RunReport>& runs, bool exclude_aborted) {
  AggregateRow row;
  for (const auto& r : runs) {
    if (exclude_aborted && r.aborted) {
      row.excluded_seeds.push_back(r.seed);
      continue;
    }
    row.iters += r.iters;
    row.g_eval += static_cast<double>(r.g_eval);
    row.time_s += r.time_s;
    row.E_final += r.E_final;
    row.converged += r.converged ? 1 : 0;
    ++row.runs;
  }
  if (row.runs > 0) {
    row.iters /= row.runs;
    row.g_eval /= row.runs;
    row.time_s /= row.runs;
    row.E_final /= row.runs;
  }
  return row;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  result.runs.resize(static_cast<std::size_t>(spec.replications));

  const int workers = std::min(spec.jobs, spec.replications);
  if (workers <= 1) {
    for (int r = 0; r < spec.replications; ++r)
      result.runs[static_cast<std::size_t>(r)] = run_single(spec, spec.seed_base + r);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int r = next++; r < spec.replications; r = next++) {
          try {
            result.runs[static_cast<std::size_t>(r)] = run_single(spec, spec.seed_base + r);
          } catch (...) {
            std::lock_guard lock(failure_lock);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  result.aggregate = aggregate_runs(result.runs, spec.exclude_aborted);
  return result;
}

void emit_report(std::ostream& out, const ExperimentResult& result, Format format) {
  if (format == Format::JSON) {
    out << to_json(result) << '\n';
    return;
  }
  out << "solver,problem,n,seed,iters,g_eval,time_s,E_final,converged\n";
  for (const auto& r : result.runs) {
    out << r.solver << ',' << r.problem << ',' << r.n << ',' << r.seed << ',' << r.iters << ','
        << r.g_eval << ',' << number(r.time_s) << ',' << number(r.E_final) << ','
        << (r.converged ? "true" : "false") << '\n';
  }
  if (result.runs.empty()) return;
  const auto& a = result.aggregate;
  const auto& first = result.runs.front();
  out << first.solver << ',' << first.problem << ',' << first.n << ",mean," << number(a.iters)
      << ',' << number(a.g_eval) << ',' << number(a.time_s) << ',' << number(a.E_final) << ','
      << (a.runs > 0 && a.converged == a.runs ? "true" : "false") << '\n';
}

void emit_report(const std::filesystem::path& path, const ExperimentResult& result,
                 Format format) {
  std::ofstream out = open_output(path);
  emit_report(out, result, format);
  check_written(out, path);
}

std::string to_json(const ExperimentResult& result) {
  json runs = json::array();
  for (const auto& r : result.runs) runs.push_back(to_json(r));
  const auto& a = result.aggregate;
  json aggregate{{"iters", a.iters},         {"g_eval", a.g_eval},
                 {"time_s", a.time_s},       {"E_final", a.E_final},
                 {"runs", a.runs},           {"converged", a.converged},
                 {"excluded_seeds", a.excluded_seeds}};
  return json{{"runs", runs}, {"aggregate", aggregate}}.dump(2);
}

std::vector<RunReport> runs_from_json(const std::string& text) {
  const json doc = json::parse(text);
  std::vector<RunReport> out;
  for (const auto& j : doc.at("runs")) {
    RunReport r;
    j.at("solver").get_to(r.solver);
    j.at("problem").get_to(r.problem);
    j.at("n").get_to(r.n);
    j.at("seed").get_to(r.seed);
    j.at("iters").get_to(r.iters);
    j.at("g_eval").get_to(r.g_eval);
    j.at("time_s").get_to(r.time_s);
    j.at("E_final").get_to(r.E_final);
    j.at("converged").get_to(r.converged);
    r.stop_reason = j.value("stop_reason", "");
    r.aborted = j.value("aborted", false);
    r.message = j.value("message", "");
    out.push_back(std::move(r));
  }
  return out;
}

void write_trace(std::ostream& out, const ExperimentResult& result) {
  out << "seed,k,i,f_minus_fstar,radius,kind\n";
  for (const auto& r : result.runs) {
    for (const auto& t : r.trace) {
      out << r.seed << ',' << t.k << ',' << t.i << ',' << number(t.f_val - r.f_star) << ','
          << number(t.radius) << ',' << bgs::to_string(t.kind) << '\n';
    }
  }
}

void write_trace(const std::filesystem::path& path, const ExperimentResult& result) {
  std::ofstream out = open_output(path);
  write_trace(out, result);
  check_written(out, path);
}

}  // namespace bundlegs::harness
