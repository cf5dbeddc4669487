#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bundlegs/bgs.hpp"
#include "bundlegs/gs_baseline.hpp"

namespace bundlegs::harness {

enum class Solver { BGS, GS };
enum class Format { CSV, JSON };

std::string to_string(Solver solver);
Solver parse_solver(const std::string& text);
Format parse_format(const std::string& text);

struct ExperimentSpec {
  Solver solver = Solver::BGS;
  std::string problem = "MAXQ-gen";
  int n = 50;
  int replications = 5;
  /// Unset means 5e-4 for n <= 200 and 5e-3 above.
  std::optional<double> stop_rel_err;
  std::uint64_t seed_base = 0;
  /// Unset means 2n for fixed-size problems and ceil(n/10) otherwise.
  std::optional<int> sample_size;
  /// Solver parameters; the sample size, seed, iteration cap and radius
  /// floor are overwritten per run.
  bgs::SolverConfig bgs;
  gs::GsConfig gs;
  int max_iters = 1000;
  double min_radius = 1e-12;
  /// Aborted runs are left out of the aggregate row.
  bool exclude_aborted = true;
  /// Write time_s = 0 so that repeated runs give identical bytes.
  bool record_time = true;
  bool keep_traces = false;
  int jobs = 1;

  double resolved_tolerance() const;
  int resolved_sample_size() const;
  void validate() const;
};

struct RunReport {
  std::string solver;
  std::string problem;
  int n = 0;
  std::uint64_t seed = 0;
  int iters = 0;  // outer iterations only
  long g_eval = 0;
  double time_s = 0.0;
  double E_final = 0.0;
  bool converged = false;
  /// Not part of the CSV columns.
  std::string stop_reason;
  bool aborted = false;
  std::string message;
  double f_star = 0.0;
  std::vector<bgs::IterationTrace> trace;
};

struct AggregateRow {
  double iters = 0.0;
  double g_eval = 0.0;
  double time_s = 0.0;
  double E_final = 0.0;
  int runs = 0;       // runs averaged
  int converged = 0;  // of those, how many converged
  std::vector<std::uint64_t> excluded_seeds;
};

struct ExperimentResult {
  std::vector<RunReport> runs;
  AggregateRow aggregate;

  bool any_aborted() const;
};

/// Uniform point in the ball of radius (||x0|| + 1) / n around x0.
Vector perturb_start(const Vector& x0, int n, Rng& rng);

/// (f - f*) / (|f*| + 1).
double relative_error(double f, double f_star);

RunReport run_single(const ExperimentSpec& spec, std::uint64_t seed);

/// Replications use seeds seed_base + r and are reported in that order
/// regardless of `jobs`.
ExperimentResult run_experiment(const ExperimentSpec& spec);

AggregateRow aggregate_runs(const std::vector<RunReport>& runs, bool exclude_aborted);

/// CSV: header, one row per run, then a row with seed "mean" holding the
/// aggregate. JSON: {"runs": [...], "aggregate": {...}}.
void emit_report(std::ostream& out, const ExperimentResult& result, Format format);
void emit_report(const std::filesystem::path& path, const ExperimentResult& result,
                 Format format);

std::string to_json(const ExperimentResult& result);
/// Reads the "runs" array written by to_json.
std::vector<RunReport> runs_from_json(const std::string& text);

/// CSV rows k,i,f_minus_fstar,radius,kind, one per inner pass, for every
/// run in `result` (prefixed by the seed).
void write_trace(std::ostream& out, const ExperimentResult& result);
void write_trace(const std::filesystem::path& path, const ExperimentResult& result);

}  // namespace bundlegs::harness
