#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dfalab/frontier.hpp"

namespace dfalab {

struct MethodSeries {
  std::string method;
  int n_runs = 0;
  std::vector<ParetoPoint> points;  // (PF-days, loss) after transient exclusion
};

/// Pools every run CSV under `log_dir` (skipping *_alignment.csv and
/// diverged runs' trailing state is irrelevant -- logged entries count),
/// grouped by the mode encoded in each filename. The first
/// `exclude_frac` of each run's entries is dropped as warmup transient;
/// compute is the standard-accounting column converted to PF-days.
std::vector<MethodSeries> pool_run_logs(const std::string& log_dir,
                                        double exclude_frac = 0.01);

struct MethodReport {
  std::string method;
  int n_runs = 0;
  int n_points_pooled = 0;
  std::vector<ParetoPoint> front;
  PowerLawFit fit;
  /// Scenario of this method measured against the BP reference frontier;
  /// empty for the BP row itself or when no BP runs exist.
  std::optional<char> scenario;
  std::optional<double> crossover;
};

struct FrontierReport {
  std::vector<MethodReport> methods;
  double budget_lo = 0.0;  // PF-day range used for scenario classification
  double budget_hi = 0.0;
};

/// Fits each pooled method frontier and classifies every non-BP method
/// against BP over the span of observed budgets. Degenerate fits propagate
/// as errors; fewer than one completed run per requested method does too.
FrontierReport build_report(const std::string& log_dir, double exclude_frac = 0.01);

void write_report_json(const FrontierReport& report, const std::string& path);

/// One {method}_frontier.csv per method: compute,loss,fitted_loss.
void write_plot_csvs(const FrontierReport& report, const std::string& dir);

}  // namespace dfalab
