#include "dfalab/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "dfalab/compute.hpp"
#include "dfalab/errors.hpp"
#include "dfalab/train.hpp"

namespace dfalab {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<MethodSeries> pool_run_logs(const std::string& log_dir, double exclude_frac) {
  if (exclude_frac < 0.0 || exclude_frac >= 1.0) {
    throw ParameterError("exclude_frac must lie in [0, 1)");
  }
  if (!fs::is_directory(log_dir)) {
    throw IoError("'" + log_dir + "' is not a directory of run logs");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(log_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".csv") continue;
    if (name.size() > 14 && name.rfind("_alignment.csv") == name.size() - 14) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());  // stable pooling order

  std::map<std::string, MethodSeries> by_method;
  std::vector<std::string> order;
  for (const fs::path& file : files) {
    const ParsedRunLog log = read_run_csv(file.string());
    if (log.entries.empty()) continue;
    auto [it, fresh] = by_method.try_emplace(log.method);
    if (fresh) {
      it->second.method = log.method;
      order.push_back(log.method);
    }
    MethodSeries& series = it->second;
    series.n_runs += 1;
    const std::size_t skip =
        static_cast<std::size_t>(exclude_frac * static_cast<double>(log.entries.size()));
    for (std::size_t i = skip; i < log.entries.size(); ++i) {
      ParetoPoint p;
      p.compute = to_pf_days(log.entries[i].flop_standard);
      p.loss = log.entries[i].loss;
      p.run_id = file.stem().string();
      series.points.push_back(std::move(p));
    }
  }
  std::vector<MethodSeries> pooled;
  pooled.reserve(order.size());
  for (const std::string& method : order) pooled.push_back(std::move(by_method[method]));
  return pooled;
}

FrontierReport build_report(const std::string& log_dir, double exclude_frac) {
  const std::vector<MethodSeries> pooled = pool_run_logs(log_dir, exclude_frac);
  if (pooled.empty()) {
    throw ValidationError("no run logs found under '" + log_dir + "'");
  }

  FrontierReport report;
  double lo = 0.0, hi = 0.0;
  for (const MethodSeries& series : pooled) {
    MethodReport mr;
    mr.method = series.method;
    mr.n_runs = series.n_runs;
    mr.n_points_pooled = static_cast<int>(series.points.size());
    mr.front = pareto_front(series.points);
    mr.fit = fit_power_law(mr.front);
    for (const ParetoPoint& p : mr.front) {
      lo = lo == 0.0 ? p.compute : std::min(lo, p.compute);
      hi = std::max(hi, p.compute);
    }
    report.methods.push_back(std::move(mr));
  }
  report.budget_lo = lo;
  report.budget_hi = hi;

  const auto bp = std::find_if(report.methods.begin(), report.methods.end(),
                               [](const MethodReport& m) { return m.method == "bp"; });
  if (bp != report.methods.end() && lo < hi) {
    for (MethodReport& mr : report.methods) {
      if (mr.method == "bp") continue;
      const ScenarioReport sc = compare_frontiers(bp->fit, mr.fit, lo, hi);
      if (!sc.tie) mr.scenario = sc.scenario;
      mr.crossover = sc.crossover;
    }
  }
  return report;
}

void write_report_json(const FrontierReport& report, const std::string& path) {
  json methods = json::array();
  for (const MethodReport& mr : report.methods) {
    json entry = {
        {"method", mr.method},
        {"alpha_C", mr.fit.alpha_c},
        {"C_c", mr.fit.c_c},
        {"residual", mr.fit.residual_rms},
        {"n_points", mr.fit.n_points},
        {"n_points_pooled", mr.n_points_pooled},
        {"n_runs", mr.n_runs},
        {"scenario", nullptr},
        {"crossover", nullptr},
    };
    if (mr.scenario) entry["scenario"] = std::string(1, *mr.scenario);
    if (mr.crossover) entry["crossover"] = *mr.crossover;
    methods.push_back(std::move(entry));
  }
  const json doc = {
      {"methods", std::move(methods)},
      {"budget_pf_days", {{"lo", report.budget_lo}, {"hi", report.budget_hi}}},
      {"law", "L(C) = (C / C_c)^alpha_C"},
  };
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failure on '" + path + "'");
}

void write_plot_csvs(const FrontierReport& report, const std::string& dir) {
  fs::create_directories(dir);
  for (const MethodReport& mr : report.methods) {
    const fs::path path = fs::path(dir) / (mr.method + "_frontier.csv");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "compute_pf_days,loss,fitted_loss\n";
    char buf[128];
    for (const ParetoPoint& p : mr.front) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.compute, p.loss,
                    power_law_loss(mr.fit, p.compute));
      out << buf;
    }
    if (!out) throw IoError("write failure on '" + path.string() + "'");
  }
}

}  // namespace dfalab
