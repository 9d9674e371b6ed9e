// Experiment driver: corpus ingestion, training runs, sweeps, frontier
// reports and the built-in verification suite, all behind one binary.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dfalab/checkpoint.hpp"
#include "dfalab/config.hpp"
#include "dfalab/corpus.hpp"
#include "dfalab/errors.hpp"
#include "dfalab/report.hpp"
#include "dfalab/selfcheck.hpp"
#include "dfalab/train.hpp"

namespace fs = std::filesystem;

namespace {

int run_ingest(const std::vector<std::string>& paths, const std::string& out) {
  const dfalab::Corpus corpus = dfalab::ingest(paths);
  dfalab::save_corpus(corpus, out);
  std::cout << "ingested " << paths.size() << " file(s), " << corpus.size()
            << " tokens -> " << out << '\n';
  return 0;
}

int run_train(const std::string& config_path, const std::string& corpus_path,
              const std::string& out_dir, const std::string& model_out) {
  const dfalab::RunConfig config = dfalab::run_config_from_kv(dfalab::parse_kv_file(config_path));
  const dfalab::Corpus corpus = dfalab::load_corpus(corpus_path);
  fs::create_directories(out_dir);

  const dfalab::TrainResult result = dfalab::train_run(config, corpus);
  const fs::path csv = fs::path(out_dir) / (config.run_id() + ".csv");
  dfalab::write_run_csv(result, csv.string());
  if (!result.alignment.empty()) {
    dfalab::write_alignment_csv(
        result, (fs::path(out_dir) / (config.run_id() + "_alignment.csv")).string());
  }
  if (!model_out.empty()) dfalab::save_model(result.model, model_out);

  if (result.diverged) {
    std::cout << "run " << config.run_id() << " DIVERGED at step " << result.diverged_step
              << "; partial log in " << csv.string() << '\n';
    return 2;
  }
  std::cout << "run " << config.run_id() << ": " << result.entries.back().step
            << " steps, final loss " << result.final_loss << ", log " << csv.string() << '\n';
  return 0;
}

int run_sweep(const std::string& grid_path, const std::string& corpus_path,
              const std::string& out_dir, int jobs) {
  const std::vector<dfalab::RunConfig> grid =
      dfalab::sweep_grid_from_kv(dfalab::parse_kv_file(grid_path));
  const dfalab::Corpus corpus = dfalab::load_corpus(corpus_path);
  fs::create_directories(out_dir);
  const std::vector<dfalab::SweepSelection> best =
      dfalab::sweep(grid, corpus, out_dir, jobs);
  std::cout << grid.size() << " run(s) swept; winners:\n";
  for (const dfalab::SweepSelection& sel : best) {
    std::cout << "  " << sel.best.run_id() << "  lr=" << sel.best.optim.lr
              << "  final_loss=" << sel.final_loss << '\n';
  }
  return 0;
}

int run_report(const std::string& log_dir, const std::string& out_json,
               const std::string& plot_dir, double exclude_frac) {
  const dfalab::FrontierReport report = dfalab::build_report(log_dir, exclude_frac);
  dfalab::write_report_json(report, out_json);
  if (!plot_dir.empty()) dfalab::write_plot_csvs(report, plot_dir);
  std::cout << "report over " << report.methods.size() << " method(s) -> " << out_json
            << '\n';
  for (const auto& m : report.methods) {
    std::cout << "  " << m.method << ": alpha_C=" << m.fit.alpha_c << " C_c=" << m.fit.c_c
              << (m.scenario ? std::string("  scenario=") + *m.scenario : std::string())
              << '\n';
  }
  return 0;
}

int run_check() {
  const std::vector<dfalab::CheckResult> results = dfalab::run_self_checks();
  bool all = true;
  for (const dfalab::CheckResult& r : results) {
    std::cout << (r.passed ? "ok   - " : "FAIL - ") << r.name;
    if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
    std::cout << '\n';
    all = all && r.passed;
  }
  return all ? 0 : 1;
}

void print_error_json(const std::string& kind, const std::string& message) {
  const nlohmann::json err = {{"error", kind}, {"message", message}};
  std::cerr << err.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training laboratory for feedback-strategy scaling experiments"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Tokenize text files into a binary corpus");
  std::vector<std::string> ingest_paths;
  std::string ingest_out = "corpus.bin";
  ingest->add_option("paths", ingest_paths, "Input text files")->required()->expected(-1);
  ingest->add_option("--out", ingest_out, "Output corpus path");

  auto* train = app.add_subcommand("train", "Run one training configuration");
  std::string train_config, train_corpus, train_out = "logs", train_model;
  train->add_option("--config", train_config, "Run config file")->required();
  train->add_option("--corpus", train_corpus, "Corpus file")->required();
  train->add_option("--out", train_out, "Log output directory");
  train->add_option("--save-model", train_model, "Write the final model checkpoint here");

  auto* sweep = app.add_subcommand("sweep", "Run a hyperparameter grid");
  std::string sweep_grid, sweep_corpus, sweep_out = "logs";
  int sweep_jobs = 1;
  sweep->add_option("--grid", sweep_grid, "Sweep grid config file")->required();
  sweep->add_option("--corpus", sweep_corpus, "Corpus file")->required();
  sweep->add_option("--out", sweep_out, "Log output directory");
  sweep->add_option("--jobs", sweep_jobs, "Worker threads");

  auto* report = app.add_subcommand("report", "Fit frontiers over completed run logs");
  std::string report_logs, report_out = "report.json", report_plots;
  double report_exclude = 0.01;
  report->add_option("--logs", report_logs, "Directory of run CSVs")->required();
  report->add_option("--out", report_out, "Output JSON path");
  report->add_option("--plot", report_plots, "Directory for plot-data CSVs");
  report->add_option("--exclude-frac", report_exclude,
                     "Leading fraction of each run dropped as warmup transient");

  auto* check = app.add_subcommand("check", "Run the built-in verification suite");

  try {
    app.parse(argc, argv);
    if (ingest->parsed()) return run_ingest(ingest_paths, ingest_out);
    if (train->parsed()) return run_train(train_config, train_corpus, train_out, train_model);
    if (sweep->parsed()) return run_sweep(sweep_grid, sweep_corpus, sweep_out, sweep_jobs);
    if (report->parsed()) return run_report(report_logs, report_out, report_plots,
                                            report_exclude);
    if (check->parsed()) return run_check();
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    print_error_json("usage", e.what());
    return 1;
  } catch (const dfalab::Error& e) {
    print_error_json(e.tag(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error_json("internal", e.what());
    return 1;
  }
  return 0;
}
