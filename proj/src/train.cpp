#include "dfalab/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "dfalab/compute.hpp"
#include "dfalab/errors.hpp"

namespace dfalab {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string RunConfig::run_id() const {
  return to_string(mode) + "_" + std::to_string(model.n_layer) + "x" +
         std::to_string(model.d_model) + "_" + std::to_string(seed);
}

double RunConfig::resolved_b_init_std() const {
  return b_init_std > 0.0 ? b_init_std : 1.0 / std::sqrt(static_cast<double>(model.d_model));
}

void RunConfig::validate() const {
  model.validate();
  if (total_tokens == 0) throw ParameterError("total_tokens must be positive");
  if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
  if (log_interval < 1) throw ParameterError("log_interval must be >= 1");
  if (alignment_interval < 0) throw ParameterError("alignment_interval must be >= 0");
  if (warmup_steps < 0) throw ParameterError("warmup_steps must be >= 0");
  if (optim.lr < 0.0) throw ParameterError("lr must be nonnegative");
}

namespace {

void accumulate(Gradients& acc, const Gradients& grads) {
  std::vector<Matrix*> into;
  acc.for_each([&](const std::string&, Matrix& m) { into.push_back(&m); });
  std::size_t i = 0;
  grads.for_each([&](const std::string&, const Matrix& g) { *into[i++] += g; });
}

void scale(Gradients& grads, double factor) {
  grads.for_each([&](const std::string&, Matrix& g) { g *= factor; });
}

}  // namespace

TrainResult train_run(const RunConfig& config, const Corpus& corpus) {
  config.validate();
  if (config.model.vocab_size != Corpus::kVocabSize) {
    throw ConsistencyError("model vocab_size " + std::to_string(config.model.vocab_size) +
                           " does not match the byte corpus vocab " +
                           std::to_string(Corpus::kVocabSize));
  }
  if (config.total_tokens > corpus.size()) {
    throw ValidationError("token budget " + std::to_string(config.total_tokens) +
                          " exceeds the corpus (" + std::to_string(corpus.size()) +
                          " tokens); runs are single-epoch");
  }

  const int context = config.model.context;
  const std::uint64_t tokens_per_step =
      static_cast<std::uint64_t>(config.batch_size) * static_cast<std::uint64_t>(context);
  const std::int64_t total_steps =
      static_cast<std::int64_t>(config.total_tokens / tokens_per_step);
  if (total_steps < 1) {
    throw ValidationError("token budget " + std::to_string(config.total_tokens) +
                          " is below one batch of " + std::to_string(tokens_per_step));
  }

  const RngState root(config.seed);
  TrainResult result;
  result.config = config;
  result.model = init_model(config.model, root.split("model"));
  FeedbackMatrix fb;
  if (is_dfa_mode(config.mode)) {
    fb = make_feedback_matrix(config.model.d_model, root.split("feedback"),
                              config.resolved_b_init_std());
  }
  AdamState opt_state = make_adam_state(result.model.params);

  const double n_exact = static_cast<double>(result.model.params.param_count());
  std::uint64_t cursor = 0;  // next unread corpus position: windows never repeat
  double interval_loss = 0.0;
  std::int64_t interval_steps = 0;

  for (std::int64_t step = 1; step <= total_steps; ++step) {
    Gradients batch_grads = zeros_like(result.model.params);
    double batch_loss = 0.0;
    std::vector<int> window(static_cast<std::size_t>(context));
    std::vector<int> first_window;
    bool finite = true;
    for (int s = 0; s < config.batch_size; ++s) {
      for (int i = 0; i < context; ++i) {
        window[static_cast<std::size_t>(i)] = corpus.tokens[cursor + static_cast<std::uint64_t>(i)];
      }
      cursor += static_cast<std::uint64_t>(context);
      if (s == 0) first_window = window;
      const ForwardTape tape = forward(result.model, window);
      const UpdateResult update = compute_updates(config.mode, result.model, tape,
                                                  is_dfa_mode(config.mode) ? &fb : nullptr);
      if (!std::isfinite(update.loss)) {
        finite = false;
        break;
      }
      batch_loss += update.loss;
      accumulate(batch_grads, update.grads);
    }
    batch_loss /= config.batch_size;
    scale(batch_grads, 1.0 / config.batch_size);

    if (finite) {
      OptimHyper hyper = config.optim;
      if (config.warmup_steps > 0 && step <= config.warmup_steps) {
        hyper.lr *= static_cast<double>(step) / static_cast<double>(config.warmup_steps);
      }
      try {
        apply_updates(result.model, batch_grads, opt_state, hyper);
      } catch (const NumericError&) {
        finite = false;
      }
    }
    if (!finite) {
      result.diverged = true;
      result.diverged_step = step;
      break;
    }

    interval_loss += batch_loss;
    interval_steps += 1;
    const bool at_interval = step % config.log_interval == 0 || step == total_steps;
    if (at_interval) {
      RunLogEntry entry;
      entry.step = step;
      entry.tokens = static_cast<std::uint64_t>(step) * tokens_per_step;
      entry.loss = interval_loss / static_cast<double>(interval_steps);
      const double d = static_cast<double>(entry.tokens);
      entry.flop_standard =
          training_cost(config.mode, Accounting::Standard, n_exact, d, config.model.d_model);
      entry.flop_optimistic =
          training_cost(config.mode, Accounting::Optimistic, n_exact, d, config.model.d_model);
      entry.flop_exact = training_cost(config.mode, Accounting::ExactBlockwise, n_exact, d,
                                       config.model.d_model);
      result.entries.push_back(entry);
      interval_loss = 0.0;
      interval_steps = 0;
    }

    if (config.alignment_interval > 0 && is_dfa_mode(config.mode) &&
        step % config.alignment_interval == 0) {
      const ForwardTape tape = forward(result.model, first_window);
      result.alignment.push_back(
          alignment(result.model, tape, first_window, fb, config.mode, step));
    }
  }

  if (!result.entries.empty()) result.final_loss = result.entries.back().loss;
  return result;
}

void write_run_csv(const TrainResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "step,tokens,loss,flop_standard,flop_optimistic,flop_exact\n";
  for (const RunLogEntry& e : result.entries) {
    out << e.step << ',' << e.tokens << ',' << fmt_double(e.loss) << ','
        << fmt_double(e.flop_standard) << ',' << fmt_double(e.flop_optimistic) << ','
        << fmt_double(e.flop_exact) << '\n';
  }
  if (result.diverged) out << "# diverged at step " << result.diverged_step << '\n';
  if (!out) throw IoError("write failure on '" + path + "'");
}

void write_alignment_csv(const TrainResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "step,tensor,cosine\n";
  for (const AlignmentRecord& record : result.alignment) {
    for (const AlignmentEntry& entry : record.entries) {
      out << record.step << ',' << entry.tensor << ',';
      if (entry.cosine) out << fmt_double(*entry.cosine);
      out << '\n';
    }
  }
  if (!out) throw IoError("write failure on '" + path + "'");
}

ParsedRunLog read_run_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  ParsedRunLog log;

  const std::string stem = std::filesystem::path(path).stem().string();
  static const std::regex kStem(R"((.+)_(\d+)x(\d+)_(\d+)(_lr.*)?)");
  std::smatch m;
  if (std::regex_match(stem, m, kStem)) {
    log.method = m[1].str();
  } else {
    throw ValidationError("run log name '" + stem +
                          "' does not follow {mode}_{n_layer}x{d_model}_{seed}");
  }

  std::string line;
  if (!std::getline(in, line) || line != "step,tokens,loss,flop_standard,flop_optimistic,flop_exact") {
    throw ValidationError("'" + path + "' lacks the run CSV header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("diverged") != std::string::npos) log.diverged = true;
      continue;
    }
    std::istringstream row(line);
    RunLogEntry e;
    char c;
    if (!(row >> e.step >> c >> e.tokens >> c >> e.loss >> c >> e.flop_standard >> c >>
          e.flop_optimistic >> c >> e.flop_exact)) {
      throw ValidationError("malformed row in '" + path + "': " + line);
    }
    log.entries.push_back(e);
  }
  return log;
}

std::vector<SweepSelection> sweep(const std::vector<RunConfig>& grid, const Corpus& corpus,
                                  const std::string& out_dir, int jobs) {
  if (grid.empty()) throw ParameterError("sweep needs a nonempty grid");
  if (jobs < 1) throw ParameterError("sweep needs jobs >= 1");
  namespace fs = std::filesystem;
  const fs::path candidates = fs::path(out_dir) / "candidates";
  fs::create_directories(candidates);

  struct Outcome {
    bool diverged = false;
    double final_loss = 0.0;
    std::string csv_path;
  };
  std::vector<Outcome> outcomes(grid.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      const RunConfig& cfg = grid[i];
      TrainResult r = train_run(cfg, corpus);
      Outcome& o = outcomes[i];
      o.diverged = r.diverged;
      o.final_loss = r.final_loss;
      std::ostringstream name;
      name << cfg.run_id() << "_lr" << fmt_double(cfg.optim.lr) << ".csv";
      o.csv_path = (candidates / name.str()).string();
      write_run_csv(r, o.csv_path);
      if (!r.alignment.empty()) {
        write_alignment_csv(r, (candidates / (cfg.run_id() + "_lr" + fmt_double(cfg.optim.lr) +
                                              "_alignment.csv"))
                                   .string());
      }
    }
  };
  if (jobs == 1 || grid.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n = std::min<int>(jobs, static_cast<int>(grid.size()));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  // Deterministic selection: iterate the grid in its given order, so the
  // winners are independent of thread scheduling.
  std::map<std::string, std::size_t> best;  // group key -> grid index
  std::vector<std::string> group_order;
  std::set<std::string> seen;
  std::map<std::string, std::vector<std::string>> failures;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const RunConfig& cfg = grid[i];
    const std::string key = to_string(cfg.mode) + "_" + std::to_string(cfg.model.n_layer) +
                            "x" + std::to_string(cfg.model.d_model);
    if (seen.insert(key).second) group_order.push_back(key);
    if (outcomes[i].diverged) {
      failures[key].push_back(outcomes[i].csv_path);
      continue;
    }
    auto it = best.find(key);
    if (it == best.end()) {
      best[key] = i;
    } else {
      const Outcome& incumbent = outcomes[it->second];
      const Outcome& challenger = outcomes[i];
      const bool better = challenger.final_loss < incumbent.final_loss ||
                          (challenger.final_loss == incumbent.final_loss &&
                           cfg.optim.lr < grid[it->second].optim.lr);
      if (better) it->second = i;
    }
  }

  std::vector<SweepSelection> selections;
  for (const std::string& key : group_order) {
    auto it = best.find(key);
    if (it == best.end()) {
      std::string listing;
      for (const std::string& f : failures[key]) listing += "\n  " + f;
      throw SweepError("every run in group " + key + " diverged:" + listing);
    }
    const RunConfig& cfg = grid[it->second];
    SweepSelection sel;
    sel.mode = cfg.mode;
    sel.n_layer = cfg.model.n_layer;
    sel.d_model = cfg.model.d_model;
    sel.best = cfg;
    sel.final_loss = outcomes[it->second].final_loss;
    fs::copy_file(outcomes[it->second].csv_path,
                  fs::path(out_dir) / (cfg.run_id() + ".csv"),
                  fs::copy_options::overwrite_existing);
    selections.push_back(std::move(sel));
  }
  return selections;
}

}  // namespace dfalab
