#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfalab/corpus.hpp"
#include "dfalab/diagnostics.hpp"
#include "dfalab/feedback.hpp"
#include "dfalab/model.hpp"
#include "dfalab/optim.hpp"

namespace dfalab {

struct RunConfig {
  ModelConfig model;
  FeedbackMode mode = FeedbackMode::Bp;
  OptimHyper optim;
  int warmup_steps = 100;        // linear warmup into the constant rate
  double b_init_std = 0.0;       // <= 0 resolves to 1/sqrt(d_model)
  std::uint64_t seed = 1;
  std::uint64_t total_tokens = 0;
  int batch_size = 16;
  int log_interval = 20;
  int alignment_interval = 0;    // 0 disables alignment records

  /// Canonical run name: {mode}_{n_layer}x{d_model}_{seed}.
  std::string run_id() const;
  double resolved_b_init_std() const;
  void validate() const;
};

struct RunLogEntry {
  std::int64_t step = 0;
  std::uint64_t tokens = 0;      // cumulative tokens consumed (D)
  double loss = 0.0;             // running mean since the previous entry
  double flop_standard = 0.0;
  double flop_optimistic = 0.0;
  double flop_exact = 0.0;
};

struct TrainResult {
  RunConfig config;
  std::vector<RunLogEntry> entries;
  std::vector<AlignmentRecord> alignment;
  bool diverged = false;
  std::int64_t diverged_step = -1;
  double final_loss = 0.0;       // loss of the last log entry
  Model model;                   // parameters after the final step
};

/// One deterministic single-epoch run: sequential non-overlapping context
/// windows, batched `batch_size` at a time; per step forward -> error ->
/// compute_updates(mode) -> clip -> apply. Divergence (non-finite loss or
/// gradients) aborts the run and is reported in the result, never hidden.
TrainResult train_run(const RunConfig& config, const Corpus& corpus);

/// Run CSV: "step,tokens,loss,flop_standard,flop_optimistic,flop_exact"
/// rows, with a trailing "# diverged at step N" comment when the run
/// aborted. Doubles are printed round-trip exact.
void write_run_csv(const TrainResult& result, const std::string& path);

/// Companion file (<run>_alignment.csv): "step,tensor,cosine" rows; the
/// cosine field is empty for null (zero-norm) entries.
void write_alignment_csv(const TrainResult& result, const std::string& path);

struct ParsedRunLog {
  std::string method;
  std::vector<RunLogEntry> entries;
  bool diverged = false;
};

/// Reads a run CSV written by write_run_csv; the method is parsed from the
/// filename's {mode}_{n_layer}x{d_model}_{seed} stem.
ParsedRunLog read_run_csv(const std::string& path);

struct SweepSelection {
  FeedbackMode mode = FeedbackMode::Bp;
  int n_layer = 0;
  int d_model = 0;
  RunConfig best;
  double final_loss = 0.0;
};

/// Runs every config (optionally on `jobs` worker threads), writes one CSV
/// per candidate under out_dir/candidates/, copies each (mode, size)
/// winner's log to out_dir under the canonical run name, and returns the
/// winners (argmin final loss, ties to the lower learning rate). A
/// (mode, size) group whose runs all diverged is a sweep error. Results are
/// bitwise-independent of the thread count.
std::vector<SweepSelection> sweep(const std::vector<RunConfig>& grid, const Corpus& corpus,
                                  const std::string& out_dir, int jobs = 1);

}  // namespace dfalab
