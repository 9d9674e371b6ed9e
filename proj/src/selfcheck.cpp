#include "dfalab/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dfalab/backward.hpp"
#include "dfalab/compute.hpp"
#include "dfalab/diagnostics.hpp"
#include "dfalab/feedback.hpp"
#include "dfalab/frontier.hpp"
#include "dfalab/model.hpp"
#include "dfalab/rng.hpp"

namespace dfalab {

namespace {

ModelConfig tiny_config(int n_layer, int d_model) {
  ModelConfig c;
  c.n_layer = n_layer;
  c.d_model = d_model;
  c.n_head = 2;
  c.d_ff = 4 * d_model;
  c.vocab_size = 64;
  c.context = 16;
  return c;
}

std::vector<int> tiny_tokens(int count, int vocab, std::uint64_t seed) {
  RngState rng(seed);
  std::vector<int> tokens(static_cast<std::size_t>(count));
  for (int& t : tokens) t = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(vocab));
  return tokens;
}

CheckResult check_finite_diff() {
  CheckResult r{"backward_bp vs central differences (d_model=16, n_layer=2)", false, ""};
  const Model model = init_model(tiny_config(2, 16), RngState(7));
  const std::vector<int> tokens = tiny_tokens(8, model.config.vocab_size, 11);
  const FiniteDiffReport report = finite_diff_check(model, tokens, 1e-5, 8);
  std::ostringstream detail;
  detail << "max relative error " << report.max_rel_err;
  r.detail = detail.str();
  r.passed = report.max_rel_err < 1e-4;
  return r;
}

CheckResult check_determinism() {
  CheckResult r{"initialization and forward are seed-deterministic", false, ""};
  const ModelConfig cfg = tiny_config(2, 16);
  const Model a = init_model(cfg, RngState(21));
  const Model b = init_model(cfg, RngState(21));
  const std::vector<int> tokens = tiny_tokens(8, cfg.vocab_size, 5);
  const bool models_equal = hash_params(a.params) == hash_params(b.params);
  const Matrix la = forward(a, tokens).logits;
  const Matrix lb = forward(b, tokens).logits;
  r.passed = models_equal && (la.array() == lb.array()).all();
  r.detail = models_equal ? "bitwise-identical models and logits" : "model hashes differ";
  return r;
}

CheckResult check_degeneracy() {
  CheckResult r{"all strategies coincide on the single-block model", false, ""};
  const Model model = init_model(tiny_config(1, 16), RngState(3));
  const std::vector<int> tokens = tiny_tokens(8, model.config.vocab_size, 9);
  const ForwardTape tape = forward(model, tokens);
  const FeedbackMatrix fb =
      make_feedback_matrix(model.config.d_model, RngState(99),
                           1.0 / std::sqrt(static_cast<double>(model.config.d_model)));
  const Gradients bp = compute_updates(FeedbackMode::Bp, model, tape, nullptr).grads;
  bool ok = true;
  for (const FeedbackMode mode : {FeedbackMode::DfaCanonical, FeedbackMode::DfaBlockwise,
                                  FeedbackMode::Shallow}) {
    const Gradients g = compute_updates(mode, model, tape, &fb).grads;
    // Embeddings follow each mode's own rule; every block/head tensor must
    // be bitwise equal to BP because the only block is the BP-trained one.
    std::vector<const Matrix*> got, want;
    g.for_each([&](const std::string& n, const Matrix& m) {
      if (n != "tok_emb" && n != "pos_emb") got.push_back(&m);
    });
    bp.for_each([&](const std::string& n, const Matrix& m) {
      if (n != "tok_emb" && n != "pos_emb") want.push_back(&m);
    });
    for (std::size_t i = 0; i < got.size(); ++i) {
      ok = ok && (got[i]->array() == want[i]->array()).all();
    }
  }
  r.passed = ok;
  r.detail = ok ? "non-embedding gradients bitwise equal across modes" : "gradients diverge";
  return r;
}

CheckResult check_pareto() {
  CheckResult r{"pareto_front equals the all-pairs dominance oracle", false, ""};
  RngState rng(13);
  bool ok = true;
  for (int trial = 0; trial < 20 && ok; ++trial) {
    std::vector<ParetoPoint> points;
    const int n = 1 + static_cast<int>(rng.next_u64() % 60);
    for (int i = 0; i < n; ++i) {
      points.push_back({0.1 + rng.next_unit(), 0.1 + rng.next_unit(),
                        std::to_string(i)});
    }
    const std::vector<ParetoPoint> front = pareto_front(points);
    std::vector<ParetoPoint> oracle;
    for (const ParetoPoint& p : points) {
      bool dominated = false;
      for (const ParetoPoint& q : points) {
        if ((q.compute <= p.compute && q.loss < p.loss) ||
            (q.compute < p.compute && q.loss <= p.loss)) {
          dominated = true;
          break;
        }
      }
      if (!dominated) oracle.push_back(p);
    }
    std::sort(oracle.begin(), oracle.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
      return a.compute < b.compute;
    });
    ok = front.size() == oracle.size();
    for (std::size_t i = 0; ok && i < front.size(); ++i) {
      ok = front[i].compute == oracle[i].compute && front[i].loss == oracle[i].loss;
    }
  }
  r.passed = ok;
  r.detail = ok ? "20 random instances agree" : "front size mismatch vs oracle";
  return r;
}

CheckResult check_fit_recovery() {
  CheckResult r{"power-law fit recovers its generator", false, ""};
  std::vector<ParetoPoint> front;
  const double alpha = -0.071, cc = 3.8e3;
  for (int i = 0; i < 24; ++i) {
    const double c = std::pow(10.0, -3.0 + 0.25 * i);
    front.push_back({c, std::exp(alpha * (std::log(c) - std::log(cc))), "synthetic"});
  }
  const PowerLawFit fit = fit_power_law(front);
  const double rel_a = std::abs(fit.alpha_c - alpha) / std::abs(alpha);
  const double rel_c = std::abs(fit.c_c - cc) / cc;
  std::ostringstream detail;
  detail << "relative errors alpha " << rel_a << ", C_c " << rel_c;
  r.detail = detail.str();
  r.passed = rel_a < 1e-9 && rel_c < 1e-9;
  return r;
}

CheckResult check_ledger() {
  CheckResult r{"compute ledger arithmetic", false, ""};
  const bool bp_exact =
      training_cost(FeedbackMode::Bp, Accounting::Standard, 57e6, 30e9, 576) == 1.026e19;
  const double ratio =
      training_cost(FeedbackMode::DfaBlockwise, Accounting::Standard, 57e6, 30e9, 576) /
      training_cost(FeedbackMode::Bp, Accounting::Standard, 57e6, 30e9, 576);
  r.passed = bp_exact && ratio == 2.0 / 3.0;
  r.detail = r.passed ? "6ND exact; DFA/BP ratio exactly 2/3" : "arithmetic drifted";
  return r;
}

}  // namespace

std::vector<CheckResult> run_self_checks() {
  return {check_finite_diff(), check_determinism(), check_degeneracy(),
          check_pareto(),      check_fit_recovery(), check_ledger()};
}

}  // namespace dfalab
