#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"

#include "dfalab/diagnostics.hpp"
#include "dfalab/feedback.hpp"
#include "dfalab/model.hpp"
#include "dfalab/rng.hpp"

#include "test_support.hpp"

using dfalab::FeedbackMatrix;
using dfalab::FeedbackMode;
using dfalab::Matrix;
using dfalab::Model;
using dfalab::ModelConfig;
using dfalab::RngState;

TEST_CASE("alignment: n_layer=1 blockwise gives exact cosine 1 everywhere") {
  ModelConfig c = testsupport::tiny_config(1, 16);
  Model m = dfalab::init_model(c, RngState(1));
  const std::vector<int> tokens = testsupport::tokens_for(6, c.vocab_size, 2);
  dfalab::ForwardTape tape = dfalab::forward(m, tokens);
  FeedbackMatrix fb = dfalab::make_feedback_matrix(16, RngState(3), 0.25);

  dfalab::AlignmentRecord rec =
      dfalab::alignment(m, tape, tokens, fb, FeedbackMode::DfaBlockwise, 7);
  CHECK(rec.step == 7);
  CHECK_FALSE(rec.entries.empty());
  for (const dfalab::AlignmentEntry& e : rec.entries) {
    REQUIRE_MESSAGE(e.cosine.has_value(), e.tensor);
    CHECK_MESSAGE(*e.cosine == 1.0, e.tensor);  // exactly: both paths are BP
  }
}

TEST_CASE("alignment: cosines match an independent dot/norm oracle") {
  ModelConfig c = testsupport::tiny_config(2, 16);
  c.residual_backward = dfalab::ResidualBackward::Asymmetric;
  c.backward_derivative = dfalab::BackwardDerivative::Tanh;
  Model m = dfalab::init_model(c, RngState(4));
  const std::vector<int> tokens = testsupport::tokens_for(8, c.vocab_size, 5);
  dfalab::ForwardTape tape = dfalab::forward(m, tokens);
  FeedbackMatrix fb = dfalab::make_feedback_matrix(16, RngState(6), 0.25);

  dfalab::AlignmentRecord rec =
      dfalab::alignment(m, tape, tokens, fb, FeedbackMode::DfaBlockwise);

  auto dfa = dfalab::compute_updates(FeedbackMode::DfaBlockwise, m, tape, &fb);
  auto bp = dfalab::compute_updates(FeedbackMode::Bp, m, tape, nullptr);
  std::vector<std::pair<std::string, double>> oracle;
  dfa.grads.for_each([&](const std::string& name, const Matrix& a) {
    bp.grads.for_each([&](const std::string& n2, const Matrix& b) {
      if (n2 != name) return;
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        dot += a.data()[i] * b.data()[i];
        na += a.data()[i] * a.data()[i];
        nb += b.data()[i] * b.data()[i];
      }
      oracle.emplace_back(name, dot / std::sqrt(na * nb));
    });
  });

  REQUIRE(rec.entries.size() == oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(rec.entries[i].tensor == oracle[i].first);
    REQUIRE(rec.entries[i].cosine.has_value());
    CHECK(std::abs(*rec.entries[i].cosine - oracle[i].second) < 1e-12);
    CHECK(*rec.entries[i].cosine <= 1.0 + 1e-12);
    CHECK(*rec.entries[i].cosine >= -1.0 - 1e-12);
  }
}

TEST_CASE("alignment: flipping B's sign flips every non-head cosine") {
  // DFA gradients below the head are linear in B, so B -> -B negates them
  // exactly: the antiparallel pair (g, -g) has cosine -1 relative to itself,
  // and against BP the recorded cosine flips sign.
  ModelConfig c = testsupport::tiny_config(2, 16);
  Model m = dfalab::init_model(c, RngState(7));
  const std::vector<int> tokens = testsupport::tokens_for(6, c.vocab_size, 8);
  dfalab::ForwardTape tape = dfalab::forward(m, tokens);
  FeedbackMatrix fb = dfalab::make_feedback_matrix(16, RngState(9), 0.25);
  FeedbackMatrix neg = fb;
  neg.b = -fb.b;

  dfalab::AlignmentRecord pos_rec =
      dfalab::alignment(m, tape, tokens, fb, FeedbackMode::DfaBlockwise);
  dfalab::AlignmentRecord neg_rec =
      dfalab::alignment(m, tape, tokens, neg, FeedbackMode::DfaBlockwise);

  auto pos_dfa = dfalab::compute_updates(FeedbackMode::DfaBlockwise, m, tape, &fb);
  auto neg_dfa = dfalab::compute_updates(FeedbackMode::DfaBlockwise, m, tape, &neg);
  // The antiparallel pair itself: cosine((g, -g)) = -1 by direct evaluation.
  const Matrix& g = pos_dfa.grads.blocks[0].w1;
  const Matrix& h = neg_dfa.grads.blocks[0].w1;
  CHECK((h + g).cwiseAbs().maxCoeff() == 0.0);  // h is exactly -g
  const double cos_gh = (g.array() * h.array()).sum() / (g.norm() * h.norm());
  CHECK(cos_gh == doctest::Approx(-1.0).epsilon(1e-12));

  for (std::size_t i = 0; i < pos_rec.entries.size(); ++i) {
    const dfalab::AlignmentEntry& p = pos_rec.entries[i];
    const dfalab::AlignmentEntry& n = neg_rec.entries[i];
    REQUIRE(p.tensor == n.tensor);
    if (!p.cosine.has_value()) continue;
    const bool head = p.tensor.rfind("block1", 0) == 0 || p.tensor.rfind("lnf", 0) == 0 ||
                      p.tensor == "w_proj";
    if (head) {
      CHECK(*n.cosine == 1.0);  // head slice is BP in both, independent of B
    } else {
      CHECK(std::abs(*n.cosine + *p.cosine) < 1e-12);
    }
  }
}

TEST_CASE("alignment: invariant under positive rescaling of B") {
  // Scaling B scales every DFA-side gradient below the head; cosines must
  // not move (scale invariance of the angle).
  ModelConfig c = testsupport::tiny_config(2, 16);
  Model m = dfalab::init_model(c, RngState(10));
  const std::vector<int> tokens = testsupport::tokens_for(6, c.vocab_size, 11);
  dfalab::ForwardTape tape = dfalab::forward(m, tokens);
  FeedbackMatrix fb = dfalab::make_feedback_matrix(16, RngState(12), 0.25);
  FeedbackMatrix scaled = fb;
  scaled.b = 4.0 * fb.b;

  dfalab::AlignmentRecord a = dfalab::alignment(m, tape, tokens, fb, FeedbackMode::DfaBlockwise);
  dfalab::AlignmentRecord b =
      dfalab::alignment(m, tape, tokens, scaled, FeedbackMode::DfaBlockwise);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    REQUIRE(a.entries[i].cosine.has_value() == b.entries[i].cosine.has_value());
    if (a.entries[i].cosine.has_value()) {
      CHECK(std::abs(*a.entries[i].cosine - *b.entries[i].cosine) < 1e-12);
    }
  }
}

TEST_CASE("alignment: canonical mode records nulls for frozen norms") {
  ModelConfig c = testsupport::tiny_config(2, 16);
  Model m = dfalab::init_model(c, RngState(13));
  const std::vector<int> tokens = testsupport::tokens_for(6, c.vocab_size, 14);
  dfalab::ForwardTape tape = dfalab::forward(m, tokens);
  FeedbackMatrix fb = dfalab::make_feedback_matrix(16, RngState(15), 0.25);

  dfalab::AlignmentRecord rec =
      dfalab::alignment(m, tape, tokens, fb, FeedbackMode::DfaCanonical);
  int nulls = 0;
  for (const dfalab::AlignmentEntry& e : rec.entries) {
    if (e.tensor.rfind("block0.ln", 0) == 0) {
      CHECK_FALSE(e.cosine.has_value());  // canonical freezes non-final norms
      ++nulls;
    } else if (e.tensor == "w_proj") {
      REQUIRE(e.cosine.has_value());
      CHECK(*e.cosine == 1.0);
    }
  }
  CHECK(nulls == 4);  // ln1_g, ln1_b, ln2_g, ln2_b of the non-final block
}

TEST_CASE("alignment: BP and Shallow are usage errors") {
  ModelConfig c = testsupport::tiny_config(1, 16);
  Model m = dfalab::init_model(c, RngState(16));
  const std::vector<int> tokens = testsupport::tokens_for(4, c.vocab_size, 17);
  dfalab::ForwardTape tape = dfalab::forward(m, tokens);
  FeedbackMatrix fb = dfalab::make_feedback_matrix(16, RngState(18), 0.25);
  CHECK_THROWS_AS(dfalab::alignment(m, tape, tokens, fb, FeedbackMode::Bp),
                  dfalab::UsageError);
  CHECK_THROWS_AS(dfalab::alignment(m, tape, tokens, fb, FeedbackMode::Shallow),
                  dfalab::UsageError);

  std::vector<int> other = tokens;
  other[1] = (other[1] + 1) % c.vocab_size;
  CHECK_THROWS_AS(dfalab::alignment(m, tape, other, fb, FeedbackMode::DfaBlockwise),
                  dfalab::ConsistencyError);
}

TEST_CASE("central_diff: exact on linear maps, near-exact on smooth ones") {
  auto linear = [](double x) { return 3.0 * x + 1.0; };
  CHECK(std::abs(dfalab::central_diff(linear, 0.7, 1e-3) - 3.0) < 1e-9);

  auto quad = [](double x) { return x * x; };
  CHECK(dfalab::central_diff(quad, 1.5, 1e-5) == doctest::Approx(3.0).epsilon(1e-9));

  CHECK_THROWS_AS(dfalab::central_diff(linear, 0.0, 0.0), dfalab::ParameterError);
}

TEST_CASE("central_diff: linear-only toy head is exact to rounding") {
  // Projector as a plain matmul with a fixed linear functional on top: the
  // loss is linear in each weight, so the analytic gradient X^T C matches
  // central differences at machine-precision scale.
  RngState rng(19);
  Matrix x = dfalab::gaussian(rng, 3, 4, 1.0);
  Matrix w = dfalab::gaussian(rng, 4, 5, 1.0);
  Matrix coeff = dfalab::gaussian(rng, 3, 5, 1.0);
  Matrix analytic = x.transpose() * coeff;

  for (Eigen::Index flat = 0; flat < w.size(); flat += 3) {
    const double fd = dfalab::central_diff(
        [&](double v) {
          Matrix probe = w;
          probe.data()[flat] = v;
          return (x * probe).cwiseProduct(coeff).sum();
        },
        w.data()[flat], 1e-3);
    CHECK(std::abs(fd - analytic.data()[flat]) <
          1e-9 * std::max(1.0, std::abs(analytic.data()[flat])));
  }
}

TEST_CASE("finite_diff_check: d_model=16 n_layer=2 passes at 1e-4") {
  ModelConfig c = testsupport::tiny_config(2, 16, 2, 48, 10);
  Model m = dfalab::init_model(c, RngState(20));
  const std::vector<int> tokens = testsupport::tokens_for(8, c.vocab_size, 21);

  dfalab::FiniteDiffReport report = dfalab::finite_diff_check(m, tokens, 1e-5, 8);
  CHECK(report.max_rel_err < 1e-4);
  CHECK_FALSE(report.entries.empty());
  for (const dfalab::FiniteDiffEntry& e : report.entries) {
    CHECK(e.probed >= 1);
    CHECK(e.max_rel_err <= report.max_rel_err);
  }

  // Small tensors are probed exhaustively (ln gains: 16 coords < 32).
  dfalab::FiniteDiffReport full = dfalab::finite_diff_check(m, tokens, 1e-5, 32);
  for (const dfalab::FiniteDiffEntry& e : full.entries) {
    if (e.tensor == "lnf_g") CHECK(e.probed == 16);
  }
}

TEST_CASE("finite_diff_check: coarse epsilon is truncation-dominated") {
  ModelConfig c = testsupport::tiny_config(1, 16, 2, 32, 8);
  Model m = dfalab::init_model(c, RngState(22));
  const std::vector<int> tokens = testsupport::tokens_for(6, c.vocab_size, 23);

  dfalab::FiniteDiffReport fine = dfalab::finite_diff_check(m, tokens, 1e-5, 8);
  dfalab::FiniteDiffReport coarse = dfalab::finite_diff_check(m, tokens, 1e-1, 8);
  CHECK(coarse.max_rel_err > fine.max_rel_err);

  CHECK_THROWS_AS(dfalab::finite_diff_check(m, tokens, 0.0, 8), dfalab::ParameterError);
}

TEST_CASE("finite_diff_check: non-finite forward surfaces as a numeric error") {
  ModelConfig c = testsupport::tiny_config(1, 16, 2, 32, 8);
  Model m = dfalab::init_model(c, RngState(24));
  m.params.w_proj(0, 0) = std::numeric_limits<double>::infinity();
  const std::vector<int> tokens = testsupport::tokens_for(4, c.vocab_size, 25);
  CHECK_THROWS_AS(dfalab::finite_diff_check(m, tokens, 1e-5, 4), dfalab::NumericError);
}
