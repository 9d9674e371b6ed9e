#include <vector>

#include "doctest.h"

#include "dfalab/compute.hpp"
#include "dfalab/model.hpp"

#include "test_support.hpp"

using dfalab::Accounting;
using dfalab::FeedbackMode;

TEST_CASE("param_count_estimate: closed-form values") {
  CHECK(dfalab::param_count_estimate(24, 1024) == 301989888LL);
  CHECK(dfalab::param_count_estimate(1, 1) == 12LL);
  CHECK_THROWS_AS(dfalab::param_count_estimate(0, 64), dfalab::ParameterError);
  CHECK_THROWS_AS(dfalab::param_count_estimate(2, 0), dfalab::ParameterError);
}

TEST_CASE("param_count_estimate tracks the exact count on the sweep grid") {
  // The 12 L d_model^2 asymptotic ignores embeddings and norms. On the toy
  // grid it lands within 25% of the exact shape sum everywhere except the
  // smallest (2, 64) model, whose parameters are ~40% embeddings; that one
  // sits just under 30% off and is pinned at a documented 35% bound.
  struct Case {
    int n_layer, d_model;
    double bound;
  };
  const std::vector<Case> grid = {
      {2, 64, 0.35}, {2, 128, 0.25}, {2, 192, 0.25},
      {4, 64, 0.25}, {4, 128, 0.25}, {4, 192, 0.25},
      {6, 64, 0.25}, {6, 128, 0.25}, {6, 192, 0.25},
  };
  for (const Case& tc : grid) {
    dfalab::ModelConfig c = testsupport::tiny_config(tc.n_layer, tc.d_model,
                                                     std::max(1, tc.d_model / 32), 256, 128);
    const double exact = static_cast<double>(dfalab::exact_param_count(c));
    const double est = static_cast<double>(dfalab::param_count_estimate(tc.n_layer, tc.d_model));
    CHECK(std::abs(est - exact) / exact < tc.bound);
  }
  // The documented exception really is an exception, not slack.
  dfalab::ModelConfig small = testsupport::tiny_config(2, 64, 2, 256, 128);
  const double exact = static_cast<double>(dfalab::exact_param_count(small));
  const double est = static_cast<double>(dfalab::param_count_estimate(2, 64));
  CHECK(std::abs(est - exact) / exact > 0.25);
}

TEST_CASE("training_cost: paper-scale BP cost is exact") {
  const double n = 57e6, d = 30e9;
  CHECK(dfalab::training_cost(FeedbackMode::Bp, Accounting::Standard, n, d, 576) == 1.026e19);
  // BP costs the same under every accounting.
  CHECK(dfalab::training_cost(FeedbackMode::Bp, Accounting::Optimistic, n, d, 576) == 1.026e19);
  CHECK(dfalab::training_cost(FeedbackMode::Bp, Accounting::ExactBlockwise, n, d, 576) ==
        1.026e19);
}

TEST_CASE("training_cost: DFA/BP standard ratio is exactly 2/3") {
  const double n = 57e6, d = 30e9;
  const double dfa = dfalab::training_cost(FeedbackMode::DfaBlockwise, Accounting::Standard,
                                           n, d, 576);
  const double bp = dfalab::training_cost(FeedbackMode::Bp, Accounting::Standard, n, d, 576);
  CHECK(dfa / bp == 2.0 / 3.0);

  const double dfa2 = dfalab::training_cost(FeedbackMode::DfaCanonical, Accounting::Standard,
                                            1.5e5, 2.5e8, 64);
  const double bp2 = dfalab::training_cost(FeedbackMode::Bp, Accounting::Standard,
                                           1.5e5, 2.5e8, 64);
  CHECK(dfa2 / bp2 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("training_cost: exact_blockwise adds 2 d_model^2 D") {
  const double n = 57e6, d = 30e9;
  const double std_cost =
      dfalab::training_cost(FeedbackMode::DfaBlockwise, Accounting::Standard, n, d, 576);
  const double exact_cost =
      dfalab::training_cost(FeedbackMode::DfaBlockwise, Accounting::ExactBlockwise, n, d, 576);
  CHECK(exact_cost - std_cost == 1.990656e16);  // 2 * 576^2 * 3e10
}

TEST_CASE("training_cost: ordering invariant across modes") {
  for (double n : {139904.0, 870656.0, 2782080.0}) {
    for (double d : {1e5, 2e6, 3e9}) {
      const int dm = 64;
      const double shallow =
          dfalab::training_cost(FeedbackMode::Shallow, Accounting::Standard, n, d, dm);
      const double dfa_opt =
          dfalab::training_cost(FeedbackMode::DfaBlockwise, Accounting::Optimistic, n, d, dm);
      const double dfa_std =
          dfalab::training_cost(FeedbackMode::DfaBlockwise, Accounting::Standard, n, d, dm);
      const double dfa_exact =
          dfalab::training_cost(FeedbackMode::DfaBlockwise, Accounting::ExactBlockwise, n, d, dm);
      const double bp =
          dfalab::training_cost(FeedbackMode::Bp, Accounting::Standard, n, d, dm);
      CHECK(shallow == dfa_opt);
      CHECK(dfa_opt < dfa_std);
      CHECK(dfa_std < dfa_exact);  // d_model^2 < N for every real config
      CHECK(dfa_exact < bp);
    }
  }
}

TEST_CASE("training_cost: exactly linear in D") {
  for (FeedbackMode mode : {FeedbackMode::Bp, FeedbackMode::DfaBlockwise,
                            FeedbackMode::DfaCanonical, FeedbackMode::Shallow}) {
    for (Accounting acc : {Accounting::Standard, Accounting::Optimistic,
                           Accounting::ExactBlockwise}) {
      const double c1 = dfalab::training_cost(mode, acc, 870656.0, 1.25e6, 128);
      const double c2 = dfalab::training_cost(mode, acc, 870656.0, 2.5e6, 128);
      CHECK(c2 == 2.0 * c1);
    }
  }
}

TEST_CASE("training_cost: feedback-projection overhead ratio bound") {
  // overhead / 2ND = d_model^2 / N; with the asymptotic N this is exactly
  // 1/(12 n_layer), and the exact N only makes it smaller.
  for (int n_layer : {2, 4, 6}) {
    for (int dm : {64, 128, 192}) {
      const double n_est = static_cast<double>(dfalab::param_count_estimate(n_layer, dm));
      const double d = 1e6;
      const double overhead =
          dfalab::training_cost(FeedbackMode::DfaBlockwise, Accounting::ExactBlockwise, n_est,
                                d, dm) -
          dfalab::training_cost(FeedbackMode::DfaBlockwise, Accounting::Standard, n_est, d, dm);
      const double ratio = overhead / (2.0 * n_est * d);
      CHECK(ratio == doctest::Approx(1.0 / (12.0 * n_layer)).epsilon(1e-12));

      dfalab::ModelConfig c = testsupport::tiny_config(n_layer, dm, std::max(1, dm / 32), 256, 128);
      const double n_exact = static_cast<double>(dfalab::exact_param_count(c));
      const double overhead2 =
          dfalab::training_cost(FeedbackMode::DfaBlockwise, Accounting::ExactBlockwise, n_exact,
                                d, dm) -
          dfalab::training_cost(FeedbackMode::DfaBlockwise, Accounting::Standard, n_exact, d, dm);
      CHECK(overhead2 / (2.0 * n_exact * d) <= 1.0 / (12.0 * n_layer));
    }
  }
}

TEST_CASE("training_cost: argument validation") {
  CHECK_THROWS_AS(dfalab::training_cost(FeedbackMode::Bp, Accounting::Standard, -1.0, 1.0, 64),
                  dfalab::ParameterError);
  CHECK_THROWS_AS(dfalab::training_cost(FeedbackMode::Bp, Accounting::Standard, 1.0, -1.0, 64),
                  dfalab::ParameterError);
  CHECK_THROWS_AS(dfalab::training_cost(FeedbackMode::DfaBlockwise, Accounting::ExactBlockwise,
                                        1.0, 1.0, 0),
                  dfalab::ParameterError);
  // Zero tokens cost zero, in every mode.
  CHECK(dfalab::training_cost(FeedbackMode::Bp, Accounting::Standard, 1e6, 0.0, 64) == 0.0);
}

TEST_CASE("to_pf_days: definition and round values") {
  CHECK(dfalab::to_pf_days(8.64e19) == 1.0);
  CHECK(dfalab::to_pf_days(0.0) == 0.0);
  CHECK(dfalab::to_pf_days(1.026e19) == doctest::Approx(0.11875).epsilon(1e-15));
  CHECK_THROWS_AS(dfalab::to_pf_days(-1.0), dfalab::ParameterError);
}

TEST_CASE("accounting names are stable") {
  CHECK(dfalab::to_string(Accounting::Standard) == "standard");
  CHECK(dfalab::to_string(Accounting::Optimistic) == "optimistic");
  CHECK(dfalab::to_string(Accounting::ExactBlockwise) == "exact_blockwise");
}
