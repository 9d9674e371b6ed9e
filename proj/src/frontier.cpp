#include "dfalab/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "dfalab/errors.hpp"

namespace dfalab {

std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points) {
  for (const ParetoPoint& p : points) {
    if (!(p.compute > 0.0) || !(p.loss > 0.0)) {
      throw ParameterError("pareto_front needs positive compute and loss, got (" +
                           std::to_string(p.compute) + ", " + std::to_string(p.loss) + ")");
    }
  }
  std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    return std::tie(a.compute, a.loss, a.run_id) < std::tie(b.compute, b.loss, b.run_id);
  });
  // After the sort, a point survives iff its loss strictly improves on
  // everything cheaper-or-equal seen so far; that is exactly non-dominance,
  // and it drops (C, L) duplicates beyond the first.
  std::vector<ParetoPoint> front;
  double best_loss = std::numeric_limits<double>::infinity();
  for (ParetoPoint& p : points) {
    if (p.loss < best_loss) {
      best_loss = p.loss;
      front.push_back(std::move(p));
    }
  }
  return front;
}

PowerLawFit fit_power_law(const std::vector<ParetoPoint>& front) {
  if (front.size() < 2) {
    throw DegenerateFitError("power-law fit needs at least 2 points, got " +
                             std::to_string(front.size()));
  }
  const double n = static_cast<double>(front.size());
  double sx = 0.0, sy = 0.0;
  for (const ParetoPoint& p : front) {
    if (!(p.compute > 0.0) || !(p.loss > 0.0)) {
      throw ParameterError("power-law fit needs positive compute and loss");
    }
    sx += std::log(p.compute);
    sy += std::log(p.loss);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const ParetoPoint& p : front) {
    const double dx = std::log(p.compute) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.loss) - my);
  }
  if (sxx == 0.0) {
    throw DegenerateFitError("all points share one compute value; slope is undefined");
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  if (std::abs(slope) <= 1e-12) {
    throw DegenerateFitError("flat front (alpha_C = 0 within 1e-12); C_c is undefined");
  }
  PowerLawFit fit;
  fit.alpha_c = slope;
  fit.c_c = std::exp(-intercept / slope);
  fit.n_points = static_cast<int>(front.size());
  double ss = 0.0;
  for (const ParetoPoint& p : front) {
    const double r = std::log(p.loss) - (slope * std::log(p.compute) + intercept);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

double power_law_loss(const PowerLawFit& fit, double compute) {
  if (!(compute > 0.0)) throw ParameterError("power_law_loss needs compute > 0");
  if (!(fit.c_c > 0.0)) throw ParameterError("power_law_loss needs a valid fit (C_c > 0)");
  return std::exp(fit.alpha_c * (std::log(compute) - std::log(fit.c_c)));
}

namespace {

double log_loss(const PowerLawFit& fit, double compute) {
  return fit.alpha_c * (std::log(compute) - std::log(fit.c_c));
}

}  // namespace

ScenarioReport compare_frontiers(const PowerLawFit& fit_a, const PowerLawFit& fit_b,
                                 double budget_lo, double budget_hi) {
  if (!(budget_lo > 0.0) || !(budget_hi > budget_lo)) {
    throw ParameterError("budget range must satisfy 0 < lo < hi");
  }
  if (!(fit_a.c_c > 0.0) || !(fit_b.c_c > 0.0) || fit_a.alpha_c == 0.0 ||
      fit_b.alpha_c == 0.0) {
    throw ParameterError("compare_frontiers needs two valid fits");
  }

  ScenarioReport report;
  if (fit_a.alpha_c == fit_b.alpha_c && fit_a.c_c == fit_b.c_c) {
    report.tie = true;
    return report;
  }

  if (fit_a.alpha_c != fit_b.alpha_c) {
    // (C*/CcA)^aA = (C*/CcB)^aB  =>  ln C* = (aA ln CcA - aB ln CcB) / (aA - aB).
    const double ln_cross = (fit_a.alpha_c * std::log(fit_a.c_c) -
                             fit_b.alpha_c * std::log(fit_b.c_c)) /
                            (fit_a.alpha_c - fit_b.alpha_c);
    if (ln_cross >= std::log(budget_lo) && ln_cross <= std::log(budget_hi)) {
      report.crossover = std::exp(ln_cross);
    }
  }

  const bool a_wins_low = log_loss(fit_a, budget_lo) < log_loss(fit_b, budget_lo);
  const bool a_wins_high = log_loss(fit_a, budget_hi) < log_loss(fit_b, budget_hi);
  report.winner_low = a_wins_low ? "fit_a" : "fit_b";
  report.winner_high = a_wins_high ? "fit_a" : "fit_b";
  if (a_wins_low && a_wins_high) {
    report.scenario = 'D';
  } else if (!a_wins_low && !a_wins_high) {
    report.scenario = 'A';
  } else if (a_wins_low && !a_wins_high) {
    report.scenario = 'B';  // challenger overtakes at scale
  } else {
    report.scenario = 'C';
  }
  return report;
}

}  // namespace dfalab
