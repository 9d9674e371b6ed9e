#pragma once

#include <optional>
#include <string>
#include <vector>

namespace dfalab {

struct ParetoPoint {
  double compute = 0.0;  // PF-days
  double loss = 0.0;
  std::string run_id;
};

/// Points not dominated by any other ((C' <= C and L' < L) or (C' < C and
/// L' <= L)), sorted by compute ascending -- hence strictly decreasing in
/// loss -- with exact (C, L) duplicates reduced to one point.
std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points);

/// L(C) = (C / C_c)^alpha_C. alpha_C < 0 on real frontiers, so a smaller
/// C_c shifts the whole curve down (a better offset).
struct PowerLawFit {
  double alpha_c = 0.0;
  double c_c = 0.0;            // PF-days
  double residual_rms = 0.0;   // in log-log space
  int n_points = 0;
};

/// Ordinary least squares on log L = alpha_C (log C - log C_c). Requires
/// >= 2 points with positive coordinates and distinct compute values;
/// a flat front (|alpha_C| <= 1e-12) has no defined C_c -> degenerate-fit
/// error.
PowerLawFit fit_power_law(const std::vector<ParetoPoint>& front);

/// Evaluates the fitted law at a budget (computed in log space so offsets
/// as extreme as C_c ~ 1e33 stay finite).
double power_law_loss(const PowerLawFit& fit, double compute);

/// Frontier comparison over a budget interval. Scenario letters follow the
/// fitA-is-the-incumbent convention used throughout the reports (fitA = BP,
/// fitB = the challenger):
///   A  challenger better at every budget
///   B  crossover, challenger better at the high end
///   C  crossover, challenger better at the low end only
///   D  incumbent better at every budget
/// Swapping the arguments maps A<->D and B<->C and keeps the crossover.
struct ScenarioReport {
  bool tie = false;
  std::optional<char> scenario;
  std::string winner_low;         // "fit_a" or "fit_b"
  std::string winner_high;
  std::optional<double> crossover;  // PF-days, only when inside the interval
};

ScenarioReport compare_frontiers(const PowerLawFit& fit_a, const PowerLawFit& fit_b,
                                 double budget_lo, double budget_hi);

}  // namespace dfalab
