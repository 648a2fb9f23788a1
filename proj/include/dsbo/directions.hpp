#pragma once

#include "dsbo/problem.hpp"
#include "dsbo/types.hpp"

#include <array>
#include <optional>
#include <string_view>

namespace dsbo::directions {

/// Per-agent descent directions for the dual block theta and primal x, y.
struct DirectionTriple {
  Vec d_theta;
  Vec d_x;
  Vec d_y;

  bool all_finite() const { return d_theta.allFinite() && d_x.allFinite() && d_y.allFinite(); }
};

/// Sample identities for one agent at one iteration. All lower-level
/// gradients of one call share `g`.
struct SampleKeys {
  DrawKey f;
  DrawKey g;
};

/// d_theta = grad_y g_i(x, theta) + (theta - y) / gamma
/// d_x     = mu grad_x f_i(x, y) + grad_x g_i(x, y) - grad_x g_i(x, theta)
/// d_y     = mu grad_y f_i(x, y) + grad_y g_i(x, y) - (y - theta) / gamma
DirectionTriple deterministic_directions(const problems::BilevelProblem& problem, std::size_t agent, const Vec& x,
                                         const Vec& y, const Vec& theta, double mu, double gamma);

/// Same formulas with sampled gradients; deterministic given `keys`.
DirectionTriple stochastic_directions(const problems::BilevelProblem& problem, std::size_t agent, const Vec& x,
                                      const Vec& y, const Vec& theta, double mu, double gamma,
                                      const problems::NoiseModel& noise, const SampleKeys& keys);

struct StepTriple {
  double theta = 0.0;
  double x = 0.0;
  double y = 0.0;

  double operator[](Block b) const { return b == Block::theta ? theta : (b == Block::x ? x : y); }
};

/// Penalty mu_k = mu0 (k+1)^{-p} and steps lambda_theta = c_theta sqrt(n/K),
/// lambda_x = lambda_y = c_lambda lambda_theta unless overridden.
struct Schedules {
  double mu0 = 1.0;
  double p = 0.0;
  double c_theta = 1.0;
  double c_lambda = 1.0;
  std::size_t K = 1;
  std::optional<StepTriple> override_steps;
};

void validate(const Schedules& s);
double mu_at(const Schedules& s, std::size_t k);
StepTriple steps_at(const Schedules& s, std::size_t k, std::size_t n);

enum class EstimatorKind { minibatch, momentum, storm };

std::string_view to_string(EstimatorKind k);
EstimatorKind parse_estimator_kind(std::string_view s);

/// rho^k: either a constant or min(1, c / (k+1)^power).
struct RhoSchedule {
  double constant = 1.0;
  bool decaying = false;
  double c = 1.0;
  double power = 2.0 / 3.0;

  double at(std::size_t k) const;

  static RhoSchedule default_for(EstimatorKind kind);
};

struct EstimatorState {
  EstimatorKind kind = EstimatorKind::minibatch;
  std::array<double, 3> rho{1.0, 1.0, 1.0};  ///< indexed by Block
  std::optional<DirectionTriple> prev_estimate;
  std::optional<DirectionTriple> prev_raw;
};

struct EstimatorUpdate {
  DirectionTriple estimate;
  EstimatorState state;
};

/// minibatch: raw. momentum: (1-rho) prev + rho raw.
/// storm: (1-rho)(prev + raw - raw_reeval_at_prev) + rho raw, where the
/// re-evaluation is the raw direction at the previous iterate under the
/// current sample. The first call returns raw.
/// Throws missing_reeval when storm has history but no re-evaluation.
EstimatorUpdate apply_estimator(const EstimatorState& state, const DirectionTriple& raw,
                                const DirectionTriple* raw_reeval_at_prev = nullptr);

}  // namespace dsbo::directions
