#include "dsbo/directions.hpp"

#include "dsbo/error.hpp"

#include <algorithm>
#include <cmath>

namespace dsbo::directions {

using problems::BilevelProblem;

namespace {

void check_theta(const BilevelProblem& problem, const Vec& theta, double gamma, double mu) {
  if (static_cast<std::size_t>(theta.size()) != problem.dy()) {
    throw Error(ErrorCode::invalid_input, "theta must have dimension dy");
  }
  if (!(gamma > 0.0)) throw Error(ErrorCode::invalid_parameter, "gamma must be positive");
  if (mu < 0.0) throw Error(ErrorCode::invalid_parameter, "mu must be nonnegative");
}

DirectionTriple assemble(const BlockGrad& f_at_y, const BlockGrad& g_at_y, const BlockGrad& g_at_theta, const Vec& y,
                         const Vec& theta, double mu, double gamma) {
  return {g_at_theta.gy + (theta - y) / gamma,  //
          mu * f_at_y.gx + g_at_y.gx - g_at_theta.gx,
          mu * f_at_y.gy + g_at_y.gy - (y - theta) / gamma};
}

}  // namespace

DirectionTriple deterministic_directions(const BilevelProblem& problem, std::size_t agent, const Vec& x, const Vec& y,
                                         const Vec& theta, double mu, double gamma) {
  check_theta(problem, theta, gamma, mu);
  return assemble(problem.grad_f(agent, x, y), problem.grad_g(agent, x, y), problem.grad_g(agent, x, theta), y, theta,
                  mu, gamma);
}

DirectionTriple stochastic_directions(const BilevelProblem& problem, std::size_t agent, const Vec& x, const Vec& y,
                                      const Vec& theta, double mu, double gamma, const problems::NoiseModel& noise,
                                      const SampleKeys& keys) {
  check_theta(problem, theta, gamma, mu);
  return assemble(problem.sample_grad_f(agent, x, y, noise, keys.f), problem.sample_grad_g(agent, x, y, noise, keys.g),
                  problem.sample_grad_g(agent, x, theta, noise, keys.g), y, theta, mu, gamma);
}

void validate(const Schedules& s) {
  if (!(s.mu0 > 0.0)) throw Error(ErrorCode::invalid_parameter, "mu0 must be positive");
  if (s.p < 0.0) throw Error(ErrorCode::invalid_parameter, "p must be nonnegative");
  if (s.K < 1) throw Error(ErrorCode::invalid_parameter, "K must be at least 1");
  if (s.override_steps) {
    const auto& o = *s.override_steps;
    if (o.theta < 0.0 || o.x < 0.0 || o.y < 0.0) throw Error(ErrorCode::invalid_parameter, "steps must be nonnegative");
  } else if (!(s.c_theta > 0.0) || !(s.c_lambda > 0.0)) {
    throw Error(ErrorCode::invalid_parameter, "c_theta and c_lambda must be positive");
  }
}

double mu_at(const Schedules& s, std::size_t k) {
  if (s.p == 0.0) return s.mu0;
  return s.mu0 * std::pow(static_cast<double>(k) + 1.0, -s.p);
}

StepTriple steps_at(const Schedules& s, std::size_t /*k*/, std::size_t n) {
  if (s.override_steps) return *s.override_steps;
  const double theta = s.c_theta * std::sqrt(static_cast<double>(n)) / std::sqrt(static_cast<double>(s.K));
  return {theta, s.c_lambda * theta, s.c_lambda * theta};
}

std::string_view to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::minibatch: return "minibatch";
    case EstimatorKind::momentum: return "momentum";
    case EstimatorKind::storm: return "storm";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view s) {
  if (s == "minibatch") return EstimatorKind::minibatch;
  if (s == "momentum") return EstimatorKind::momentum;
  if (s == "storm") return EstimatorKind::storm;
  throw Error(ErrorCode::invalid_parameter, "unknown estimator kind '" + std::string(s) + "'");
}

double RhoSchedule::at(std::size_t k) const {
  if (!decaying) return constant;
  return std::min(1.0, c / std::pow(static_cast<double>(k) + 1.0, power));
}

RhoSchedule RhoSchedule::default_for(EstimatorKind kind) {
  RhoSchedule r;
  switch (kind) {
    case EstimatorKind::minibatch: r.constant = 1.0; break;
    case EstimatorKind::momentum: r.constant = 0.2; break;
    case EstimatorKind::storm: r.decaying = true; break;
  }
  return r;
}

EstimatorUpdate apply_estimator(const EstimatorState& state, const DirectionTriple& raw,
                                const DirectionTriple* raw_reeval_at_prev) {
  EstimatorUpdate out{raw, state};
  out.state.prev_raw = raw;
  if (state.kind == EstimatorKind::minibatch || !state.prev_estimate) {
    out.state.prev_estimate = raw;
    return out;
  }
  const DirectionTriple& prev = *state.prev_estimate;
  const auto r_theta = state.rho[0];
  const auto r_x = state.rho[1];
  const auto r_y = state.rho[2];
  if (state.kind == EstimatorKind::momentum) {
    out.estimate.d_theta = (1.0 - r_theta) * prev.d_theta + r_theta * raw.d_theta;
    out.estimate.d_x = (1.0 - r_x) * prev.d_x + r_x * raw.d_x;
    out.estimate.d_y = (1.0 - r_y) * prev.d_y + r_y * raw.d_y;
  } else {
    if (raw_reeval_at_prev == nullptr) {
      throw Error(ErrorCode::missing_reeval, "storm needs the raw direction re-evaluated at the previous iterate");
    }
    const DirectionTriple& old = *raw_reeval_at_prev;
    out.estimate.d_theta = (1.0 - r_theta) * (prev.d_theta + raw.d_theta - old.d_theta) + r_theta * raw.d_theta;
    out.estimate.d_x = (1.0 - r_x) * (prev.d_x + raw.d_x - old.d_x) + r_x * raw.d_x;
    out.estimate.d_y = (1.0 - r_y) * (prev.d_y + raw.d_y - old.d_y) + r_y * raw.d_y;
  }
  out.state.prev_estimate = out.estimate;
  return out;
}

}  // namespace dsbo::directions
