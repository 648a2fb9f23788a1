#include "dsbo/envelope.hpp"

#include "dsbo/error.hpp"
#include "dsbo/topology.hpp"

#include <cmath>

namespace dsbo::envelope {

using problems::BilevelProblem;

bool gamma_in_theory_range(const EnvelopeConfig& cfg, const BilevelProblem& problem) {
  return cfg.gamma > 0.0 && cfg.gamma < 1.0 / (2.0 * problem.L2());
}

double inner_modulus(const EnvelopeConfig& cfg, const BilevelProblem& problem) { return 1.0 / cfg.gamma - problem.L2(); }

double prox_residual(const BilevelProblem& problem, const Vec& x, const Vec& y, const Vec& theta, double gamma) {
  return (problem.grad_G(x, theta).gy + (theta - y) / gamma).norm();
}

Vec solve_theta_star(const BilevelProblem& problem, const Vec& x, const Vec& y, const EnvelopeConfig& cfg,
                     const Vec* warm_start) {
  if (!(cfg.gamma > 0.0)) throw Error(ErrorCode::invalid_parameter, "gamma must be positive");
  if (auto closed = problem.prox_lower(x, y, cfg.gamma)) return *std::move(closed);

  const double step = 1.0 / (problem.L2() + 1.0 / cfg.gamma);
  Vec theta = warm_start != nullptr ? *warm_start : y;
  double residual = 0.0;
  for (int it = 0; it < cfg.inner_max_iters; ++it) {
    const Vec grad = problem.grad_G(x, theta).gy + (theta - y) / cfg.gamma;
    residual = grad.norm();
    if (!std::isfinite(residual)) throw InnerSolveFailed(residual, it);
    if (residual <= cfg.inner_tol) return theta;
    theta -= step * grad;
  }
  residual = prox_residual(problem, x, y, theta, cfg.gamma);
  if (residual <= cfg.inner_tol) return theta;
  throw InnerSolveFailed(residual, cfg.inner_max_iters);
}

double moreau_value(const BilevelProblem& problem, const Vec& x, const Vec& y, const EnvelopeConfig& cfg) {
  const Vec theta = solve_theta_star(problem, x, y, cfg);
  return problem.G(x, theta) + (theta - y).squaredNorm() / (2.0 * cfg.gamma);
}

BlockGrad grad_moreau(const BilevelProblem& problem, const Vec& x, const Vec& y, const EnvelopeConfig& cfg,
                      Vec* warm_theta) {
  const bool warm = warm_theta != nullptr && warm_theta->size() == y.size();
  const Vec theta = solve_theta_star(problem, x, y, cfg, warm ? warm_theta : nullptr);
  if (warm_theta != nullptr) *warm_theta = theta;
  return {problem.grad_G(x, theta).gx, (y - theta) / cfg.gamma};
}

double psi_value(const BilevelProblem& problem, const Vec& x, const Vec& y, double mu, const EnvelopeConfig& cfg) {
  if (mu < 0.0) throw Error(ErrorCode::invalid_parameter, "mu must be nonnegative");
  return mu * problem.F(x, y) + problem.G(x, y) - moreau_value(problem, x, y, cfg);
}

BlockGrad grad_psi(const BilevelProblem& problem, const Vec& x, const Vec& y, double mu, const EnvelopeConfig& cfg,
                   Vec* warm_theta) {
  if (mu < 0.0) throw Error(ErrorCode::invalid_parameter, "mu must be nonnegative");
  const BlockGrad gF = problem.grad_F(x, y);
  const BlockGrad gG = problem.grad_G(x, y);
  const BlockGrad gV = grad_moreau(problem, x, y, cfg, warm_theta);
  return {mu * gF.gx + gG.gx - gV.gx, mu * gF.gy + gG.gy - gV.gy};
}

double phi_value(const BilevelProblem& problem, const Vec& x, const Vec& y, double mu, const EnvelopeConfig& cfg) {
  return psi_value(problem, x, y, mu, cfg) - mu * problem.F_lower_bound().value_or(0.0);
}

double consensus_error(const AgentMatrix& v) {
  if (v.rows() == 0) return 0.0;
  return topology::deviation_energy(v) / static_cast<double>(v.rows());
}

StationarityRecord metrics(const BilevelProblem& problem, const Blocks& swarm, double mu, const EnvelopeConfig& cfg,
                           Vec* warm_theta) {
  if (swarm.agents() == 0) throw Error(ErrorCode::invalid_input, "metrics needs a nonempty swarm");
  const Vec x_bar = swarm.x.colwise().mean().transpose();
  const Vec y_bar = swarm.y.colwise().mean().transpose();
  const BlockGrad g = grad_psi(problem, x_bar, y_bar, mu, cfg, warm_theta);

  StationarityRecord r;
  r.mu = mu;
  r.grad_psi_sq = g.gx.squaredNorm() + g.gy.squaredNorm();
  r.consensus_x = consensus_error(swarm.x);
  r.consensus_y = consensus_error(swarm.y);
  r.consensus_theta = consensus_error(swarm.theta);
  r.consensus_total = r.consensus_x + r.consensus_y + r.consensus_theta;
  return r;
}

}  // namespace dsbo::envelope
