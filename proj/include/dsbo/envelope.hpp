#pragma once

#include "dsbo/problem.hpp"
#include "dsbo/types.hpp"

namespace dsbo::envelope {

/// Proximal parameter and inner-solve controls for V_gamma.
struct EnvelopeConfig {
  double gamma = 10.0;
  double inner_tol = 1e-10;
  int inner_max_iters = 100000;
};

/// True when gamma lies in (0, 1/(2 L2)), where the penalty reformulation is
/// exact and the inner problem is (1/gamma - L2)-strongly convex.
bool gamma_in_theory_range(const EnvelopeConfig& cfg, const problems::BilevelProblem& problem);

/// 1/gamma - L2, the strong convexity modulus of the inner problem.
double inner_modulus(const EnvelopeConfig& cfg, const problems::BilevelProblem& problem);

/// theta* = argmin_theta G(x, theta) + ||theta - y||^2 / (2 gamma).
/// Uses the problem's closed form when it has one, otherwise gradient descent
/// with step 1/(L2 + 1/gamma) started from `warm_start` (or y).
/// Throws InnerSolveFailed when the cap is hit.
Vec solve_theta_star(const problems::BilevelProblem& problem, const Vec& x, const Vec& y, const EnvelopeConfig& cfg,
                     const Vec* warm_start = nullptr);

/// ||grad_y G(x, theta) + (theta - y) / gamma||.
double prox_residual(const problems::BilevelProblem& problem, const Vec& x, const Vec& y, const Vec& theta,
                     double gamma);

/// V_gamma(x, y) = G(x, theta*) + ||theta* - y||^2 / (2 gamma).
double moreau_value(const problems::BilevelProblem& problem, const Vec& x, const Vec& y, const EnvelopeConfig& cfg);

/// grad V_gamma = (grad_x G(x, theta*), (y - theta*) / gamma).
/// `warm_theta`, when given, seeds the iterative solve and receives theta*.
BlockGrad grad_moreau(const problems::BilevelProblem& problem, const Vec& x, const Vec& y, const EnvelopeConfig& cfg,
                      Vec* warm_theta = nullptr);

/// Psi_mu = mu F + G - V_gamma.
double psi_value(const problems::BilevelProblem& problem, const Vec& x, const Vec& y, double mu,
                 const EnvelopeConfig& cfg);
BlockGrad grad_psi(const problems::BilevelProblem& problem, const Vec& x, const Vec& y, double mu,
                   const EnvelopeConfig& cfg, Vec* warm_theta = nullptr);

/// Phi_mu = mu (F - F_lower) + G - V_gamma; same gradient as Psi_mu.
double phi_value(const problems::BilevelProblem& problem, const Vec& x, const Vec& y, double mu,
                 const EnvelopeConfig& cfg);

struct StationarityRecord {
  double grad_psi_sq = 0.0;
  double consensus_x = 0.0;
  double consensus_y = 0.0;
  double consensus_theta = 0.0;
  double consensus_total = 0.0;
  double mu = 0.0;
};

/// Stationarity of Psi_mu at the agent averages plus per-block consensus
/// errors (1/n) sum_i ||v_i - v_bar||^2.
StationarityRecord metrics(const problems::BilevelProblem& problem, const Blocks& swarm, double mu,
                           const EnvelopeConfig& cfg, Vec* warm_theta = nullptr);

/// (1/n) sum_i ||row_i - mean||^2.
double consensus_error(const AgentMatrix& v);

}  // namespace dsbo::envelope
