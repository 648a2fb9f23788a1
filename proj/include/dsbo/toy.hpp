#pragma once

#include "dsbo/problem.hpp"

namespace dsbo::problems {

/// Merely convex lower level. Agent i (0-based) uses A_i = a_i I, B_i = b_i I
/// with a_i = a_base + a_spread * i and b_i = b_base + b_spread * i.
struct ToyParams {
  std::size_t n_agents = 5;
  std::size_t N = 10;
  double a_base = 1.0;
  double a_spread = 0.1;
  double b_base = 1.0;
  double b_spread = 0.05;
};

/// x in R^N, y = (y1, y2) in R^{2N}.
///   f_i = 1/2 ||A_i x - y2||^2 + 1/2 ||B_i y1 - e||^2
///   g_i = 1/2 ||B_i y1||^2 - (A_i x)^T y1          (independent of y2)
class QuadraticToy final : public BilevelProblem {
 public:
  explicit QuadraticToy(ToyParams params);

  std::string name() const override { return "toy"; }
  std::size_t n_agents() const override { return params_.n_agents; }
  std::size_t dx() const override { return params_.N; }
  std::size_t dy() const override { return 2 * params_.N; }
  double L1() const override { return l1_; }
  double L2() const override { return l2_; }

  double f(std::size_t agent, const Vec& x, const Vec& y) const override;
  double g(std::size_t agent, const Vec& x, const Vec& y) const override;
  BlockGrad grad_f(std::size_t agent, const Vec& x, const Vec& y) const override;
  BlockGrad grad_g(std::size_t agent, const Vec& x, const Vec& y) const override;

  std::optional<Vec> prox_lower(const Vec& x, const Vec& y, double gamma) const override;
  std::optional<ReferenceSolution> reference() const override;

  const ToyParams& params() const { return params_; }
  double a(std::size_t i) const { return params_.a_base + params_.a_spread * static_cast<double>(i); }
  double b(std::size_t i) const { return params_.b_base + params_.b_spread * static_cast<double>(i); }

  /// Lower-level solution map y1*(x) = (sum a_i / sum b_i^2) x.
  Vec lower_solution_y1(const Vec& x) const;

 private:
  ToyParams params_;
  double l1_ = 0.0;
  double l2_ = 0.0;
};

/// Optimistic bilevel optimum in closed form: substitute y1*(x) into F and
/// solve the per-coordinate 2x2 normal equations in (x, y2).
/// Throws degenerate_instance if they are singular.
ReferenceSolution toy_reference_solution(const ToyParams& params);

/// The triple (1.43 e, 0.84 e, 1.58 e) reported for the 5-agent instance;
/// kept only for side-by-side printing.
ReferenceSolution toy_reported_triple(std::size_t N);

}  // namespace dsbo::problems
