#include "dsbo/toy.hpp"

#include "dsbo/error.hpp"

#include <algorithm>
#include <cmath>

namespace dsbo::problems {

QuadraticToy::QuadraticToy(ToyParams params) : params_(params) {
  if (params_.n_agents == 0 || params_.N == 0) {
    throw Error(ErrorCode::invalid_parameter, "toy needs n_agents >= 1 and N >= 1");
  }
  for (std::size_t i = 0; i < params_.n_agents; ++i) {
    const double ai = a(i);
    const double bi = b(i);
    // Hessian of f_i per coordinate: [[a^2, -a], [-a, 1]] on (x, y2), b^2 on y1.
    l1_ = std::max({l1_, ai * ai + 1.0, bi * bi});
    // Hessian of g_i per coordinate: [[0, -a], [-a, b^2]] on (x, y1).
    l2_ = std::max(l2_, 0.5 * (bi * bi + std::sqrt(bi * bi * bi * bi + 4.0 * ai * ai)));
  }
}

double QuadraticToy::f(std::size_t agent, const Vec& x, const Vec& y) const {
  check_dims(agent, x, y);
  const auto n = static_cast<Eigen::Index>(params_.N);
  const double ai = a(agent);
  const double bi = b(agent);
  return 0.5 * (ai * x - y.tail(n)).squaredNorm() + 0.5 * (bi * y.head(n).array() - 1.0).matrix().squaredNorm();
}

double QuadraticToy::g(std::size_t agent, const Vec& x, const Vec& y) const {
  check_dims(agent, x, y);
  const auto n = static_cast<Eigen::Index>(params_.N);
  const double ai = a(agent);
  const double bi = b(agent);
  return 0.5 * bi * bi * y.head(n).squaredNorm() - ai * x.dot(y.head(n));
}

BlockGrad QuadraticToy::grad_f(std::size_t agent, const Vec& x, const Vec& y) const {
  check_dims(agent, x, y);
  const auto n = static_cast<Eigen::Index>(params_.N);
  const double ai = a(agent);
  const double bi = b(agent);
  const Vec resid = ai * x - y.tail(n);
  BlockGrad out{ai * resid, Vec(2 * n)};
  out.gy.head(n) = bi * (bi * y.head(n).array() - 1.0).matrix();
  out.gy.tail(n) = -resid;
  return out;
}

BlockGrad QuadraticToy::grad_g(std::size_t agent, const Vec& x, const Vec& y) const {
  check_dims(agent, x, y);
  const auto n = static_cast<Eigen::Index>(params_.N);
  const double ai = a(agent);
  const double bi = b(agent);
  BlockGrad out{-ai * y.head(n), Vec::Zero(2 * n)};
  out.gy.head(n) = bi * bi * y.head(n) - ai * x;
  return out;
}

std::optional<Vec> QuadraticToy::prox_lower(const Vec& x, const Vec& y, double gamma) const {
  check_dims(0, x, y);
  const auto n = static_cast<Eigen::Index>(params_.N);
  double mean_a = 0.0;
  double mean_b2 = 0.0;
  for (std::size_t i = 0; i < params_.n_agents; ++i) {
    mean_a += a(i);
    mean_b2 += b(i) * b(i);
  }
  mean_a /= static_cast<double>(params_.n_agents);
  mean_b2 /= static_cast<double>(params_.n_agents);
  // Stationarity of the proximal objective in theta1: mean_b2 th - mean_a x + (th - y1)/gamma = 0.
  Vec theta(2 * n);
  theta.head(n) = (mean_a * x + y.head(n) / gamma) / (mean_b2 + 1.0 / gamma);
  theta.tail(n) = y.tail(n);
  return theta;
}

Vec QuadraticToy::lower_solution_y1(const Vec& x) const {
  double sum_a = 0.0;
  double sum_b2 = 0.0;
  for (std::size_t i = 0; i < params_.n_agents; ++i) {
    sum_a += a(i);
    sum_b2 += b(i) * b(i);
  }
  return (sum_a / sum_b2) * x;
}

std::optional<ReferenceSolution> QuadraticToy::reference() const { return toy_reference_solution(params_); }

ReferenceSolution toy_reference_solution(const ToyParams& params) {
  const QuadraticToy toy(params);
  double sum_a = 0.0;
  double sum_a2 = 0.0;
  double sum_b = 0.0;
  double sum_b2 = 0.0;
  for (std::size_t i = 0; i < params.n_agents; ++i) {
    sum_a += toy.a(i);
    sum_a2 += toy.a(i) * toy.a(i);
    sum_b += toy.b(i);
    sum_b2 += toy.b(i) * toy.b(i);
  }
  if (sum_b2 == 0.0) throw Error(ErrorCode::degenerate_instance, "lower level has no unique y1 solution");
  const double ratio = sum_a / sum_b2;
  const double n = static_cast<double>(params.n_agents);

  // Per coordinate, minimize sum_i 1/2 (a_i x - y2)^2 + 1/2 (b_i ratio x - 1)^2 over (x, y2).
  Eigen::Matrix2d normal;
  normal << sum_a2 + ratio * ratio * sum_b2, -sum_a, -sum_a, n;
  const Eigen::Vector2d rhs(ratio * sum_b, 0.0);
  const double det = normal.determinant();
  if (std::abs(det) <= 1e-14 * normal.cwiseAbs().maxCoeff() * normal.cwiseAbs().maxCoeff()) {
    throw Error(ErrorCode::degenerate_instance, "normal equations are singular");
  }
  const Eigen::Vector2d sol = normal.inverse() * rhs;

  const auto dim = static_cast<Eigen::Index>(params.N);
  ReferenceSolution out{Vec::Constant(dim, sol[0]), Vec(2 * dim)};
  out.y.head(dim).setConstant(ratio * sol[0]);
  out.y.tail(dim).setConstant(sol[1]);
  return out;
}

ReferenceSolution toy_reported_triple(std::size_t N) {
  const auto dim = static_cast<Eigen::Index>(N);
  ReferenceSolution out{Vec::Constant(dim, 1.43), Vec(2 * dim)};
  out.y.head(dim).setConstant(0.84);
  out.y.tail(dim).setConstant(1.58);
  return out;
}

}  // namespace dsbo::problems
