#include "dsbo/problem.hpp"

#include "dsbo/error.hpp"

#include <cmath>

namespace dsbo::problems {

std::string_view to_string(NoiseKind k) {
  return k == NoiseKind::additive_gaussian ? "additive_gaussian" : "minibatch";
}

NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "additive_gaussian") return NoiseKind::additive_gaussian;
  if (s == "minibatch") return NoiseKind::minibatch;
  throw Error(ErrorCode::invalid_parameter, "unknown noise kind '" + std::string(s) + "'");
}

void BilevelProblem::check_dims(std::size_t agent, const Vec& x, const Vec& y) const {
  if (agent >= n_agents()) throw Error(ErrorCode::invalid_input, "agent index " + std::to_string(agent) + " out of range");
  if (static_cast<std::size_t>(x.size()) != dx() || static_cast<std::size_t>(y.size()) != dy()) {
    throw Error(ErrorCode::invalid_input, "dimension mismatch: expected (" + std::to_string(dx()) + ", " +
                                              std::to_string(dy()) + "), got (" + std::to_string(x.size()) + ", " +
                                              std::to_string(y.size()) + ")");
  }
}

BlockGrad BilevelProblem::add_gaussian(BlockGrad grad, double delta, const DrawKey& key) const {
  if (delta == 0.0) return grad;
  // Per-coordinate deviation so that the whole vector has E||noise||^2 = delta^2.
  const double per_coord = delta / std::sqrt(static_cast<double>(dx() + dy()));
  auto engine = make_engine(key);
  grad.gx += gaussian_vector(engine, grad.gx.size(), per_coord);
  grad.gy += gaussian_vector(engine, grad.gy.size(), per_coord);
  return grad;
}

BlockGrad BilevelProblem::sample_grad_f(std::size_t agent, const Vec& x, const Vec& y, const NoiseModel& noise,
                                        const DrawKey& key) const {
  if (noise.kind != NoiseKind::additive_gaussian) {
    throw Error(ErrorCode::invalid_parameter, name() + " has no minibatch sampling");
  }
  return add_gaussian(grad_f(agent, x, y), noise.delta_f, key);
}

BlockGrad BilevelProblem::sample_grad_g(std::size_t agent, const Vec& x, const Vec& y, const NoiseModel& noise,
                                        const DrawKey& key) const {
  if (noise.kind != NoiseKind::additive_gaussian) {
    throw Error(ErrorCode::invalid_parameter, name() + " has no minibatch sampling");
  }
  return add_gaussian(grad_g(agent, x, y), noise.delta_g, key);
}

std::optional<Vec> BilevelProblem::prox_lower(const Vec&, const Vec&, double) const { return std::nullopt; }

double BilevelProblem::F(const Vec& x, const Vec& y) const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_agents(); ++i) s += f(i, x, y);
  return s / static_cast<double>(n_agents());
}

double BilevelProblem::G(const Vec& x, const Vec& y) const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_agents(); ++i) s += g(i, x, y);
  return s / static_cast<double>(n_agents());
}

namespace {

template <class Fn>
BlockGrad mean_grad(const BilevelProblem& p, Fn&& fn) {
  BlockGrad acc{Vec::Zero(static_cast<Eigen::Index>(p.dx())), Vec::Zero(static_cast<Eigen::Index>(p.dy()))};
  for (std::size_t i = 0; i < p.n_agents(); ++i) {
    const BlockGrad gi = fn(i);
    acc.gx += gi.gx;
    acc.gy += gi.gy;
  }
  const double inv = 1.0 / static_cast<double>(p.n_agents());
  acc.gx *= inv;
  acc.gy *= inv;
  return acc;
}

}  // namespace

BlockGrad BilevelProblem::grad_F(const Vec& x, const Vec& y) const {
  return mean_grad(*this, [&](std::size_t i) { return grad_f(i, x, y); });
}

BlockGrad BilevelProblem::grad_G(const Vec& x, const Vec& y) const {
  return mean_grad(*this, [&](std::size_t i) { return grad_g(i, x, y); });
}

Dissimilarity measure_dissimilarity(const BilevelProblem& problem, const Vec& x, const Vec& y) {
  const BlockGrad gF = problem.grad_F(x, y);
  const BlockGrad gG = problem.grad_G(x, y);
  Dissimilarity d;
  for (std::size_t i = 0; i < problem.n_agents(); ++i) {
    const BlockGrad fi = problem.grad_f(i, x, y);
    const BlockGrad gi = problem.grad_g(i, x, y);
    d.sigma_f_sq += (fi.gx - gF.gx).squaredNorm() + (fi.gy - gF.gy).squaredNorm();
    d.sigma_g_sq += (gi.gx - gG.gx).squaredNorm() + (gi.gy - gG.gy).squaredNorm();
  }
  const double inv = 1.0 / static_cast<double>(problem.n_agents());
  d.sigma_f_sq *= inv;
  d.sigma_g_sq *= inv;
  return d;
}

}  // namespace dsbo::problems
