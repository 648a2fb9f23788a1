#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace dsbo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One row per agent. Row-major so that an agent's vector is contiguous.
using AgentMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Gradient of a two-block function with respect to (x, y).
struct BlockGrad {
  Vec gx;
  Vec gy;
};

/// The three variable blocks every agent carries: dual theta, primal x and y.
struct Blocks {
  AgentMatrix theta;
  AgentMatrix x;
  AgentMatrix y;

  static Blocks zeros(std::size_t n, std::size_t dx, std::size_t dy) {
    const auto rows = static_cast<Eigen::Index>(n);
    return {AgentMatrix::Zero(rows, static_cast<Eigen::Index>(dy)),
            AgentMatrix::Zero(rows, static_cast<Eigen::Index>(dx)),
            AgentMatrix::Zero(rows, static_cast<Eigen::Index>(dy))};
  }

  std::size_t agents() const { return static_cast<std::size_t>(x.rows()); }

  template <class Fn>
  void for_each(Fn&& fn) {
    fn(theta, 0);
    fn(x, 1);
    fn(y, 2);
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    fn(theta, 0);
    fn(x, 1);
    fn(y, 2);
  }
};

/// Per-block index used by step sizes and estimator coefficients.
enum class Block : int { theta = 0, x = 1, y = 2 };

}  // namespace dsbo
