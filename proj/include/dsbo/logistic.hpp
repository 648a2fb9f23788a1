#pragma once

#include "dsbo/problem.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace dsbo::problems {

/// Synthetic heterogeneous data for l2-regularized logistic regression
/// hyperparameter tuning. Agent i (0-based) draws features from
/// N(0, (i+1)^2) per coordinate.
struct LogisticParams {
  std::size_t n_agents = 8;
  std::size_t features = 10;
  std::size_t samples_per_agent = 100;  ///< per split
  double noise_rate = 0.1;
  std::uint64_t seed = 1;
};

struct AgentData {
  AgentMatrix train_features;
  Vec train_labels;  ///< entries in {-1, +1}
  AgentMatrix val_features;
  Vec val_labels;
};

struct LogisticDataset {
  Vec tau_star;
  std::vector<AgentData> agents;
};

/// Labels are sign(x^T tau* + noise_rate * beta_e) with beta_e ~ N(0, 1) and
/// sign(0) = +1. Bit-identical for equal params.
LogisticDataset generate_logistic_data(const LogisticParams& params);

/// One CSV per agent per split: agent<i>_<split>.csv with columns
/// feature_0..feature_{s-1},label.
void export_logistic_csv(const LogisticDataset& data, const std::filesystem::path& dir);

/// x = pi (log regularization weights), y = tau (model weights).
///   f_i = mean over validation of log(1 + exp(-y_e x_e^T tau))
///   g_i = mean over training of the same loss + 1/2 tau^T diag(exp(pi)) tau
class LogisticHyperopt final : public BilevelProblem {
 public:
  explicit LogisticHyperopt(LogisticDataset data, std::uint64_t lipschitz_seed = 7);

  std::string name() const override { return "logistic"; }
  std::size_t n_agents() const override { return data_.agents.size(); }
  std::size_t dx() const override { return static_cast<std::size_t>(data_.tau_star.size()); }
  std::size_t dy() const override { return dx(); }
  double L1() const override { return l1_; }
  double L2() const override { return l2_; }

  double f(std::size_t agent, const Vec& x, const Vec& y) const override;
  double g(std::size_t agent, const Vec& x, const Vec& y) const override;
  BlockGrad grad_f(std::size_t agent, const Vec& x, const Vec& y) const override;
  BlockGrad grad_g(std::size_t agent, const Vec& x, const Vec& y) const override;

  /// Minibatch sampling draws batch_size rows uniformly with replacement.
  BlockGrad sample_grad_f(std::size_t agent, const Vec& x, const Vec& y, const NoiseModel& noise,
                          const DrawKey& key) const override;
  BlockGrad sample_grad_g(std::size_t agent, const Vec& x, const Vec& y, const NoiseModel& noise,
                          const DrawKey& key) const override;

  const LogisticDataset& data() const { return data_; }

 private:
  LogisticDataset data_;
  double l1_ = 0.0;
  double l2_ = 0.0;
};

/// log(1 + exp(-z)) without overflow.
double logistic_loss(double z);

}  // namespace dsbo::problems
