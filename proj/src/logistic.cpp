#include "dsbo/logistic.hpp"

#include "dsbo/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace dsbo::problems {

double logistic_loss(double z) { return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

namespace {

/// d/dz log(1 + exp(-z)) = -1 / (1 + exp(z)).
double logistic_slope(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(z));
}

void fill_split(std::mt19937_64& engine, double scale, const Vec& tau_star, double noise_rate, std::size_t m,
                AgentMatrix& features, Vec& labels) {
  const auto s = tau_star.size();
  features.resize(static_cast<Eigen::Index>(m), s);
  labels.resize(static_cast<Eigen::Index>(m));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index e = 0; e < features.rows(); ++e) {
    for (Eigen::Index j = 0; j < s; ++j) features(e, j) = scale * normal(engine);
    const double beta = normal(engine);
    const double margin = features.row(e).dot(tau_star) + noise_rate * beta;
    labels[e] = margin >= 0.0 ? 1.0 : -1.0;
  }
}

/// Mean loss gradient in tau over the selected rows (all rows when `rows` is empty).
Vec loss_grad(const AgentMatrix& feats, const Vec& labels, const Vec& tau, const std::vector<Eigen::Index>& rows) {
  Vec acc = Vec::Zero(tau.size());
  auto visit = [&](Eigen::Index e) {
    const double z = labels[e] * feats.row(e).dot(tau);
    acc += (logistic_slope(z) * labels[e]) * feats.row(e).transpose();
  };
  if (rows.empty()) {
    for (Eigen::Index e = 0; e < feats.rows(); ++e) visit(e);
    return acc / static_cast<double>(feats.rows());
  }
  for (const Eigen::Index e : rows) visit(e);
  return acc / static_cast<double>(rows.size());
}

double loss_value(const AgentMatrix& feats, const Vec& labels, const Vec& tau) {
  double acc = 0.0;
  for (Eigen::Index e = 0; e < feats.rows(); ++e) acc += logistic_loss(labels[e] * feats.row(e).dot(tau));
  return acc / static_cast<double>(feats.rows());
}

std::vector<Eigen::Index> draw_batch(const DrawKey& key, std::size_t batch, Eigen::Index population) {
  auto engine = make_engine(key, 1);
  std::uniform_int_distribution<Eigen::Index> pick(0, population - 1);
  std::vector<Eigen::Index> rows(batch);
  for (auto& r : rows) r = pick(engine);
  return rows;
}

}  // namespace

LogisticDataset generate_logistic_data(const LogisticParams& params) {
  if (params.features < 1 || params.samples_per_agent < 2 || params.n_agents < 1) {
    throw Error(ErrorCode::invalid_parameter, "logistic data needs s >= 1, >= 2 samples per split, >= 1 agent");
  }
  LogisticDataset data;
  {
    auto engine = make_engine(derive_draw_key(params.seed, 0, 0, Stream::dataset), 0);
    data.tau_star = gaussian_vector(engine, static_cast<Eigen::Index>(params.features), 1.0);
  }
  data.agents.resize(params.n_agents);
  for (std::size_t i = 0; i < params.n_agents; ++i) {
    const double scale = static_cast<double>(i + 1);
    auto train_engine = make_engine(derive_draw_key(params.seed, 1, i, Stream::dataset), 0);
    auto val_engine = make_engine(derive_draw_key(params.seed, 2, i, Stream::dataset), 0);
    auto& a = data.agents[i];
    fill_split(train_engine, scale, data.tau_star, params.noise_rate, params.samples_per_agent, a.train_features,
               a.train_labels);
    fill_split(val_engine, scale, data.tau_star, params.noise_rate, params.samples_per_agent, a.val_features,
               a.val_labels);
  }
  return data;
}

void export_logistic_csv(const LogisticDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::filesystem::path& path, const AgentMatrix& feats, const Vec& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::invalid_input, "cannot write " + path.string());
    for (Eigen::Index j = 0; j < feats.cols(); ++j) out << "feature_" << j << ',';
    out << "label\n";
    char buf[32];
    for (Eigen::Index e = 0; e < feats.rows(); ++e) {
      for (Eigen::Index j = 0; j < feats.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", feats(e, j));
        out << buf << ',';
      }
      out << (labels[e] > 0 ? "1" : "-1") << '\n';
    }
  };
  for (std::size_t i = 0; i < data.agents.size(); ++i) {
    const auto& a = data.agents[i];
    write(dir / ("agent" + std::to_string(i) + "_train.csv"), a.train_features, a.train_labels);
    write(dir / ("agent" + std::to_string(i) + "_val.csv"), a.val_features, a.val_labels);
  }
}

LogisticHyperopt::LogisticHyperopt(LogisticDataset data, std::uint64_t lipschitz_seed) : data_(std::move(data)) {
  if (data_.agents.empty()) throw Error(ErrorCode::invalid_parameter, "logistic problem needs agents");
  const auto s = data_.tau_star.size();

  // f_i Hessian in tau is mean sigma(1-sigma) x x^T, bounded by lambda_max(X^T X / m) / 4.
  for (const auto& a : data_.agents) {
    const Mat gram = (a.val_features.transpose() * a.val_features) / static_cast<double>(a.val_features.rows());
    Eigen::SelfAdjointEigenSolver<Mat> eig(gram, Eigen::EigenvaluesOnly);
    l1_ = std::max(l1_, 0.25 * eig.eigenvalues().maxCoeff());
  }

  // g_i is not globally smooth in pi (exp terms); estimate L2 by power
  // iteration on gradient secants at sample points in the working region.
  std::mt19937_64 engine(lipschitz_seed);
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < n_agents(); ++i) {
    for (int point = 0; point < 8; ++point) {
      Vec x(s), y(s), vx(s), vy(s);
      for (Eigen::Index j = 0; j < s; ++j) {
        x[j] = box(engine);
        y[j] = normal(engine);
        vx[j] = normal(engine);
        vy[j] = normal(engine);
      }
      const BlockGrad base = grad_g(i, x, y);
      double estimate = 0.0;
      for (int it = 0; it < 30; ++it) {
        const double norm = std::sqrt(vx.squaredNorm() + vy.squaredNorm());
        vx /= norm;
        vy /= norm;
        const BlockGrad moved = grad_g(i, x + eps * vx, y + eps * vy);
        vx = (moved.gx - base.gx) / eps;
        vy = (moved.gy - base.gy) / eps;
        estimate = std::sqrt(vx.squaredNorm() + vy.squaredNorm());
      }
      l2_ = std::max(l2_, estimate);
    }
  }
  l2_ *= 1.1;
}

double LogisticHyperopt::f(std::size_t agent, const Vec& x, const Vec& y) const {
  check_dims(agent, x, y);
  const auto& a = data_.agents[agent];
  return loss_value(a.val_features, a.val_labels, y);
}

double LogisticHyperopt::g(std::size_t agent, const Vec& x, const Vec& y) const {
  check_dims(agent, x, y);
  const auto& a = data_.agents[agent];
  return loss_value(a.train_features, a.train_labels, y) + 0.5 * (x.array().exp() * y.array().square()).sum();
}

BlockGrad LogisticHyperopt::grad_f(std::size_t agent, const Vec& x, const Vec& y) const {
  check_dims(agent, x, y);
  const auto& a = data_.agents[agent];
  return {Vec::Zero(x.size()), loss_grad(a.val_features, a.val_labels, y, {})};
}

BlockGrad LogisticHyperopt::grad_g(std::size_t agent, const Vec& x, const Vec& y) const {
  check_dims(agent, x, y);
  const auto& a = data_.agents[agent];
  const Vec w = x.array().exp();
  return {0.5 * (w.array() * y.array().square()).matrix(),
          loss_grad(a.train_features, a.train_labels, y, {}) + (w.array() * y.array()).matrix()};
}

BlockGrad LogisticHyperopt::sample_grad_f(std::size_t agent, const Vec& x, const Vec& y, const NoiseModel& noise,
                                          const DrawKey& key) const {
  if (noise.kind == NoiseKind::additive_gaussian) return BilevelProblem::sample_grad_f(agent, x, y, noise, key);
  check_dims(agent, x, y);
  const auto& a = data_.agents[agent];
  const auto rows = draw_batch(key, noise.batch_size, a.val_features.rows());
  return {Vec::Zero(x.size()), loss_grad(a.val_features, a.val_labels, y, rows)};
}

BlockGrad LogisticHyperopt::sample_grad_g(std::size_t agent, const Vec& x, const Vec& y, const NoiseModel& noise,
                                          const DrawKey& key) const {
  if (noise.kind == NoiseKind::additive_gaussian) return BilevelProblem::sample_grad_g(agent, x, y, noise, key);
  check_dims(agent, x, y);
  const auto& a = data_.agents[agent];
  const auto rows = draw_batch(key, noise.batch_size, a.train_features.rows());
  const Vec w = x.array().exp();
  return {0.5 * (w.array() * y.array().square()).matrix(),
          loss_grad(a.train_features, a.train_labels, y, rows) + (w.array() * y.array()).matrix()};
}

}  // namespace dsbo::problems
