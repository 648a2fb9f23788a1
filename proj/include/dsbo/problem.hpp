#pragma once

#include "dsbo/rng.hpp"
#include "dsbo/types.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace dsbo::problems {

enum class NoiseKind { additive_gaussian, minibatch };

std::string_view to_string(NoiseKind k);
NoiseKind parse_noise_kind(std::string_view s);

/// Stochastic oracle model. For additive_gaussian, delta is the standard
/// deviation of the whole perturbation vector: E||noise||^2 = delta^2.
struct NoiseModel {
  NoiseKind kind = NoiseKind::additive_gaussian;
  double delta_f = 0.0;
  double delta_g = 0.0;
  std::size_t batch_size = 32;
};

struct ReferenceSolution {
  Vec x;
  Vec y;
};

/// Per-agent upper objectives f_i and lower objectives g_i with F, G their
/// agent means. Implementations are immutable and safe to query from many
/// threads.
class BilevelProblem {
 public:
  virtual ~BilevelProblem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t n_agents() const = 0;
  virtual std::size_t dx() const = 0;
  virtual std::size_t dy() const = 0;
  /// Lipschitz constants of grad f_i and grad g_i over (x, y).
  virtual double L1() const = 0;
  virtual double L2() const = 0;
  virtual std::optional<double> F_lower_bound() const { return 0.0; }

  virtual double f(std::size_t agent, const Vec& x, const Vec& y) const = 0;
  virtual double g(std::size_t agent, const Vec& x, const Vec& y) const = 0;
  virtual BlockGrad grad_f(std::size_t agent, const Vec& x, const Vec& y) const = 0;
  virtual BlockGrad grad_g(std::size_t agent, const Vec& x, const Vec& y) const = 0;

  /// One stochastic gradient sample; the sample xi is a pure function of
  /// `key`. The base implementation handles additive Gaussian noise.
  virtual BlockGrad sample_grad_f(std::size_t agent, const Vec& x, const Vec& y, const NoiseModel& noise,
                                  const DrawKey& key) const;
  virtual BlockGrad sample_grad_g(std::size_t agent, const Vec& x, const Vec& y, const NoiseModel& noise,
                                  const DrawKey& key) const;

  /// argmin_theta G(x, theta) + ||theta - y||^2 / (2 gamma) when it has a
  /// closed form.
  virtual std::optional<Vec> prox_lower(const Vec& x, const Vec& y, double gamma) const;

  /// Bilevel optimum when known analytically.
  virtual std::optional<ReferenceSolution> reference() const { return std::nullopt; }

  double F(const Vec& x, const Vec& y) const;
  double G(const Vec& x, const Vec& y) const;
  BlockGrad grad_F(const Vec& x, const Vec& y) const;
  BlockGrad grad_G(const Vec& x, const Vec& y) const;

 protected:
  void check_dims(std::size_t agent, const Vec& x, const Vec& y) const;
  BlockGrad add_gaussian(BlockGrad grad, double delta, const DrawKey& key) const;
};

/// Heterogeneity at a point: (1/n) sum_i ||grad f_i - grad F||^2 and the same
/// for g.
struct Dissimilarity {
  double sigma_f_sq = 0.0;
  double sigma_g_sq = 0.0;
};

Dissimilarity measure_dissimilarity(const BilevelProblem& problem, const Vec& x, const Vec& y);

}  // namespace dsbo::problems
