#pragma once

#include "dsbo/directions.hpp"
#include "dsbo/envelope.hpp"
#include "dsbo/logistic.hpp"
#include "dsbo/problem.hpp"
#include "dsbo/strategies.hpp"
#include "dsbo/topology.hpp"
#include "dsbo/toy.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dsbo::runner {

enum class Instance { toy, logistic };

struct ProblemSpec {
  Instance instance = Instance::toy;
  problems::ToyParams toy;
  problems::LogisticParams logistic;
  problems::NoiseModel noise;

  std::size_t n_agents() const { return instance == Instance::toy ? toy.n_agents : logistic.n_agents; }
};

struct TopologySpec {
  topology::Kind kind = topology::Kind::ring;
  double a = 0.5;
  topology::Mode mode = topology::Mode::normalized;
  std::size_t m_min = 2;
  std::size_t m_max = 2;
  std::optional<std::uint64_t> seed;  ///< dynamic_mh; defaults to the run's base seed
  std::optional<Mat> custom;
};

/// How one variable block is initialized on every agent.
struct InitBlock {
  enum class Kind { zeros, gaussian, explicit_vector };
  Kind kind = Kind::zeros;
  double scale = 0.01;
  Vec value;
};

/// Unset blocks take the instance default: zeros for the toy, gaussian(0.01)
/// for logistic.
struct InitSpec {
  std::optional<InitBlock> x;
  std::optional<InitBlock> y;
  std::optional<InitBlock> theta;
};

struct EstimatorSpec {
  directions::EstimatorKind kind = directions::EstimatorKind::minibatch;
  directions::RhoSchedule rho = directions::RhoSchedule::default_for(directions::EstimatorKind::minibatch);
};

struct RunConfig {
  std::string run_id = "run";
  ProblemSpec problem;
  TopologySpec topology;
  strategies::Strategy strategy = strategies::Strategy::se;
  EstimatorSpec estimator;
  directions::Schedules schedules;  ///< schedules.K is kept equal to K
  envelope::EnvelopeConfig envelope;
  std::size_t K = 1000;
  std::uint64_t base_seed = 0;
  std::size_t record_every = 10;
  InitSpec init;
};

std::shared_ptr<const problems::BilevelProblem> build_problem(const ProblemSpec& spec);

/// Static kinds ignore `round`; dynamic_mh draws the matrix of that round.
topology::WeightMatrix build_topology(const TopologySpec& spec, std::size_t n, std::uint64_t base_seed,
                                      std::size_t round = 0);

/// Rejects inconsistent configs (throws config_error) and returns warnings
/// that do not stop the run, e.g. gamma outside (0, 1/(2 L2)).
std::vector<std::string> validate_config(const RunConfig& cfg, const problems::BilevelProblem& problem);

Blocks initial_blocks(const RunConfig& cfg, const problems::BilevelProblem& problem);

struct MetricsRow {
  std::size_t k = 0;
  double mu = 0.0;
  envelope::StationarityRecord record;
  std::optional<double> rel_err_x;
  std::optional<double> rel_err_y;
  std::uint64_t mix_ops_cumulative = 0;
  double wall_ms = 0.0;
  bool gap = false;  ///< metric evaluation failed; numeric fields are NaN
};

struct Summary {
  double avg_grad_psi_sq = 0.0;
  double avg_consensus_total = 0.0;
  double final_grad_psi_sq = 0.0;  ///< at the iterate after the last round
  double final_consensus_total = 0.0;
  std::optional<double> final_rel_err_x;
  std::optional<double> final_rel_err_y;
  std::size_t gap_rows = 0;
};

struct MetricsSeries {
  std::string run_id;
  std::vector<MetricsRow> rows;
  Summary summary;
  std::vector<std::string> warnings;
  bool gamma_range_warning = false;
  Vec final_x_bar;
  Vec final_y_bar;
};

/// Rows recorded at k = 0 (mod record_every) and at k = K-1, each on the
/// iterate entering round k with mu_k.
MetricsSeries run(const RunConfig& cfg);
MetricsSeries run(const RunConfig& cfg, const problems::BilevelProblem& problem);

/// Per-agent estimator inputs of one round.
struct RoundInputs {
  const problems::BilevelProblem* problem = nullptr;
  const problems::NoiseModel* noise = nullptr;
  double mu = 0.0;
  double mu_prev = 0.0;
  double gamma = 1.0;
  std::uint64_t base_seed = 0;
  std::size_t k = 0;
};

/// Raw directions for every agent, passed through each agent's estimator.
/// `estimators` is updated in place. STORM re-evaluates at `prev_vars`.
Blocks compute_estimates_serial(const RoundInputs& in, const Blocks& vars, const Blocks& prev_vars,
                                std::vector<directions::EstimatorState>& estimators);
Blocks compute_estimates_parallel(const RoundInputs& in, const Blocks& vars, const Blocks& prev_vars,
                                  std::vector<directions::EstimatorState>& estimators);

// ---- sweeps ---------------------------------------------------------------

struct Grid {
  std::vector<std::size_t> n;
  std::vector<TopologySpec> topology;
  std::vector<double> p;
  std::vector<double> gamma;
  std::vector<strategies::Strategy> strategy;
  std::vector<std::uint64_t> seeds;  ///< replicates; empty means the base seed
};

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation (n-1)
  std::size_t count = 0;
};

Stat two_pass_stat(const std::vector<double>& v);
Stat streaming_stat(const std::vector<double>& v);

struct SweepPoint {
  RunConfig config;  ///< seed of the first replicate
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::vector<Summary> summaries;  ///< one per successful seed
  std::vector<MetricsSeries> series;
  std::vector<std::string> failures;
  Stat avg_grad_psi_sq;
  Stat avg_consensus_total;
  Stat final_grad_psi_sq;
};

std::vector<SweepPoint> sweep(const RunConfig& base, const Grid& grid);

}  // namespace dsbo::runner
