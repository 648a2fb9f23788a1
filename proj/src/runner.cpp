#include "dsbo/runner.hpp"

#include "dsbo/error.hpp"
#include "dsbo/kernels.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

namespace dsbo::runner {

using directions::DirectionTriple;
using directions::EstimatorKind;
using directions::EstimatorState;
using problems::BilevelProblem;

std::shared_ptr<const BilevelProblem> build_problem(const ProblemSpec& spec) {
  if (spec.instance == Instance::toy) {
    if (spec.noise.kind == problems::NoiseKind::minibatch) {
      throw Error(ErrorCode::config_error, "problem.noise.kind: toy instance supports additive_gaussian only");
    }
    return std::make_shared<problems::QuadraticToy>(spec.toy);
  }
  return std::make_shared<problems::LogisticHyperopt>(problems::generate_logistic_data(spec.logistic));
}

topology::WeightMatrix build_topology(const TopologySpec& spec, std::size_t n, std::uint64_t base_seed,
                                      std::size_t round) {
  using topology::Kind;
  switch (spec.kind) {
    case Kind::ring: return topology::build_ring(n, spec.a);
    case Kind::line: return topology::build_line(n, spec.mode);
    case Kind::exponential: return topology::build_exponential(n, spec.mode);
    case Kind::dynamic_mh: {
      const auto key = derive_draw_key(spec.seed.value_or(base_seed), round, 0, Stream::topology);
      return topology::build_dynamic_mh(n, spec.m_min, spec.m_max, mix64(key.seed) ^ key.counter);
    }
    case Kind::custom:
      if (!spec.custom) throw Error(ErrorCode::config_error, "topology.matrix: custom topology needs a matrix");
      if (static_cast<std::size_t>(spec.custom->rows()) != n) {
        throw Error(ErrorCode::config_error, "topology.matrix: size differs from problem.n_agents");
      }
      return topology::WeightMatrix(*spec.custom, Kind::custom);
  }
  throw Error(ErrorCode::config_error, "unknown topology kind");
}

std::vector<std::string> validate_config(const RunConfig& cfg, const BilevelProblem& problem) {
  std::vector<std::string> warnings;
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::config_error, msg); };
  if (cfg.K < 1) fail("runner.K must be >= 1");
  if (cfg.record_every < 1) fail("runner.record_every must be >= 1");
  if (cfg.schedules.K != cfg.K) fail("schedules.K must equal runner.K");
  try {
    directions::validate(cfg.schedules);
  } catch (const Error& e) {
    fail(std::string("schedules: ") + e.what());
  }
  if (!(cfg.envelope.gamma > 0.0)) fail("envelope.gamma must be positive");
  if (!(cfg.envelope.inner_tol > 0.0) || cfg.envelope.inner_max_iters < 1) fail("envelope: invalid inner solve controls");
  if (cfg.problem.n_agents() != problem.n_agents()) fail("problem.n_agents does not match the built instance");
  if (!envelope::gamma_in_theory_range(cfg.envelope, problem)) {
    std::ostringstream os;
    os << "gamma_range_warning: gamma=" << cfg.envelope.gamma << " outside (0, 1/(2 L2)) = (0, "
       << 1.0 / (2.0 * problem.L2()) << ")";
    warnings.push_back(os.str());
  }
  const auto rho_ok = [](const directions::RhoSchedule& r) {
    return r.decaying ? (r.c > 0.0 && r.power >= 0.0) : (r.constant > 0.0 && r.constant <= 1.0);
  };
  if (!rho_ok(cfg.estimator.rho)) fail("estimator.rho must lie in (0, 1]");

  auto check_init = [&](const std::optional<InitBlock>& b, std::size_t dim, const char* name) {
    if (b && b->kind == InitBlock::Kind::explicit_vector && static_cast<std::size_t>(b->value.size()) != dim) {
      fail(std::string("runner.init.") + name + ": explicit vector has wrong dimension");
    }
  };
  check_init(cfg.init.x, problem.dx(), "x");
  check_init(cfg.init.y, problem.dy(), "y");
  check_init(cfg.init.theta, problem.dy(), "theta");

  // Static topologies are checked once here; dynamic ones are valid by construction.
  if (cfg.topology.kind != topology::Kind::dynamic_mh) {
    topology::WeightMatrix w = [&] {
      try {
        return build_topology(cfg.topology, problem.n_agents(), cfg.base_seed);
      } catch (const Error& e) {
        fail(std::string("topology: ") + e.what());
      }
      throw Error(ErrorCode::config_error, "unreachable");
    }();
    const auto rep = topology::validate(w);
    for (const auto& v : rep.violations) warnings.push_back("topology " + v.kind + ": " + v.detail);
    // ED mixes the extrapolated iterate with W itself; its recursion has a root
    // of modulus > 1 once W has an eigenvalue below about -1/3.
    if (cfg.strategy == strategies::Strategy::ed && rep.violations.empty() && w.n() > 1) {
      const double lambda_n = topology::spectral_report(w).lambda_n;
      if (lambda_n < -1.0 / 3.0) {
        std::ostringstream os;
        os << "ed_indefinite_w: smallest eigenvalue of W is " << lambda_n
           << "; exact diffusion diverges below -1/3 (use a lazier W)";
        warnings.push_back(os.str());
      }
    }
  } else if (cfg.topology.m_min < 1 || cfg.topology.m_min > cfg.topology.m_max ||
             cfg.topology.m_max + 1 > problem.n_agents()) {
    fail("topology: dynamic_mh needs 1 <= m_min <= m_max <= n-1");
  }
  return warnings;
}

Blocks initial_blocks(const RunConfig& cfg, const BilevelProblem& problem) {
  const std::size_t n = problem.n_agents();
  Blocks b = Blocks::zeros(n, problem.dx(), problem.dy());
  const InitBlock fallback = cfg.problem.instance == Instance::toy ? InitBlock{}
                                                                    : InitBlock{InitBlock::Kind::gaussian, 0.01, {}};
  auto fill = [&](AgentMatrix& m, const std::optional<InitBlock>& spec, std::uint64_t substream) {
    const InitBlock& s = spec ? *spec : fallback;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      switch (s.kind) {
        case InitBlock::Kind::zeros: m.row(row).setZero(); break;
        case InitBlock::Kind::explicit_vector: m.row(row) = s.value.transpose(); break;
        case InitBlock::Kind::gaussian: {
          auto engine = make_engine(derive_draw_key(cfg.base_seed, 0, i, Stream::init), substream);
          m.row(row) = gaussian_vector(engine, m.cols(), s.scale).transpose();
          break;
        }
      }
    }
  };
  fill(b.theta, cfg.init.theta, 0);
  fill(b.x, cfg.init.x, 1);
  fill(b.y, cfg.init.y, 2);
  return b;
}

namespace {

DirectionTriple agent_estimate(const RoundInputs& in, const Blocks& vars, const Blocks& prev_vars, std::size_t i,
                               EstimatorState& est) {
  const auto row = static_cast<Eigen::Index>(i);
  const directions::SampleKeys keys{derive_draw_key(in.base_seed, in.k, i, Stream::grad_f),
                                    derive_draw_key(in.base_seed, in.k, i, Stream::grad_g)};
  const Vec x = vars.x.row(row).transpose();
  const Vec y = vars.y.row(row).transpose();
  const Vec theta = vars.theta.row(row).transpose();
  const DirectionTriple raw =
      directions::stochastic_directions(*in.problem, i, x, y, theta, in.mu, in.gamma, *in.noise, keys);
  std::optional<DirectionTriple> reeval;
  if (est.kind == EstimatorKind::storm && est.prev_estimate) {
    reeval = directions::stochastic_directions(*in.problem, i, prev_vars.x.row(row).transpose(),
                                               prev_vars.y.row(row).transpose(),
                                               prev_vars.theta.row(row).transpose(), in.mu_prev, in.gamma,
                                               *in.noise, keys);
  }
  auto update = directions::apply_estimator(est, raw, reeval ? &*reeval : nullptr);
  est = std::move(update.state);
  if (!update.estimate.all_finite()) {
    throw Error(ErrorCode::invalid_input, "non-finite direction at agent " + std::to_string(i) + ", k=" +
                                              std::to_string(in.k));
  }
  return std::move(update.estimate);
}

void store(Blocks& out, std::size_t i, const DirectionTriple& d) {
  const auto row = static_cast<Eigen::Index>(i);
  out.theta.row(row) = d.d_theta.transpose();
  out.x.row(row) = d.d_x.transpose();
  out.y.row(row) = d.d_y.transpose();
}

}  // namespace

Blocks compute_estimates_serial(const RoundInputs& in, const Blocks& vars, const Blocks& prev_vars,
                                std::vector<EstimatorState>& estimators) {
  Blocks out = Blocks::zeros(vars.agents(), static_cast<std::size_t>(vars.x.cols()),
                             static_cast<std::size_t>(vars.y.cols()));
  for (std::size_t i = 0; i < vars.agents(); ++i) store(out, i, agent_estimate(in, vars, prev_vars, i, estimators[i]));
  return out;
}

Blocks compute_estimates_parallel(const RoundInputs& in, const Blocks& vars, const Blocks& prev_vars,
                                  std::vector<EstimatorState>& estimators) {
  Blocks out = Blocks::zeros(vars.agents(), static_cast<std::size_t>(vars.x.cols()),
                             static_cast<std::size_t>(vars.y.cols()));
  const auto n = static_cast<std::ptrdiff_t>(vars.agents());
  std::vector<std::exception_ptr> errors(vars.agents());
#pragma omp parallel for schedule(static) num_threads(kernels::worker_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto agent = static_cast<std::size_t>(i);
    try {
      store(out, agent, agent_estimate(in, vars, prev_vars, agent, estimators[agent]));
    } catch (...) {
      errors[agent] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

namespace {

std::optional<double> relative_error(const Vec& v, const Vec& ref) {
  const double denom = ref.norm();
  if (denom == 0.0) return std::nullopt;
  return (v - ref).norm() / denom;
}

envelope::StationarityRecord nan_record(double mu) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  envelope::StationarityRecord r{nan, nan, nan, nan, nan, mu};
  return r;
}

}  // namespace

MetricsSeries run(const RunConfig& cfg) {
  const auto problem = build_problem(cfg.problem);
  return run(cfg, *problem);
}

MetricsSeries run(const RunConfig& cfg, const BilevelProblem& problem) {
  MetricsSeries series;
  series.run_id = cfg.run_id;
  series.warnings = validate_config(cfg, problem);
  series.gamma_range_warning = !envelope::gamma_in_theory_range(cfg.envelope, problem);

  const std::size_t n = problem.n_agents();
  const auto reference = problem.reference();
  const bool dynamic = cfg.topology.kind == topology::Kind::dynamic_mh;
  std::optional<topology::WeightMatrix> static_w;
  if (!dynamic) static_w = build_topology(cfg.topology, n, cfg.base_seed);

  strategies::SwarmState state = strategies::SwarmState::start(initial_blocks(cfg, problem));
  std::vector<EstimatorState> estimators(n);
  for (auto& e : estimators) e.kind = cfg.estimator.kind;

  const auto t0 = std::chrono::steady_clock::now();
  Vec warm_theta;
  auto record = [&](std::size_t k, double mu) {
    MetricsRow row;
    row.k = k;
    row.mu = mu;
    row.mix_ops_cumulative = state.mix_rounds;
    try {
      row.record = envelope::metrics(problem, state.vars, mu, cfg.envelope, &warm_theta);
    } catch (const InnerSolveFailed&) {
      row.record = nan_record(mu);
      row.gap = true;
      warm_theta.resize(0);
    }
    if (reference && !row.gap) {
      row.rel_err_x = relative_error(state.vars.x.colwise().mean().transpose(), reference->x);
      row.rel_err_y = relative_error(state.vars.y.colwise().mean().transpose(), reference->y);
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    series.rows.push_back(std::move(row));
  };

  RoundInputs in{&problem, &cfg.problem.noise, 0.0, 0.0, cfg.envelope.gamma, cfg.base_seed, 0};
  for (std::size_t k = 0; k < cfg.K; ++k) {
    const double mu = directions::mu_at(cfg.schedules, k);
    if (k % cfg.record_every == 0 || k + 1 == cfg.K) record(k, mu);

    std::optional<topology::WeightMatrix> round_w;
    if (dynamic) round_w = build_topology(cfg.topology, n, cfg.base_seed, k);
    const topology::WeightMatrix& w = dynamic ? *round_w : *static_w;
    for (auto& e : estimators) {
      const double r = cfg.estimator.rho.at(k);
      e.rho = {r, r, r};
    }
    in.k = k;
    in.mu = mu;
    in.mu_prev = k > 0 ? directions::mu_at(cfg.schedules, k - 1) : mu;
    const Blocks est = compute_estimates_parallel(in, state.vars, state.prev_vars, estimators);
    const strategies::StepContext ctx{&w, directions::steps_at(cfg.schedules, k, n), mu, cfg.envelope.gamma};
    state = strategies::step(cfg.strategy, state, ctx, est);
  }

  // Summary over recorded rows plus the state after the final round.
  Summary& s = series.summary;
  std::size_t used = 0;
  for (const auto& row : series.rows) {
    if (row.gap) {
      ++s.gap_rows;
      continue;
    }
    s.avg_grad_psi_sq += row.record.grad_psi_sq;
    s.avg_consensus_total += row.record.consensus_total;
    ++used;
  }
  if (used > 0) {
    s.avg_grad_psi_sq /= static_cast<double>(used);
    s.avg_consensus_total /= static_cast<double>(used);
  }
  series.final_x_bar = state.vars.x.colwise().mean().transpose();
  series.final_y_bar = state.vars.y.colwise().mean().transpose();
  try {
    const auto fin = envelope::metrics(problem, state.vars, directions::mu_at(cfg.schedules, cfg.K), cfg.envelope,
                                       &warm_theta);
    s.final_grad_psi_sq = fin.grad_psi_sq;
    s.final_consensus_total = fin.consensus_total;
  } catch (const InnerSolveFailed&) {
    s.final_grad_psi_sq = s.final_consensus_total = std::numeric_limits<double>::quiet_NaN();
  }
  if (reference) {
    s.final_rel_err_x = relative_error(series.final_x_bar, reference->x);
    s.final_rel_err_y = relative_error(series.final_y_bar, reference->y);
  }
  return series;
}

Stat two_pass_stat(const std::vector<double>& v) {
  Stat s;
  s.count = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (const double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (const double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

Stat streaming_stat(const std::vector<double>& v) {
  // Welford's update.
  Stat s;
  double m2 = 0.0;
  for (const double x : v) {
    ++s.count;
    const double delta = x - s.mean;
    s.mean += delta / static_cast<double>(s.count);
    m2 += delta * (x - s.mean);
  }
  if (s.count > 1) s.stddev = std::sqrt(m2 / static_cast<double>(s.count - 1));
  return s;
}

std::vector<SweepPoint> sweep(const RunConfig& base, const Grid& grid) {
  // Each axis falls back to the base config's value when empty.
  const std::vector<std::size_t> ns = grid.n.empty() ? std::vector<std::size_t>{base.problem.n_agents()} : grid.n;
  const std::vector<TopologySpec> tops = grid.topology.empty() ? std::vector<TopologySpec>{base.topology} : grid.topology;
  const std::vector<double> ps = grid.p.empty() ? std::vector<double>{base.schedules.p} : grid.p;
  const std::vector<double> gammas = grid.gamma.empty() ? std::vector<double>{base.envelope.gamma} : grid.gamma;
  const std::vector<strategies::Strategy> strats =
      grid.strategy.empty() ? std::vector<strategies::Strategy>{base.strategy} : grid.strategy;
  const std::vector<std::uint64_t> seeds = grid.seeds.empty() ? std::vector<std::uint64_t>{base.base_seed} : grid.seeds;

  std::vector<SweepPoint> points;
  for (const auto n : ns) {
    for (const auto& top : tops) {
      for (const double p : ps) {
        for (const double gamma : gammas) {
          for (const auto strat : strats) {
            SweepPoint pt;
            pt.config = base;
            pt.config.problem.toy.n_agents = n;
            pt.config.problem.logistic.n_agents = n;
            pt.config.topology = top;
            pt.config.schedules.p = p;
            pt.config.envelope.gamma = gamma;
            pt.config.strategy = strat;
            pt.config.base_seed = seeds.front();
            std::ostringstream label;
            label << "n=" << n << ";topology=" << topology::to_string(top.kind) << ";p=" << p << ";gamma=" << gamma
                  << ";strategy=" << strategies::to_string(strat);
            pt.label = label.str();
            pt.seeds = seeds;

            std::shared_ptr<const BilevelProblem> problem;
            try {
              problem = build_problem(pt.config.problem);
            } catch (const std::exception& e) {
              pt.failures.push_back(e.what());
              points.push_back(std::move(pt));
              continue;
            }
            std::vector<double> avg, cons, fin;
            for (std::size_t r = 0; r < seeds.size(); ++r) {
              RunConfig cfg = pt.config;
              cfg.base_seed = seeds[r];
              cfg.run_id = pt.label + ";seed=" + std::to_string(seeds[r]);
              try {
                MetricsSeries ms = run(cfg, *problem);
                avg.push_back(ms.summary.avg_grad_psi_sq);
                cons.push_back(ms.summary.avg_consensus_total);
                fin.push_back(ms.summary.final_grad_psi_sq);
                pt.summaries.push_back(ms.summary);
                pt.series.push_back(std::move(ms));
              } catch (const std::exception& e) {
                pt.failures.push_back("seed " + std::to_string(seeds[r]) + ": " + e.what());
              }
            }
            pt.avg_grad_psi_sq = two_pass_stat(avg);
            pt.avg_consensus_total = two_pass_stat(cons);
            pt.final_grad_psi_sq = two_pass_stat(fin);
            points.push_back(std::move(pt));
          }
        }
      }
    }
  }
  return points;
}

}  // namespace dsbo::runner
