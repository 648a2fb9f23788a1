#include "dsbo/strategies.hpp"

#include "dsbo/error.hpp"
#include "dsbo/kernels.hpp"

namespace dsbo::strategies {

using topology::WeightMatrix;

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::se: return "se";
    case Strategy::gt_atc: return "gt_atc";
    case Strategy::gt_semi_atc: return "gt_semi_atc";
    case Strategy::gt_non_atc: return "gt_non_atc";
    case Strategy::extra: return "extra";
    case Strategy::ed: return "ed";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "se") return Strategy::se;
  if (s == "gt_atc" || s == "gt") return Strategy::gt_atc;
  if (s == "gt_semi_atc") return Strategy::gt_semi_atc;
  if (s == "gt_non_atc") return Strategy::gt_non_atc;
  if (s == "extra") return Strategy::extra;
  if (s == "ed") return Strategy::ed;
  throw Error(ErrorCode::invalid_parameter, "unknown strategy '" + std::string(s) + "'");
}

int rounds_per_step(Strategy s) {
  switch (s) {
    case Strategy::gt_atc:
    case Strategy::gt_semi_atc:
    case Strategy::gt_non_atc: return 2;
    default: return 1;
  }
}

SwarmState SwarmState::start(Blocks vars) {
  SwarmState s;
  const auto n = vars.agents();
  const auto dx = static_cast<std::size_t>(vars.x.cols());
  const auto dy = static_cast<std::size_t>(vars.y.cols());
  s.trackers = Blocks::zeros(n, dx, dy);
  s.prev_estimates = Blocks::zeros(n, dx, dy);
  s.prev_vars = vars;
  s.vars = std::move(vars);
  return s;
}

namespace {

AgentMatrix& block_of(Blocks& b, int idx) { return idx == 0 ? b.theta : (idx == 1 ? b.x : b.y); }
const AgentMatrix& block_of(const Blocks& b, int idx) { return idx == 0 ? b.theta : (idx == 1 ? b.x : b.y); }

void check(const SwarmState& s, const StepContext& ctx, const Estimates& est) {
  if (ctx.w == nullptr) throw Error(ErrorCode::invalid_input, "step context has no weight matrix");
  if (ctx.w->n() != s.vars.agents()) throw Error(ErrorCode::invalid_input, "weight matrix size differs from swarm");
  for (int b = 0; b < 3; ++b) {
    const auto& v = block_of(s.vars, b);
    const auto& d = block_of(est, b);
    if (v.rows() != d.rows() || v.cols() != d.cols()) {
      throw Error(ErrorCode::invalid_input, "estimate dimensions differ from swarm variables");
    }
  }
  if (ctx.steps.theta < 0.0 || ctx.steps.x < 0.0 || ctx.steps.y < 0.0) {
    throw Error(ErrorCode::invalid_parameter, "step sizes must be nonnegative");
  }
}

AgentMatrix mixed(const WeightMatrix& w, const AgentMatrix& in) {
  AgentMatrix out;
  kernels::mix_parallel(w, in, out);
  return out;
}

double step_for(const StepContext& ctx, int b) { return ctx.steps[static_cast<Block>(b)]; }

/// Common bookkeeping: remember the estimates and the outgoing iterate.
SwarmState advance(const SwarmState& s, const Estimates& est, Blocks next_vars, Strategy strategy) {
  SwarmState out;
  out.trackers = s.trackers;
  out.prev_estimates = est;
  out.prev_vars = s.vars;
  out.vars = std::move(next_vars);
  out.k = s.k + 1;
  out.mix_rounds = s.mix_rounds + static_cast<std::uint64_t>(rounds_per_step(strategy));
  return out;
}

enum class Tracker { mixed_innovation, local_innovation };
enum class Placement { atc, after_mix };

SwarmState gt_step(const SwarmState& s, const StepContext& ctx, const Estimates& est, Tracker tracker,
                   Placement placement, Strategy strategy) {
  check(s, ctx, est);
  const WeightMatrix& w = *ctx.w;
  Blocks trackers = s.trackers;
  Blocks next = s.vars;
  for (int b = 0; b < 3; ++b) {
    const AgentMatrix& prev_t = block_of(s.trackers, b);
    const AgentMatrix innovation = block_of(est, b) - block_of(s.prev_estimates, b);
    AgentMatrix& t = block_of(trackers, b);
    if (tracker == Tracker::mixed_innovation) {
      t = mixed(w, prev_t + innovation);
    } else {
      t = mixed(w, prev_t) + innovation;
    }
    const double lambda = step_for(ctx, b);
    if (placement == Placement::atc) {
      AgentMatrix stepped;
      kernels::axpy_parallel(block_of(s.vars, b), lambda, t, stepped);
      block_of(next, b) = mixed(w, stepped);
    } else {
      AgentMatrix m = mixed(w, block_of(s.vars, b));
      kernels::axpy_parallel(m, lambda, t, block_of(next, b));
    }
  }
  SwarmState out = advance(s, est, std::move(next), strategy);
  out.trackers = std::move(trackers);
  return out;
}

}  // namespace

SwarmState step_se(const SwarmState& s, const StepContext& ctx, const Estimates& est) {
  check(s, ctx, est);
  Blocks next = s.vars;
  for (int b = 0; b < 3; ++b) {
    AgentMatrix stepped;
    kernels::axpy_parallel(block_of(s.vars, b), step_for(ctx, b), block_of(est, b), stepped);
    block_of(next, b) = mixed(*ctx.w, stepped);
  }
  return advance(s, est, std::move(next), Strategy::se);
}

SwarmState step_gt_atc(const SwarmState& s, const StepContext& ctx, const Estimates& est) {
  return gt_step(s, ctx, est, Tracker::mixed_innovation, Placement::atc, Strategy::gt_atc);
}

SwarmState step_gt_semi_atc(const SwarmState& s, const StepContext& ctx, const Estimates& est) {
  return gt_step(s, ctx, est, Tracker::mixed_innovation, Placement::after_mix, Strategy::gt_semi_atc);
}

SwarmState step_gt_non_atc(const SwarmState& s, const StepContext& ctx, const Estimates& est) {
  return gt_step(s, ctx, est, Tracker::local_innovation, Placement::after_mix, Strategy::gt_non_atc);
}

SwarmState step_extra(const SwarmState& s, const StepContext& ctx, const Estimates& est) {
  check(s, ctx, est);
  const WeightMatrix& w = *ctx.w;
  Blocks next = s.vars;
  for (int b = 0; b < 3; ++b) {
    const double lambda = step_for(ctx, b);
    const AgentMatrix& v = block_of(s.vars, b);
    const AgentMatrix& d = block_of(est, b);
    if (s.k == 0) {
      kernels::axpy_parallel(mixed(w, v), lambda, d, block_of(next, b));
      continue;
    }
    const AgentMatrix& v_prev = block_of(s.prev_vars, b);
    const AgentMatrix lazy_prev = 0.5 * (mixed(w, v_prev) + v_prev);
    block_of(next, b) = v + mixed(w, v) - lazy_prev - lambda * (d - block_of(s.prev_estimates, b));
  }
  return advance(s, est, std::move(next), Strategy::extra);
}

SwarmState step_ed(const SwarmState& s, const StepContext& ctx, const Estimates& est) {
  check(s, ctx, est);
  const WeightMatrix& w = *ctx.w;
  Blocks next = s.vars;
  for (int b = 0; b < 3; ++b) {
    const double lambda = step_for(ctx, b);
    const AgentMatrix& v = block_of(s.vars, b);
    const AgentMatrix& d = block_of(est, b);
    AgentMatrix inner;
    if (s.k == 0) {
      kernels::axpy_parallel(v, lambda, d, inner);
    } else {
      inner = 2.0 * v - block_of(s.prev_vars, b) - lambda * (d - block_of(s.prev_estimates, b));
    }
    block_of(next, b) = mixed(w, inner);
  }
  return advance(s, est, std::move(next), Strategy::ed);
}

SwarmState step(Strategy strategy, const SwarmState& s, const StepContext& ctx, const Estimates& est) {
  switch (strategy) {
    case Strategy::se: return step_se(s, ctx, est);
    case Strategy::gt_atc: return step_gt_atc(s, ctx, est);
    case Strategy::gt_semi_atc: return step_gt_semi_atc(s, ctx, est);
    case Strategy::gt_non_atc: return step_gt_non_atc(s, ctx, est);
    case Strategy::extra: return step_extra(s, ctx, est);
    case Strategy::ed: return step_ed(s, ctx, est);
  }
  throw Error(ErrorCode::invalid_parameter, "unknown strategy");
}

}  // namespace dsbo::strategies
