#pragma once

#include "dsbo/directions.hpp"
#include "dsbo/topology.hpp"
#include "dsbo/types.hpp"

#include <cstdint>
#include <string_view>

namespace dsbo::strategies {

enum class Strategy { se, gt_atc, gt_semi_atc, gt_non_atc, extra, ed };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

/// Communication rounds one step performs (GT mixes trackers and variables).
int rounds_per_step(Strategy s);

/// Per-agent variables plus the memory the decentralized rules need. All
/// memory starts at zero, so trackers telescope from D^{-1} = 0.
struct SwarmState {
  Blocks vars;
  Blocks trackers;        ///< D^{k-1} (GT variants)
  Blocks prev_estimates;  ///< D_hat^{k-1}
  Blocks prev_vars;       ///< iterate k-1 (EXTRA, ED)
  std::size_t k = 0;
  std::uint64_t mix_rounds = 0;

  static SwarmState start(Blocks vars);
};

struct StepContext {
  const topology::WeightMatrix* w = nullptr;
  directions::StepTriple steps;
  double mu = 0.0;
  double gamma = 1.0;
};

/// Estimates are per-agent rows in the same layout as the variables.
using Estimates = Blocks;

/// theta_i, x_i, y_i <- sum_j w_ij (v_j - lambda D_hat_j).
SwarmState step_se(const SwarmState& s, const StepContext& ctx, const Estimates& est);

/// D^k = W (D^{k-1} + D_hat^k - D_hat^{k-1});  v^{k+1} = W (v^k - lambda D^k).
SwarmState step_gt_atc(const SwarmState& s, const StepContext& ctx, const Estimates& est);

/// Same tracker as ATC;  v^{k+1} = W v^k - lambda D^k.
SwarmState step_gt_semi_atc(const SwarmState& s, const StepContext& ctx, const Estimates& est);

/// D^k = W D^{k-1} + D_hat^k - D_hat^{k-1};  v^{k+1} = W v^k - lambda D^k.
SwarmState step_gt_non_atc(const SwarmState& s, const StepContext& ctx, const Estimates& est);

/// k >= 1: v^{k+1} = v^k + W v^k - W~ v^{k-1} - lambda (D_hat^k - D_hat^{k-1}), W~ = (W + I)/2.
/// k = 0:  v^1 = W v^0 - lambda D_hat^0.
SwarmState step_extra(const SwarmState& s, const StepContext& ctx, const Estimates& est);

/// k >= 1: v^{k+1} = W (2 v^k - v^{k-1} - lambda (D_hat^k - D_hat^{k-1})).
/// k = 0:  v^1 = W (v^0 - lambda D_hat^0).
SwarmState step_ed(const SwarmState& s, const StepContext& ctx, const Estimates& est);

SwarmState step(Strategy strategy, const SwarmState& s, const StepContext& ctx, const Estimates& est);

}  // namespace dsbo::strategies
