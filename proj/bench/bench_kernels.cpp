// Serial vs OpenMP timings for the mixing, axpy and per-agent estimate kernels.
// Usage: bench_kernels [agents] [dim] [reps]

#include "dsbo/kernels.hpp"
#include "dsbo/runner.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

using namespace dsbo;

namespace {

template <class Fn>
double time_ms(int reps, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / reps;
}

AgentMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  AgentMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(eng);
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 64;
  const std::size_t dim = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 2000;
  const int reps = argc > 3 ? std::atoi(argv[3]) : 50;

  const auto w = topology::build_exponential(n);
  const AgentMatrix in = random_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim), 1);
  const AgentMatrix dir = random_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim), 2);
  AgentMatrix out_s, out_p;

  std::printf("agents=%zu dim=%zu reps=%d threads=%d\n", n, dim, reps, kernels::worker_threads());
  std::printf("%-10s %12s %12s %10s %s\n", "kernel", "serial_ms", "parallel_ms", "speedup", "identical");

  const double ms_mix_s = time_ms(reps, [&] { kernels::mix_serial(w, in, out_s); });
  const double ms_mix_p = time_ms(reps, [&] { kernels::mix_parallel(w, in, out_p); });
  std::printf("%-10s %12.4f %12.4f %10.2f %s\n", "mix", ms_mix_s, ms_mix_p, ms_mix_s / ms_mix_p,
              out_s == out_p ? "yes" : "no");

  const double ms_ax_s = time_ms(reps, [&] { kernels::axpy_serial(in, 0.01, dir, out_s); });
  const double ms_ax_p = time_ms(reps, [&] { kernels::axpy_parallel(in, 0.01, dir, out_p); });
  std::printf("%-10s %12.4f %12.4f %10.2f %s\n", "axpy", ms_ax_s, ms_ax_p, ms_ax_s / ms_ax_p,
              out_s == out_p ? "yes" : "no");

  problems::ToyParams tp;
  tp.n_agents = n;
  tp.N = dim / 2;
  const problems::QuadraticToy toy(tp);
  const problems::NoiseModel noise{problems::NoiseKind::additive_gaussian, 0.1, 0.1, 32};
  const runner::RoundInputs round{&toy, &noise, 0.1, 0.1, 10.0, 7, 3};
  Blocks vars = Blocks::zeros(n, toy.dx(), toy.dy());
  vars.x = random_matrix(vars.x.rows(), vars.x.cols(), 3);
  vars.y = random_matrix(vars.y.rows(), vars.y.cols(), 4);
  vars.theta = random_matrix(vars.theta.rows(), vars.theta.cols(), 5);
  std::vector<directions::EstimatorState> est_s(n), est_p(n);
  Blocks res_s, res_p;
  const double ms_est_s = time_ms(reps, [&] {
    std::vector<directions::EstimatorState> fresh(n);
    res_s = runner::compute_estimates_serial(round, vars, vars, fresh);
  });
  const double ms_est_p = time_ms(reps, [&] {
    std::vector<directions::EstimatorState> fresh(n);
    res_p = runner::compute_estimates_parallel(round, vars, vars, fresh);
  });
  const bool same = res_s.x == res_p.x && res_s.y == res_p.y && res_s.theta == res_p.theta;
  std::printf("%-10s %12.4f %12.4f %10.2f %s\n", "estimates", ms_est_s, ms_est_p, ms_est_s / ms_est_p,
              same ? "yes" : "no");
  return 0;
}
