#include "dsbo/kernels.hpp"

#include "dsbo/error.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dsbo::kernels {

namespace {

void check_shapes(const topology::WeightMatrix& w, const AgentMatrix& in, const AgentMatrix& out) {
  if (&in == &out) throw Error(ErrorCode::invalid_input, "mix: output aliases input");
  if (static_cast<std::size_t>(in.rows()) != w.n()) {
    throw Error(ErrorCode::invalid_input, "mix: got " + std::to_string(in.rows()) + " agent vectors for n=" +
                                              std::to_string(w.n()));
  }
}

inline void mix_row(const topology::WeightMatrix& w, const AgentMatrix& in, AgentMatrix& out, Eigen::Index i) {
  auto dst = out.row(i);
  dst.setZero();
  for (const auto& e : w.row(static_cast<std::size_t>(i))) {
    dst.noalias() += e.weight * in.row(static_cast<Eigen::Index>(e.col));
  }
}

int threads_from_env() {
  if (const char* env = std::getenv("DSBO_NUM_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int& thread_setting() {
  static int threads = threads_from_env();
  return threads;
}

}  // namespace

int worker_threads() { return thread_setting(); }

void set_worker_threads(int threads) { thread_setting() = threads > 0 ? threads : threads_from_env(); }

void mix_serial(const topology::WeightMatrix& w, const AgentMatrix& in, AgentMatrix& out) {
  check_shapes(w, in, out);
  out.resize(in.rows(), in.cols());
  for (Eigen::Index i = 0; i < in.rows(); ++i) mix_row(w, in, out, i);
}

void mix_parallel(const topology::WeightMatrix& w, const AgentMatrix& in, AgentMatrix& out) {
  check_shapes(w, in, out);
  out.resize(in.rows(), in.cols());
  const Eigen::Index rows = in.rows();
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (rows * in.cols() > 4096)
  for (Eigen::Index i = 0; i < rows; ++i) mix_row(w, in, out, i);
}

void axpy_serial(const AgentMatrix& in, double step, const AgentMatrix& dir, AgentMatrix& out) {
  if (in.rows() != dir.rows() || in.cols() != dir.cols()) {
    throw Error(ErrorCode::invalid_input, "axpy: shape mismatch");
  }
  out.resize(in.rows(), in.cols());
  for (Eigen::Index i = 0; i < in.rows(); ++i) out.row(i) = in.row(i) - step * dir.row(i);
}

void axpy_parallel(const AgentMatrix& in, double step, const AgentMatrix& dir, AgentMatrix& out) {
  if (in.rows() != dir.rows() || in.cols() != dir.cols()) {
    throw Error(ErrorCode::invalid_input, "axpy: shape mismatch");
  }
  out.resize(in.rows(), in.cols());
  const Eigen::Index rows = in.rows();
#pragma omp parallel for schedule(static) num_threads(worker_threads()) if (rows * in.cols() > 4096)
  for (Eigen::Index i = 0; i < rows; ++i) out.row(i) = in.row(i) - step * dir.row(i);
}

}  // namespace dsbo::kernels
