#include "dsbo/error.hpp"
#include "dsbo/kernels.hpp"
#include "dsbo/topology.hpp"

#include <doctest.h>

#include <random>

using namespace dsbo;

namespace {

AgentMatrix random_swarm(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  AgentMatrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(eng);
  return m;
}

struct ThreadGuard {
  int saved = kernels::worker_threads();
  ~ThreadGuard() { kernels::set_worker_threads(saved); }
};

}  // namespace

TEST_CASE("parallel mix is bitwise equal to the serial reference") {
  ThreadGuard guard;
  // Large enough to cross the parallel threshold.
  const auto w = topology::build_exponential(64);
  const AgentMatrix in = random_swarm(64, 300, 1);
  AgentMatrix ref, out;
  kernels::mix_serial(w, in, ref);
  for (int threads : {1, 2, 4, 7}) {
    kernels::set_worker_threads(threads);
    kernels::mix_parallel(w, in, out);
    CHECK(out == ref);
  }
  // Matches the dense product up to rounding.
  CHECK((ref - AgentMatrix(w.entries() * in)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("parallel axpy is bitwise equal to the serial reference") {
  ThreadGuard guard;
  const AgentMatrix in = random_swarm(40, 500, 2);
  const AgentMatrix dir = random_swarm(40, 500, 3);
  AgentMatrix ref, out;
  kernels::axpy_serial(in, 0.37, dir, ref);
  for (int threads : {1, 3, 8}) {
    kernels::set_worker_threads(threads);
    kernels::axpy_parallel(in, 0.37, dir, out);
    CHECK(out == ref);
  }
  CHECK((ref - (in - 0.37 * dir)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kernel argument checks") {
  const auto w = topology::build_ring(5, 0.5);
  AgentMatrix v = random_swarm(5, 3, 4);
  CHECK_THROWS_AS(kernels::mix_parallel(w, v, v), Error);
  AgentMatrix out;
  CHECK_THROWS_AS(kernels::mix_serial(w, random_swarm(4, 3, 5), out), Error);
  CHECK_THROWS_AS(kernels::axpy_serial(v, 1.0, random_swarm(5, 2, 6), out), Error);
  CHECK_THROWS_AS(kernels::axpy_parallel(v, 1.0, random_swarm(4, 3, 6), out), Error);
}

TEST_CASE("worker thread setting") {
  ThreadGuard guard;
  kernels::set_worker_threads(3);
  CHECK(kernels::worker_threads() == 3);
  kernels::set_worker_threads(0);
  CHECK(kernels::worker_threads() >= 1);
}
