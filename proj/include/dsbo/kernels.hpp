#pragma once

#include "dsbo/topology.hpp"
#include "dsbo/types.hpp"

namespace dsbo::kernels {

// Data-parallel inner loops of a round. Every OpenMP kernel has a serial
// twin kept as the reference implementation; both visit the summands of each
// output row in the same order, so their results are bitwise equal.

void mix_serial(const topology::WeightMatrix& w, const AgentMatrix& in, AgentMatrix& out);
void mix_parallel(const topology::WeightMatrix& w, const AgentMatrix& in, AgentMatrix& out);

/// out = in - step * dir, row by row.
void axpy_serial(const AgentMatrix& in, double step, const AgentMatrix& dir, AgentMatrix& out);
void axpy_parallel(const AgentMatrix& in, double step, const AgentMatrix& dir, AgentMatrix& out);

/// Threads used by the parallel kernels (honours DSBO_NUM_THREADS).
int worker_threads();
void set_worker_threads(int threads);

}  // namespace dsbo::kernels
