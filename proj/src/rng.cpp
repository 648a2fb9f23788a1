#include "dsbo/rng.hpp"

#include "dsbo/error.hpp"

namespace dsbo {

std::string_view to_string(Stream s) {
  switch (s) {
    case Stream::grad_f: return "grad_f";
    case Stream::grad_g: return "grad_g";
    case Stream::topology: return "topology";
    case Stream::init: return "init";
    case Stream::dataset: return "dataset";
  }
  return "unknown";
}

DrawKey derive_draw_key(std::uint64_t base_seed, std::uint64_t k, std::uint64_t agent, Stream stream) {
  if (k > kMaxIteration || agent > kMaxAgent) {
    throw Error(ErrorCode::invalid_input, "draw key field out of range");
  }
  const std::uint64_t packed = (k << 24) | (agent << 4) | static_cast<std::uint64_t>(stream);
  return {base_seed, packed};
}

std::mt19937_64 make_engine(const DrawKey& key, std::uint64_t substream) {
  std::seed_seq seq{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32),
                    static_cast<std::uint32_t>(key.counter),
                    static_cast<std::uint32_t>(key.counter >> 32),
                    static_cast<std::uint32_t>(substream)};
  return std::mt19937_64(seq);
}

Vec gaussian_vector(std::mt19937_64& engine, Eigen::Index dim, double stddev) {
  Vec out(dim);
  if (stddev == 0.0) {
    out.setZero();
    return out;
  }
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index i = 0; i < dim; ++i) out[i] = normal(engine);
  return out;
}

}  // namespace dsbo
