#pragma once

#include "dsbo/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dsbo::topology {

enum class Kind { ring, line, exponential, dynamic_mh, custom };

/// as_written evaluates the published formula literally; normalized (a.k.a.
/// metropolis) puts Metropolis-Hastings weights on the same adjacency.
enum class Mode { as_written, normalized };

std::string_view to_string(Kind k);
std::string_view to_string(Mode m);
Kind parse_kind(std::string_view s);
Mode parse_mode(std::string_view s);

/// Nonzero weights of one row, used by the mixing kernels.
struct RowEntry {
  std::size_t col;
  double weight;
};

/// Immutable n x n gossip matrix. Literal (as_written) constructions may
/// violate double stochasticity; such matrices carry warnings instead of
/// being repaired.
class WeightMatrix {
 public:
  WeightMatrix(Mat entries, Kind kind, std::vector<std::string> warnings = {});

  std::size_t n() const { return static_cast<std::size_t>(entries_.rows()); }
  const Mat& entries() const { return entries_; }
  Kind kind() const { return kind_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const std::vector<RowEntry>& row(std::size_t i) const { return rows_[i]; }

  /// (W + I) / 2, the second matrix of EXTRA.
  WeightMatrix lazy() const;

  static WeightMatrix identity(std::size_t n);

 private:
  Mat entries_;
  Kind kind_;
  std::vector<std::string> warnings_;
  std::vector<std::vector<RowEntry>> rows_;
};

struct ConnectivityReport {
  double rho = 0.0;
  double lambda2 = 0.0;
  double lambda_n = 0.0;
  double spectral_gap = 1.0;
  bool connected = true;
  std::vector<double> eigenvalues;  ///< descending
};

struct Violation {
  std::string kind;  ///< negative_entry, asymmetric, row_sum, column_sum, disconnected
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<double> row_sums;
  std::vector<double> column_sums;
  bool connected = true;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view kind) const;
};

inline constexpr double kStochasticTol = 1e-12;

WeightMatrix build_ring(std::size_t n, double a);
WeightMatrix build_line(std::size_t n, Mode mode = Mode::normalized);
WeightMatrix build_exponential(std::size_t n, Mode mode = Mode::normalized);
WeightMatrix build_dynamic_mh(std::size_t n, std::size_t m_min, std::size_t m_max, std::uint64_t round_seed);

/// Metropolis-Hastings weights on a symmetric 0/1 adjacency (diagonal ignored):
/// w_ij = 1 / (1 + max(deg_i, deg_j)) on edges, self-weights complete rows.
Mat metropolis_weights(const Eigen::MatrixXi& adjacency);

/// Breadth-first reachability on the nonzero pattern of `m`.
bool is_connected(const Mat& m);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
/// Stops when the off-diagonal Frobenius norm drops below `tol`.
std::vector<double> symmetric_eigenvalues(const Mat& m, double tol = 1e-12, int max_sweeps = 100);

ConnectivityReport spectral_report(const WeightMatrix& w);

ValidationReport validate(const WeightMatrix& w);

/// output[i] = sum_j w_ij input[j]. Parallel over rows; bitwise independent
/// of the thread count.
AgentMatrix mix(const WeightMatrix& w, const AgentMatrix& input);

/// Sum over agents of the squared distance to the agent mean.
double deviation_energy(const AgentMatrix& v);

}  // namespace dsbo::topology
