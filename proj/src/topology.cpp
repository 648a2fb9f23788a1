#include "dsbo/topology.hpp"

#include "dsbo/error.hpp"
#include "dsbo/kernels.hpp"
#include "dsbo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace dsbo::topology {

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::ring: return "ring";
    case Kind::line: return "line";
    case Kind::exponential: return "exponential";
    case Kind::dynamic_mh: return "dynamic_mh";
    case Kind::custom: return "custom";
  }
  return "unknown";
}

std::string_view to_string(Mode m) { return m == Mode::as_written ? "as_written" : "normalized"; }

Kind parse_kind(std::string_view s) {
  if (s == "ring") return Kind::ring;
  if (s == "line") return Kind::line;
  if (s == "exponential") return Kind::exponential;
  if (s == "dynamic_mh") return Kind::dynamic_mh;
  if (s == "custom") return Kind::custom;
  throw Error(ErrorCode::invalid_parameter, "unknown topology kind '" + std::string(s) + "'");
}

Mode parse_mode(std::string_view s) {
  if (s == "as_written") return Mode::as_written;
  if (s == "normalized" || s == "metropolis") return Mode::normalized;
  throw Error(ErrorCode::invalid_parameter, "unknown topology mode '" + std::string(s) + "'");
}

bool ValidationReport::has(std::string_view kind) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; });
}

WeightMatrix::WeightMatrix(Mat entries, Kind kind, std::vector<std::string> warnings)
    : entries_(std::move(entries)), kind_(kind), warnings_(std::move(warnings)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw Error(ErrorCode::invalid_matrix, "weight matrix must be square and nonempty");
  }
  rows_.resize(n());
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
      if (entries_(i, j) != 0.0) rows_[static_cast<std::size_t>(i)].push_back({static_cast<std::size_t>(j), entries_(i, j)});
    }
  }
}

WeightMatrix WeightMatrix::lazy() const {
  const auto m = entries_.rows();
  return WeightMatrix(0.5 * (entries_ + Mat::Identity(m, m)), kind_, warnings_);
}

WeightMatrix WeightMatrix::identity(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return WeightMatrix(Mat::Identity(m, m), Kind::custom);
}

namespace {

std::vector<std::string> stochasticity_warnings(const Mat& w) {
  std::vector<std::string> out;
  const Vec rows = w.rowwise().sum();
  const Vec cols = w.colwise().sum().transpose();
  auto describe = [](const char* what, const Vec& sums) {
    std::ostringstream os;
    os << what << " sums not all 1:";
    for (Eigen::Index i = 0; i < sums.size(); ++i) os << ' ' << sums[i];
    return os.str();
  };
  if (((rows.array() - 1.0).abs() > kStochasticTol).any()) out.push_back(describe("row", rows));
  if (((cols.array() - 1.0).abs() > kStochasticTol).any()) out.push_back(describe("column", cols));
  if (!w.isApprox(w.transpose(), 0.0) && (w - w.transpose()).cwiseAbs().maxCoeff() > kStochasticTol) {
    out.emplace_back("matrix is not symmetric");
  }
  return out;
}

}  // namespace

Mat metropolis_weights(const Eigen::MatrixXi& adjacency) {
  const Eigen::Index n = adjacency.rows();
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && adjacency(i, j) != 0) ++degree[static_cast<std::size_t>(i)];
    }
  }
  Mat w = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (adjacency(i, j) == 0) continue;
      const int d = std::max(degree[static_cast<std::size_t>(i)], degree[static_cast<std::size_t>(j)]);
      w(i, j) = w(j, i) = 1.0 / (1.0 + d);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) off += w(i, j);
    }
    w(i, i) = 1.0 - off;
  }
  return w;
}

WeightMatrix build_ring(std::size_t n, double a) {
  if (n < 3) throw Error(ErrorCode::invalid_topology, "ring needs n >= 3");
  if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::invalid_parameter, "ring self-weight a must lie in (0,1)");
  const auto m = static_cast<Eigen::Index>(n);
  Mat w = Mat::Zero(m, m);
  const double side = (1.0 - a) / 2.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    w(i, i) = a;
    w(i, (i + 1) % m) = side;
    w(i, (i + m - 1) % m) = side;
  }
  return WeightMatrix(std::move(w), Kind::ring);
}

WeightMatrix build_line(std::size_t n, Mode mode) {
  if (n < 2) throw Error(ErrorCode::invalid_topology, "line needs n >= 2");
  const auto m = static_cast<Eigen::Index>(n);
  if (mode == Mode::as_written) {
    Mat w = Mat::Zero(m, m);
    w(0, 1) = 1.0;
    w(m - 1, m - 2) = 1.0;
    for (Eigen::Index i = 1; i + 1 < m; ++i) {
      w(i, i - 1) = 0.5;
      w(i, i + 1) = 0.5;
    }
    auto warnings = stochasticity_warnings(w);
    return WeightMatrix(std::move(w), Kind::line, std::move(warnings));
  }
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(m, m);
  for (Eigen::Index i = 0; i + 1 < m; ++i) adj(i, i + 1) = adj(i + 1, i) = 1;
  return WeightMatrix(metropolis_weights(adj), Kind::line);
}

WeightMatrix build_exponential(std::size_t n, Mode mode) {
  if (n < 2) throw Error(ErrorCode::invalid_topology, "exponential needs n >= 2");
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int j = 1; j <= 4; ++j) {
      const Eigen::Index off = ((Eigen::Index{1} << j) - 1) % m;
      for (const Eigen::Index nb : {(i + off) % m, (i - off % m + m) % m}) {
        if (nb != i) adj(i, nb) = 1;
      }
    }
  }
  if (mode == Mode::as_written) {
    Mat w = adj.cast<double>() / 8.0;
    w.diagonal().setConstant(0.25);
    auto warnings = stochasticity_warnings(w);
    return WeightMatrix(std::move(w), Kind::exponential, std::move(warnings));
  }
  return WeightMatrix(metropolis_weights(adj), Kind::exponential);
}

WeightMatrix build_dynamic_mh(std::size_t n, std::size_t m_min, std::size_t m_max, std::uint64_t round_seed) {
  if (n < 2 || m_min < 1 || m_min > m_max || m_max > n - 1) {
    throw Error(ErrorCode::invalid_parameter, "dynamic_mh needs 1 <= m_min <= m_max <= n-1");
  }
  const auto size = static_cast<Eigen::Index>(n);
  std::vector<std::size_t> others(n - 1);
  for (std::uint64_t attempt = 0; attempt < 256; ++attempt) {
    auto engine = make_engine(DrawKey{round_seed, mix64(attempt)}, 0);
    std::uniform_int_distribution<std::size_t> pick_m(m_min, m_max);
    const std::size_t m = pick_m(engine);
    Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(size, size);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t c = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) others[c++] = j;
      }
      std::shuffle(others.begin(), others.end(), engine);
      for (std::size_t t = 0; t < m; ++t) {
        const auto a = static_cast<Eigen::Index>(i);
        const auto b = static_cast<Eigen::Index>(others[t]);
        adj(a, b) = adj(b, a) = 1;
      }
    }
    Mat w = metropolis_weights(adj);
    if (is_connected(w)) return WeightMatrix(std::move(w), Kind::dynamic_mh);
  }
  throw Error(ErrorCode::topology_generation_failed, "no connected graph after 256 attempts");
}

bool is_connected(const Mat& m) {
  const Eigen::Index n = m.rows();
  if (n == 0) return false;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::deque<Eigen::Index> queue{0};
  seen[0] = 1;
  Eigen::Index reached = 1;
  while (!queue.empty()) {
    const Eigen::Index i = queue.front();
    queue.pop_front();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!seen[static_cast<std::size_t>(j)] && (m(i, j) != 0.0 || m(j, i) != 0.0)) {
        seen[static_cast<std::size_t>(j)] = 1;
        ++reached;
        queue.push_back(j);
      }
    }
  }
  return reached == n;
}

std::vector<double> symmetric_eigenvalues(const Mat& input, double tol, int max_sweeps) {
  Mat a = input;
  const Eigen::Index n = a.rows();
  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j) s += a(i, j) * a(i, j);
      }
    }
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < max_sweeps && off_norm() >= tol; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p,q); Golub & Van Loan, Alg. 8.4.1.
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

ConnectivityReport spectral_report(const WeightMatrix& w) {
  const Mat& m = w.entries();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kStochasticTol) {
    throw Error(ErrorCode::invalid_matrix, "spectral_report needs a symmetric matrix");
  }
  ConnectivityReport r;
  r.eigenvalues = symmetric_eigenvalues(m);
  r.connected = is_connected(m);
  if (w.n() == 1) {
    r.lambda2 = r.lambda_n = 0.0;
    r.rho = 0.0;
  } else {
    r.lambda2 = r.eigenvalues[1];
    r.lambda_n = r.eigenvalues.back();
    r.rho = std::max(std::abs(r.lambda2), std::abs(r.lambda_n));
  }
  r.spectral_gap = 1.0 - r.rho;
  return r;
}

ValidationReport validate(const WeightMatrix& w) {
  ValidationReport rep;
  const Mat& m = w.entries();
  const Eigen::Index n = m.rows();
  auto add = [&](std::string kind, std::string detail) { rep.violations.push_back({std::move(kind), std::move(detail)}); };

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (m(i, j) < 0.0) {
        add("negative_entry", "w[" + std::to_string(i) + "][" + std::to_string(j) + "] = " + std::to_string(m(i, j)));
      }
      if (j > i && std::abs(m(i, j) - m(j, i)) > kStochasticTol) {
        add("asymmetric", "w[" + std::to_string(i) + "][" + std::to_string(j) + "] != w[" + std::to_string(j) + "][" +
                              std::to_string(i) + "]");
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rs = m.row(i).sum();
    const double cs = m.col(i).sum();
    rep.row_sums.push_back(rs);
    rep.column_sums.push_back(cs);
    if (std::abs(rs - 1.0) > kStochasticTol) add("row_sum", "row " + std::to_string(i) + " sums to " + std::to_string(rs));
    if (std::abs(cs - 1.0) > kStochasticTol) {
      add("column_sum", "column " + std::to_string(i) + " sums to " + std::to_string(cs));
    }
  }
  rep.connected = is_connected(m);
  if (!rep.connected) add("disconnected", "nonzero pattern is not connected");
  return rep;
}

AgentMatrix mix(const WeightMatrix& w, const AgentMatrix& input) {
  AgentMatrix out;
  kernels::mix_parallel(w, input, out);
  return out;
}

double deviation_energy(const AgentMatrix& v) {
  if (v.rows() == 0) return 0.0;
  const Eigen::RowVectorXd mean = v.colwise().mean();
  return (v.rowwise() - mean).squaredNorm();
}

}  // namespace dsbo::topology
