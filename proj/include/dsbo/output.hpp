#pragma once

#include "dsbo/runner.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dsbo::output {

inline constexpr const char* kCsvHeader =
    "run_id,k,mu,grad_psi_sq,consensus_x,consensus_y,consensus_theta,consensus_total,rel_err_x,rel_err_y,"
    "mix_ops_cumulative,wall_ms";

/// Shortest form is not used: every double is printed with 17 significant
/// digits so that parsing it back is exact.
std::string format_double(double v);

void write_csv(std::ostream& os, const runner::MetricsSeries& series);
std::string to_csv(const runner::MetricsSeries& series);

/// One parsed CSV line. Timing is kept apart because it is not deterministic.
struct CsvRow {
  std::string run_id;
  std::size_t k = 0;
  double mu = 0.0;
  double grad_psi_sq = 0.0;
  double consensus_x = 0.0;
  double consensus_y = 0.0;
  double consensus_theta = 0.0;
  double consensus_total = 0.0;
  std::optional<double> rel_err_x;
  std::optional<double> rel_err_y;
  std::uint64_t mix_ops_cumulative = 0;
  double wall_ms = 0.0;
};

/// Throws Error(invalid_input) on a wrong header or malformed line.
std::vector<CsvRow> parse_csv(std::istream& is);
std::vector<CsvRow> parse_csv(const std::string& text);

/// The CSV with the wall_ms column dropped, for determinism comparisons.
std::string numeric_columns(const std::string& csv);

nlohmann::json summary_json(const runner::RunConfig& cfg, const runner::MetricsSeries& series);

/// Derived reference next to the reported triple, for the toy instance.
nlohmann::json oracle_json(const problems::ToyParams& params);
std::string oracle_text(const problems::ToyParams& params);

struct TopologyReport {
  topology::ValidationReport validation;
  std::optional<topology::ConnectivityReport> spectrum;  ///< absent for asymmetric matrices
  std::vector<std::string> warnings;
};

TopologyReport inspect(const topology::WeightMatrix& w);
std::string topology_text(const TopologyReport& r);
nlohmann::json topology_json(const TopologyReport& r);

/// Aggregate sweep table: one line per grid point with mean and std across seeds.
void write_sweep_csv(std::ostream& os, const std::vector<runner::SweepPoint>& points);

}  // namespace dsbo::output
