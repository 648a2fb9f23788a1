#include "dsbo/output.hpp"

#include "dsbo/config.hpp"
#include "dsbo/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <sstream>

namespace dsbo::output {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorCode::invalid_input, "csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void write_csv(std::ostream& os, const runner::MetricsSeries& series) {
  os << kCsvHeader << '\n';
  for (const auto& r : series.rows) {
    os << series.run_id << ',' << r.k << ',' << format_double(r.mu) << ',' << format_double(r.record.grad_psi_sq) << ','
       << format_double(r.record.consensus_x) << ',' << format_double(r.record.consensus_y) << ','
       << format_double(r.record.consensus_theta) << ',' << format_double(r.record.consensus_total) << ','
       << opt(r.rel_err_x) << ',' << opt(r.rel_err_y) << ',' << r.mix_ops_cumulative << ',' << format_double(r.wall_ms)
       << '\n';
  }
}

std::string to_csv(const runner::MetricsSeries& series) {
  std::ostringstream os;
  write_csv(os, series);
  return os.str();
}

std::vector<CsvRow> parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw Error(ErrorCode::invalid_input, "csv header mismatch");
  std::vector<CsvRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 12) {
      throw Error(ErrorCode::invalid_input, "csv line " + std::to_string(line_no) + ": expected 12 fields");
    }
    CsvRow r;
    r.run_id = f[0];
    r.k = static_cast<std::size_t>(std::stoull(f[1]));
    r.mu = parse_number(f[2], line_no);
    r.grad_psi_sq = parse_number(f[3], line_no);
    r.consensus_x = parse_number(f[4], line_no);
    r.consensus_y = parse_number(f[5], line_no);
    r.consensus_theta = parse_number(f[6], line_no);
    r.consensus_total = parse_number(f[7], line_no);
    if (!f[8].empty()) r.rel_err_x = parse_number(f[8], line_no);
    if (!f[9].empty()) r.rel_err_y = parse_number(f[9], line_no);
    r.mix_ops_cumulative = std::stoull(f[10]);
    r.wall_ms = parse_number(f[11], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<CsvRow> parse_csv(const std::string& text) {
  std::istringstream is(text);
  return parse_csv(is);
}

std::string numeric_columns(const std::string& csv) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line)) {
    const auto cut = line.rfind(',');
    os << line.substr(0, cut) << '\n';
  }
  return os.str();
}

json summary_json(const runner::RunConfig& cfg, const runner::MetricsSeries& series) {
  const auto& s = series.summary;
  json out = {{"run_id", series.run_id},
              {"config", config::to_json(cfg)},
              {"gamma_range_warning", series.gamma_range_warning},
              {"warnings", series.warnings},
              {"recorded_rows", series.rows.size()},
              {"gap_rows", s.gap_rows},
              {"avg_grad_psi_sq", finite_or_null(s.avg_grad_psi_sq)},
              {"avg_consensus_total", finite_or_null(s.avg_consensus_total)},
              {"final",
               {{"grad_psi_sq", finite_or_null(s.final_grad_psi_sq)},
                {"consensus_total", finite_or_null(s.final_consensus_total)},
                {"x_bar", vec_json(series.final_x_bar)},
                {"y_bar", vec_json(series.final_y_bar)}}}};
  if (s.final_rel_err_x) out["final"]["rel_err_x"] = finite_or_null(*s.final_rel_err_x);
  if (s.final_rel_err_y) out["final"]["rel_err_y"] = finite_or_null(*s.final_rel_err_y);
  if (!series.rows.empty()) out["mix_ops_total"] = series.rows.back().mix_ops_cumulative;
  if (cfg.problem.instance == runner::Instance::toy) out["reference"] = oracle_json(cfg.problem.toy);
  return out;
}

json oracle_json(const problems::ToyParams& params) {
  const auto ref = problems::toy_reference_solution(params);
  const auto N = static_cast<Eigen::Index>(params.N);
  json out = {{"derived",
               {{"x", ref.x[0]}, {"y1", ref.y[0]}, {"y2", ref.y[N]}, {"note", "closed form, per coordinate"}}}};
  if (params.n_agents == 5 && params.a_base == 1.0 && params.a_spread == 0.1 && params.b_base == 1.0 &&
      params.b_spread == 0.05) {
    const auto rep = problems::toy_reported_triple(params.N);
    out["reported"] = {{"x", rep.x[0]}, {"y1", rep.y[0]}, {"y2", rep.y[N]}, {"note", "approximate, not a target"}};
  }
  return out;
}

std::string oracle_text(const problems::ToyParams& params) {
  const json j = oracle_json(params);
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << "derived (x*, y1*, y2*) = (" << j["derived"]["x"].get<double>() << ", " << j["derived"]["y1"].get<double>()
     << ", " << j["derived"]["y2"].get<double>() << ") times the all-ones vector of length " << params.N << '\n';
  if (j.contains("reported")) {
    const auto& p = j["reported"];
    os << std::setprecision(2) << "reported (x*, y1*, y2*) ~ (" << p["x"].get<double>() << ", "
       << p["y1"].get<double>() << ", " << p["y2"].get<double>() << ")\n";
  }
  return os.str();
}

TopologyReport inspect(const topology::WeightMatrix& w) {
  TopologyReport r;
  r.validation = topology::validate(w);
  r.warnings = w.warnings();
  if (!r.validation.has("asymmetric")) r.spectrum = topology::spectral_report(w);
  return r;
}

std::string topology_text(const TopologyReport& r) {
  std::ostringstream os;
  if (r.validation.ok()) {
    os << "OK";
  } else {
    os << "INVALID (" << r.validation.violations.size() << " violations)";
  }
  if (r.spectrum) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", r.spectrum->rho);
    os << ", \xCF\x81=" << buf;
  }
  os << '\n';
  for (const auto& v : r.validation.violations) os << "  " << v.kind << ": " << v.detail << '\n';
  for (const auto& w : r.warnings) os << "  warning: " << w << '\n';
  return os.str();
}

json topology_json(const TopologyReport& r) {
  json violations = json::array();
  for (const auto& v : r.validation.violations) violations.push_back({{"kind", v.kind}, {"detail", v.detail}});
  json out = {{"ok", r.validation.ok()},
              {"connected", r.validation.connected},
              {"violations", violations},
              {"row_sums", r.validation.row_sums},
              {"column_sums", r.validation.column_sums},
              {"warnings", r.warnings}};
  if (r.spectrum) {
    out["rho"] = r.spectrum->rho;
    out["lambda2"] = r.spectrum->lambda2;
    out["lambda_n"] = r.spectrum->lambda_n;
    out["spectral_gap"] = r.spectrum->spectral_gap;
    out["eigenvalues"] = r.spectrum->eigenvalues;
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<runner::SweepPoint>& points) {
  os << "point,label,seeds,failures,avg_grad_psi_sq_mean,avg_grad_psi_sq_std,avg_consensus_total_mean,"
        "avg_consensus_total_std,final_grad_psi_sq_mean,final_grad_psi_sq_std\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    os << i << ',' << p.label << ',' << p.summaries.size() << ',' << p.failures.size() << ','
       << format_double(p.avg_grad_psi_sq.mean) << ',' << format_double(p.avg_grad_psi_sq.stddev) << ','
       << format_double(p.avg_consensus_total.mean) << ',' << format_double(p.avg_consensus_total.stddev) << ','
       << format_double(p.final_grad_psi_sq.mean) << ',' << format_double(p.final_grad_psi_sq.stddev) << '\n';
  }
}

}  // namespace dsbo::output
