// dsbo: command-line front end for runs, sweeps and diagnostics.

#include "dsbo/config.hpp"
#include "dsbo/error.hpp"
#include "dsbo/logistic.hpp"
#include "dsbo/output.hpp"
#include "dsbo/runner.hpp"
#include "dsbo/selftest.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace dsbo;

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kSelftest = 3 };

struct Common {
  std::string config;
  std::string out;
  std::string grid;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> record_every;
  bool quiet = false;
};

runner::RunConfig load(const Common& c) {
  if (c.config.empty()) throw Error(ErrorCode::config_error, "--config is required");
  auto cfg = config::load_run_config(c.config);
  if (c.seed) cfg.base_seed = *c.seed;
  if (c.record_every) {
    if (*c.record_every < 1) throw Error(ErrorCode::config_error, "--record-every must be >= 1");
    cfg.record_every = *c.record_every;
  }
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::invalid_input, "cannot write " + path.string());
  os << text;
}

/// --out names a .csv file (summary written beside it) or a directory.
std::pair<fs::path, fs::path> run_paths(const std::string& out, const std::string& run_id) {
  const fs::path p = out.empty() ? fs::path(".") : fs::path(out);
  if (p.extension() == ".csv") {
    fs::path summary = p;
    summary.replace_extension(".summary.json");
    return {p, summary};
  }
  return {p / (run_id + ".csv"), p / (run_id + ".summary.json")};
}

int cmd_run(const Common& c) {
  const auto cfg = load(c);
  const auto series = runner::run(cfg);
  const auto [csv, summary] = run_paths(c.out, cfg.run_id);
  write_text(csv, output::to_csv(series));
  write_text(summary, output::summary_json(cfg, series).dump(2) + "\n");
  if (!c.quiet) {
    for (const auto& w : series.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "wrote " << csv.string() << " (" << series.rows.size() << " rows) and " << summary.string() << '\n';
    std::cout << "final grad_psi_sq " << output::format_double(series.summary.final_grad_psi_sq) << '\n';
  }
  return kOk;
}

int cmd_sweep(const Common& c) {
  const auto base = load(c);
  if (c.grid.empty()) throw Error(ErrorCode::config_error, "--grid is required");
  const auto grid = config::load_grid(c.grid, base.base_seed);
  const auto points = runner::sweep(base, grid);
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::string csv;
    for (std::size_t r = 0; r < points[i].series.size(); ++r) {
      const std::string one = output::to_csv(points[i].series[r]);
      csv += r == 0 ? one : one.substr(one.find('\n') + 1);
    }
    write_text(dir / ("point_" + std::to_string(i) + ".csv"), csv);
    if (!c.quiet) {
      for (const auto& f : points[i].failures) std::cerr << "point " << i << " failure: " << f << '\n';
    }
  }
  std::ostringstream agg;
  output::write_sweep_csv(agg, points);
  write_text(dir / "aggregate.csv", agg.str());
  if (!c.quiet) std::cout << "wrote " << points.size() << " point CSVs and aggregate.csv to " << dir.string() << '\n';
  return kOk;
}

int cmd_validate_topology(const Common& c, const std::string& kind, std::size_t n, double a, const std::string& mode,
                          std::size_t m_min, std::size_t m_max, std::uint64_t seed) {
  runner::TopologySpec spec;
  std::size_t agents = n;
  std::uint64_t base_seed = seed;
  if (!c.config.empty()) {
    const auto cfg = load(c);
    spec = cfg.topology;
    agents = cfg.problem.n_agents();
    base_seed = cfg.base_seed;
  } else {
    spec.kind = topology::parse_kind(kind);
    spec.a = a;
    spec.mode = topology::parse_mode(mode);
    spec.m_min = m_min;
    spec.m_max = m_max;
    spec.seed = seed;
  }
  const auto w = runner::build_topology(spec, agents, base_seed);
  const auto report = output::inspect(w);
  std::cout << output::topology_text(report);
  if (!c.quiet) std::cout << output::topology_json(report).dump(2) << '\n';
  return report.validation.ok() ? kOk : kConfig;
}

int cmd_oracle(const Common& c, std::size_t n, std::size_t N) {
  problems::ToyParams params;
  if (!c.config.empty()) {
    const auto cfg = load(c);
    if (cfg.problem.instance != runner::Instance::toy) {
      throw Error(ErrorCode::config_error, "oracle needs the toy instance");
    }
    params = cfg.problem.toy;
  } else {
    params.n_agents = n;
    params.N = N;
  }
  std::cout << output::oracle_text(params);
  if (!c.quiet) std::cout << output::oracle_json(params).dump(2) << '\n';
  return kOk;
}

int cmd_selftest(const Common& c) {
  bool ok = true;
  for (const auto& check : selftest::run_all()) {
    ok = ok && check.ok;
    if (!c.quiet || !check.ok) std::cout << (check.ok ? "PASS " : "FAIL ") << check.name << ": " << check.detail << '\n';
  }
  return ok ? kOk : kSelftest;
}

int cmd_export(const Common& c) {
  const auto cfg = load(c);
  if (cfg.problem.instance != runner::Instance::logistic) {
    throw Error(ErrorCode::config_error, "export-data needs the logistic instance");
  }
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  problems::export_logistic_csv(problems::generate_logistic_data(cfg.problem.logistic), dir);
  if (!c.quiet) std::cout << "wrote " << 2 * cfg.problem.n_agents() << " files to " << dir.string() << '\n';
  return kOk;
}

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::config_error:
    case ErrorCode::invalid_topology:
    case ErrorCode::invalid_parameter:
    case ErrorCode::invalid_matrix:
    case ErrorCode::degenerate_instance: return true;
    default: return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized stochastic bilevel optimization simulator"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--config", c.config, "run configuration (JSON)");
    if (with_out) sub->add_option("--out", c.out, "output file or directory");
    sub->add_option("--seed", c.seed, "override runner.base_seed");
    sub->add_flag("--quiet", c.quiet, "suppress progress output");
  };

  auto* run = app.add_subcommand("run", "run one configuration, write CSV and JSON summary");
  add_common(run, true);
  run->add_option("--record-every", c.record_every, "override runner.record_every");

  auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
  add_common(sweep, true);
  sweep->add_option("--grid", c.grid, "grid file (JSON)")->required();
  sweep->add_option("--record-every", c.record_every, "override runner.record_every");

  std::string kind = "ring", mode = "normalized";
  std::size_t n = 10, m_min = 2, m_max = 2, N = 10;
  double a = 0.5;
  std::uint64_t topo_seed = 0;
  auto* vt = app.add_subcommand("validate-topology", "check a mixing matrix and report its spectrum");
  add_common(vt, false);
  vt->add_option("--kind", kind, "ring | line | exponential | dynamic_mh");
  vt->add_option("--n", n, "number of agents");
  vt->add_option("--a", a, "ring self-weight");
  vt->add_option("--mode", mode, "normalized | metropolis | as_written");
  vt->add_option("--m-min", m_min, "dynamic_mh minimum neighbours");
  vt->add_option("--m-max", m_max, "dynamic_mh maximum neighbours");

  std::size_t oracle_n = 5;
  auto* oracle = app.add_subcommand("oracle", "print the closed-form toy solution");
  add_common(oracle, false);
  oracle->add_option("--n", oracle_n, "number of agents");
  oracle->add_option("--N", N, "block dimension");

  auto* st = app.add_subcommand("selftest", "run the invariant checks");
  st->add_flag("--quiet", c.quiet, "print failures only");

  auto* ex = app.add_subcommand("export-data", "write the logistic dataset as CSV");
  add_common(ex, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (c.seed) topo_seed = *c.seed;

  try {
    if (*run) return cmd_run(c);
    if (*sweep) return cmd_sweep(c);
    if (*vt) return cmd_validate_topology(c, kind, n, a, mode, m_min, m_max, topo_seed);
    if (*oracle) return cmd_oracle(c, oracle_n, N);
    if (*st) return cmd_selftest(c);
    if (*ex) return cmd_export(c);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? kConfig : kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kConfig;
}
