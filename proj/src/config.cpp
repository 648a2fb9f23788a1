#include "dsbo/config.hpp"

#include "dsbo/error.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace dsbo::config {

using nlohmann::json;
using runner::InitBlock;
using runner::RunConfig;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config_error, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

std::size_t line_at(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Line of the last component of a dotted key path, found by scanning for each
/// quoted component in order. Falls back to line 1.
std::size_t line_of(const std::string& text, const std::string& path) {
  std::size_t pos = 0;
  std::size_t found = std::string::npos;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty() || std::isdigit(static_cast<unsigned char>(part[0]))) continue;
    const auto at = text.find('"' + part + '"', pos);
    if (at == std::string::npos) break;
    found = at;
    pos = at + part.size() + 2;
  }
  return found == std::string::npos ? 1 : line_at(text, found);
}

/// Typed, key-checked view of one JSON object.
class Section {
 public:
  Section(const json& j, std::string path, const std::string& text) : j_(j), path_(std::move(path)), text_(text) {
    if (!j_.is_object()) fail_at(path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail_at(const std::string& full, const std::string& msg) const {
    throw Error(ErrorCode::config_error,
                "line " + std::to_string(line_of(text_, full)) + ": key '" + full + "': " + msg);
  }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const { fail_at(key_path(key), msg); }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    known_.insert(key);
    if (!j_.contains(key)) fail(key, "missing");
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && d == static_cast<double>(static_cast<std::uint64_t>(d))) return static_cast<std::uint64_t>(d);
    }
    fail(key, "expected a nonnegative integer");
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  Section child(const std::string& key) {
    known_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, key_path(key), text_);
  }

  Vec vector(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(key, "expected an array of numbers");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }

  /// Rejects keys that were never asked for.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.count(key)) fail(key, "unknown key");
    }
  }

  const std::string& text() const { return text_; }

 private:
  const json& j_;
  std::string path_;
  const std::string& text_;
  std::set<std::string> known_;
};

template <class Fn>
auto guarded(Section& s, const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config_error) throw;
    s.fail(key, e.what());
  }
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::config_error,
                "line " + std::to_string(line_at(text, e.byte == 0 ? 0 : e.byte - 1)) + ": malformed JSON: " + e.what());
  }
}

runner::TopologySpec parse_topology_section(Section& s) {
  runner::TopologySpec t;
  t.kind = guarded(s, "kind", [&] { return topology::parse_kind(s.string("kind", "ring")); });
  t.a = s.number("a", t.a);
  t.mode = guarded(s, "mode", [&] { return topology::parse_mode(s.string("mode", "normalized")); });
  t.m_min = s.unsigned_int("m_min", t.m_min);
  t.m_max = s.unsigned_int("m_max", t.m_max);
  if (s.has("seed")) t.seed = s.unsigned_int("seed", 0);
  if (s.has("n")) s.unsigned_int("n", 0);  // informational; n comes from problem.n_agents
  if (s.has("matrix")) {
    const json& m = s.at("matrix");
    if (!m.is_array() || m.empty()) s.fail("matrix", "expected a square array of arrays");
    const auto n = static_cast<Eigen::Index>(m.size());
    Mat w(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const json& row = m[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) s.fail("matrix", "expected a square matrix");
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!row[static_cast<std::size_t>(j)].is_number()) s.fail("matrix", "entries must be numbers");
        w(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      }
    }
    t.custom = std::move(w);
  }
  if (t.kind == topology::Kind::custom && !t.custom) s.fail("matrix", "custom topology needs a matrix");
  s.finish();
  return t;
}

std::optional<InitBlock> parse_init_block(Section& parent, const std::string& key) {
  if (!parent.has(key)) return std::nullopt;
  Section s = parent.child(key);
  InitBlock b;
  const std::string kind = s.string("kind", "zeros");
  if (kind == "zeros") {
    b.kind = InitBlock::Kind::zeros;
  } else if (kind == "gaussian") {
    b.kind = InitBlock::Kind::gaussian;
    b.scale = s.number("scale", b.scale);
  } else if (kind == "explicit") {
    b.kind = InitBlock::Kind::explicit_vector;
    b.value = s.vector("value");
  } else {
    s.fail("kind", "expected zeros | gaussian | explicit");
  }
  s.finish();
  return b;
}

json init_to_json(const std::optional<InitBlock>& b) {
  if (!b) return nullptr;
  switch (b->kind) {
    case InitBlock::Kind::zeros: return {{"kind", "zeros"}};
    case InitBlock::Kind::gaussian: return {{"kind", "gaussian"}, {"scale", b->scale}};
    case InitBlock::Kind::explicit_vector:
      return {{"kind", "explicit"}, {"value", std::vector<double>(b->value.data(), b->value.data() + b->value.size())}};
  }
  return nullptr;
}

}  // namespace

runner::TopologySpec parse_topology(const json& j, const std::string& where) {
  const std::string text = j.dump();
  Section s(j, where, text);
  return parse_topology_section(s);
}

RunConfig parse_run_config(const std::string& text) {
  const json root = parse_json(text);
  Section top(root, "", text);
  RunConfig cfg;
  cfg.run_id = top.string("run_id", cfg.run_id);

  {
    Section p = top.child("problem");
    const std::string instance = p.string("instance", "toy");
    if (instance == "toy") {
      cfg.problem.instance = runner::Instance::toy;
    } else if (instance == "logistic") {
      cfg.problem.instance = runner::Instance::logistic;
    } else {
      p.fail("instance", "expected toy | logistic");
    }
    const auto n = p.unsigned_int("n_agents", cfg.problem.instance == runner::Instance::toy ? 5 : 8);
    cfg.problem.toy.n_agents = n;
    cfg.problem.logistic.n_agents = n;
    cfg.problem.toy.N = p.unsigned_int("N", cfg.problem.toy.N);
    cfg.problem.toy.a_base = p.number("a_base", cfg.problem.toy.a_base);
    cfg.problem.toy.a_spread = p.number("a_spread", cfg.problem.toy.a_spread);
    cfg.problem.toy.b_base = p.number("b_base", cfg.problem.toy.b_base);
    cfg.problem.toy.b_spread = p.number("b_spread", cfg.problem.toy.b_spread);
    cfg.problem.logistic.features = p.unsigned_int("features", cfg.problem.logistic.features);
    cfg.problem.logistic.samples_per_agent = p.unsigned_int("samples_per_agent", cfg.problem.logistic.samples_per_agent);
    cfg.problem.logistic.noise_rate = p.number("noise_rate", cfg.problem.logistic.noise_rate);
    cfg.problem.logistic.seed = p.unsigned_int("dataset_seed", cfg.problem.logistic.seed);

    Section noise = p.child("noise");
    const bool logistic = cfg.problem.instance == runner::Instance::logistic;
    cfg.problem.noise.kind = guarded(noise, "kind", [&] {
      return problems::parse_noise_kind(noise.string("kind", logistic ? "minibatch" : "additive_gaussian"));
    });
    cfg.problem.noise.delta_f = noise.number("delta_f", 0.0);
    cfg.problem.noise.delta_g = noise.number("delta_g", 0.0);
    cfg.problem.noise.batch_size = noise.unsigned_int("batch_size", cfg.problem.noise.batch_size);
    if (cfg.problem.noise.delta_f < 0.0) noise.fail("delta_f", "must be nonnegative");
    if (cfg.problem.noise.delta_g < 0.0) noise.fail("delta_g", "must be nonnegative");
    if (cfg.problem.noise.batch_size < 1) noise.fail("batch_size", "must be >= 1");
    noise.finish();
    p.finish();
  }
  {
    Section t = top.child("topology");
    cfg.topology = parse_topology_section(t);
  }
  {
    Section s = top.child("strategy");
    cfg.strategy = guarded(s, "kind", [&] { return strategies::parse_strategy(s.string("kind", "se")); });
    s.finish();
  }
  {
    Section e = top.child("estimator");
    cfg.estimator.kind = guarded(e, "kind", [&] { return directions::parse_estimator_kind(e.string("kind", "minibatch")); });
    cfg.estimator.rho = directions::RhoSchedule::default_for(cfg.estimator.kind);
    if (e.has("rho")) {
      const json& r = e.at("rho");
      if (r.is_number()) {
        cfg.estimator.rho = directions::RhoSchedule{r.get<double>(), false, 1.0, 2.0 / 3.0};
      } else {
        Section rs = e.child("rho");
        cfg.estimator.rho.decaying = true;
        cfg.estimator.rho.c = rs.number("c", 1.0);
        cfg.estimator.rho.power = rs.number("power", 2.0 / 3.0);
        rs.finish();
      }
    }
    e.finish();
  }
  std::size_t record_every_env = 0;
  {
    Section e = top.child("envelope");
    cfg.envelope.gamma = e.number("gamma", cfg.envelope.gamma);
    cfg.envelope.inner_tol = e.number("inner_tol", cfg.envelope.inner_tol);
    cfg.envelope.inner_max_iters = static_cast<int>(e.unsigned_int("inner_max_iters",
                                                                   static_cast<std::uint64_t>(cfg.envelope.inner_max_iters)));
    record_every_env = e.unsigned_int("record_every", 0);
    e.finish();
  }
  {
    Section r = top.child("runner");
    cfg.K = r.unsigned_int("K", cfg.K);
    cfg.base_seed = r.unsigned_int("base_seed", cfg.base_seed);
    cfg.record_every = r.unsigned_int("record_every", record_every_env != 0 ? record_every_env : cfg.record_every);
    if (record_every_env != 0 && cfg.record_every != record_every_env) {
      r.fail("record_every", "conflicts with envelope.record_every");
    }
    if (cfg.K < 1) r.fail("K", "must be >= 1");
    if (cfg.record_every < 1) r.fail("record_every", "must be >= 1");
    if (r.has("init")) {
      Section init = r.child("init");
      cfg.init.x = parse_init_block(init, "x");
      cfg.init.y = parse_init_block(init, "y");
      cfg.init.theta = parse_init_block(init, "theta");
      init.finish();
    }
    r.finish();
  }
  {
    Section s = top.child("schedules");
    cfg.schedules.mu0 = s.number("mu0", cfg.schedules.mu0);
    cfg.schedules.p = s.number("p", cfg.schedules.p);
    cfg.schedules.c_theta = s.number("c_theta", cfg.schedules.c_theta);
    cfg.schedules.c_lambda = s.number("c_lambda", cfg.schedules.c_lambda);
    if (s.has("K") && s.unsigned_int("K", cfg.K) != cfg.K) s.fail("K", "must equal runner.K");
    cfg.schedules.K = cfg.K;
    const bool lt = s.has("lambda_theta");
    const bool lx = s.has("lambda_x");
    const bool ly = s.has("lambda_y");
    if (lt || lx || ly) {
      if (!(lt && lx && ly)) s.fail(lt ? (lx ? "lambda_y" : "lambda_x") : "lambda_theta", "step overrides need all three");
      cfg.schedules.override_steps =
          directions::StepTriple{s.number("lambda_theta", 0), s.number("lambda_x", 0), s.number("lambda_y", 0)};
    }
    guarded(s, "mu0", [&] {
      directions::validate(cfg.schedules);
      return 0;
    });
    s.finish();
  }
  top.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_file(path)); }

json to_json(const runner::TopologySpec& t) {
  json j = {{"kind", std::string(topology::to_string(t.kind))},
            {"a", t.a},
            {"mode", std::string(topology::to_string(t.mode))},
            {"m_min", t.m_min},
            {"m_max", t.m_max}};
  if (t.seed) j["seed"] = *t.seed;
  if (t.custom) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < t.custom->rows(); ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < t.custom->cols(); ++k) row.push_back((*t.custom)(i, k));
      rows.push_back(row);
    }
    j["matrix"] = rows;
  }
  return j;
}

json to_json(const RunConfig& cfg) {
  json problem = {{"instance", cfg.problem.instance == runner::Instance::toy ? "toy" : "logistic"},
                  {"n_agents", cfg.problem.n_agents()},
                  {"noise",
                   {{"kind", std::string(problems::to_string(cfg.problem.noise.kind))},
                    {"delta_f", cfg.problem.noise.delta_f},
                    {"delta_g", cfg.problem.noise.delta_g},
                    {"batch_size", cfg.problem.noise.batch_size}}}};
  if (cfg.problem.instance == runner::Instance::toy) {
    problem["N"] = cfg.problem.toy.N;
    problem["a_base"] = cfg.problem.toy.a_base;
    problem["a_spread"] = cfg.problem.toy.a_spread;
    problem["b_base"] = cfg.problem.toy.b_base;
    problem["b_spread"] = cfg.problem.toy.b_spread;
  } else {
    problem["features"] = cfg.problem.logistic.features;
    problem["samples_per_agent"] = cfg.problem.logistic.samples_per_agent;
    problem["noise_rate"] = cfg.problem.logistic.noise_rate;
    problem["dataset_seed"] = cfg.problem.logistic.seed;
  }

  json rho;
  if (cfg.estimator.rho.decaying) {
    rho = {{"c", cfg.estimator.rho.c}, {"power", cfg.estimator.rho.power}};
  } else {
    rho = cfg.estimator.rho.constant;
  }
  json schedules = {{"mu0", cfg.schedules.mu0},
                    {"p", cfg.schedules.p},
                    {"c_theta", cfg.schedules.c_theta},
                    {"c_lambda", cfg.schedules.c_lambda},
                    {"K", cfg.schedules.K}};
  if (cfg.schedules.override_steps) {
    schedules["lambda_theta"] = cfg.schedules.override_steps->theta;
    schedules["lambda_x"] = cfg.schedules.override_steps->x;
    schedules["lambda_y"] = cfg.schedules.override_steps->y;
  }
  json init = json::object();
  if (cfg.init.x) init["x"] = init_to_json(cfg.init.x);
  if (cfg.init.y) init["y"] = init_to_json(cfg.init.y);
  if (cfg.init.theta) init["theta"] = init_to_json(cfg.init.theta);
  json runner = {{"K", cfg.K}, {"base_seed", cfg.base_seed}, {"record_every", cfg.record_every}};
  if (!init.empty()) runner["init"] = init;

  return {{"run_id", cfg.run_id},
          {"problem", problem},
          {"topology", to_json(cfg.topology)},
          {"strategy", {{"kind", std::string(strategies::to_string(cfg.strategy))}}},
          {"estimator", {{"kind", std::string(directions::to_string(cfg.estimator.kind))}, {"rho", rho}}},
          {"schedules", schedules},
          {"envelope",
           {{"gamma", cfg.envelope.gamma},
            {"inner_tol", cfg.envelope.inner_tol},
            {"inner_max_iters", cfg.envelope.inner_max_iters}}},
          {"runner", runner}};
}

runner::Grid parse_grid(const std::string& text, std::uint64_t base_seed) {
  const json root = parse_json(text);
  Section g(root, "", text);
  runner::Grid grid;
  auto list = [&](const std::string& key) -> const json* {
    if (!g.has(key)) return nullptr;
    const json& v = g.at(key);
    if (!v.is_array() || v.empty()) g.fail(key, "expected a nonempty array");
    return &v;
  };
  if (const json* v = list("n")) {
    for (const auto& e : *v) {
      if (!e.is_number_unsigned()) g.fail("n", "expected positive integers");
      grid.n.push_back(e.get<std::size_t>());
    }
  }
  if (const json* v = list("topology")) {
    for (std::size_t i = 0; i < v->size(); ++i) {
      Section t((*v)[i], "topology." + std::to_string(i), text);
      grid.topology.push_back(parse_topology_section(t));
    }
  }
  auto numbers = [&](const std::string& key, std::vector<double>& out) {
    if (const json* v = list(key)) {
      for (const auto& e : *v) {
        if (!e.is_number()) g.fail(key, "expected numbers");
        out.push_back(e.get<double>());
      }
    }
  };
  numbers("p", grid.p);
  numbers("gamma", grid.gamma);
  if (const json* v = list("strategy")) {
    for (const auto& e : *v) {
      if (!e.is_string()) g.fail("strategy", "expected strategy names");
      grid.strategy.push_back(guarded(g, "strategy", [&] { return strategies::parse_strategy(e.get<std::string>()); }));
    }
  }
  if (const json* v = list("seeds")) {
    for (const auto& e : *v) {
      if (!e.is_number_unsigned()) g.fail("seeds", "expected nonnegative integers");
      grid.seeds.push_back(e.get<std::uint64_t>());
    }
  }
  if (g.has("replicates")) {
    if (!grid.seeds.empty()) g.fail("replicates", "use either seeds or replicates");
    const auto r = g.unsigned_int("replicates", 1);
    if (r < 1) g.fail("replicates", "must be >= 1");
    for (std::uint64_t i = 0; i < r; ++i) grid.seeds.push_back(base_seed + i);
  }
  g.finish();
  return grid;
}

runner::Grid load_grid(const std::filesystem::path& path, std::uint64_t base_seed) {
  return parse_grid(read_file(path), base_seed);
}

}  // namespace dsbo::config
