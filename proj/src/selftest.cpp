#include "dsbo/selftest.hpp"

#include "dsbo/kernels.hpp"
#include "dsbo/output.hpp"
#include "dsbo/runner.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

namespace dsbo::selftest {

namespace {

using problems::QuadraticToy;

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Check builders_stochastic() {
  for (std::size_t n : {3u, 5u, 10u, 32u}) {
    std::vector<std::pair<std::string, topology::WeightMatrix>> ws;
    ws.emplace_back("ring", topology::build_ring(n, 0.5));
    ws.emplace_back("line", topology::build_line(n));
    ws.emplace_back("exponential", topology::build_exponential(n));
    ws.emplace_back("dynamic_mh", topology::build_dynamic_mh(n, 1, 2, 42));
    for (const auto& [name, w] : ws) {
      const auto rep = topology::validate(w);
      if (!rep.ok()) return {"builders_stochastic", false, name + " n=" + std::to_string(n) + ": " + rep.violations[0].detail};
    }
  }
  return {"builders_stochastic", true, "ring/line/exponential/dynamic_mh, n in {3,5,10,32}"};
}

Check ring_spectrum() {
  const std::size_t n = 10;
  const double a = 0.5;
  const auto rep = topology::spectral_report(topology::build_ring(n, a));
  double rho = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    rho = std::max(rho, std::abs(a + (1.0 - a) * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / n)));
  }
  const bool ok = std::abs(rep.rho - rho) < 1e-9;
  return {"ring_spectrum", ok, "rho=" + num(rep.rho) + " analytic=" + num(rho)};
}

Check mixing_contraction() {
  const auto w = topology::build_ring(10, 0.5);
  const double rho = topology::spectral_report(w).rho;
  std::mt19937_64 eng(3);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 20; ++t) {
    AgentMatrix v(10, 4);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = nd(eng);
    const double before = topology::deviation_energy(v);
    const double after = topology::deviation_energy(topology::mix(w, v));
    if (after > rho * rho * before + 1e-12) return {"mixing_contraction", false, "trial " + std::to_string(t)};
  }
  return {"mixing_contraction", true, "20 random swarms on ring(10, 0.5)"};
}

Check toy_gradients() {
  const QuadraticToy toy({});
  std::mt19937_64 eng(5);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    Vec x(toy.dx()), y(toy.dy());
    for (auto& v : x) v = nd(eng);
    for (auto& v : y) v = nd(eng);
    const auto i = static_cast<std::size_t>(t) % toy.n_agents();
    for (int which = 0; which < 2; ++which) {
      const auto grad = which == 0 ? toy.grad_f(i, x, y) : toy.grad_g(i, x, y);
      auto fn = [&](const Vec& xx, const Vec& yy) { return which == 0 ? toy.f(i, xx, yy) : toy.g(i, xx, yy); };
      Vec fd_x(x.size()), fd_y(y.size());
      const double h = 1e-6;
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        Vec p = x, m = x;
        p[j] += h;
        m[j] -= h;
        fd_x[j] = (fn(p, y) - fn(m, y)) / (2 * h);
      }
      for (Eigen::Index j = 0; j < y.size(); ++j) {
        Vec p = y, m = y;
        p[j] += h;
        m[j] -= h;
        fd_y[j] = (fn(x, p) - fn(x, m)) / (2 * h);
      }
      const double err = std::sqrt((fd_x - grad.gx).squaredNorm() + (fd_y - grad.gy).squaredNorm()) /
                         std::max(1.0, std::sqrt(grad.gx.squaredNorm() + grad.gy.squaredNorm()));
      worst = std::max(worst, err);
    }
  }
  return {"toy_gradients", worst < 1e-5, "max rel err " + num(worst)};
}

Check moreau_domination() {
  const QuadraticToy toy({});
  const envelope::EnvelopeConfig cfg;
  std::mt19937_64 eng(9);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Vec x(toy.dx()), y(toy.dy());
    for (auto& v : x) v = nd(eng);
    for (auto& v : y) v = nd(eng);
    worst = std::min(worst, toy.G(x, y) - envelope::moreau_value(toy, x, y, cfg));
  }
  return {"moreau_domination", worst >= -1e-10, "min G - V = " + num(worst)};
}

Check gt_tracking() {
  const auto w = topology::build_ring(10, 0.5);
  std::mt19937_64 eng(11);
  std::normal_distribution<double> nd;
  for (auto strategy : {strategies::Strategy::gt_atc, strategies::Strategy::gt_semi_atc, strategies::Strategy::gt_non_atc}) {
    auto s = strategies::SwarmState::start(Blocks::zeros(10, 3, 2));
    strategies::StepContext ctx{&w, {0.1, 0.1, 0.1}, 1.0, 1.0};
    for (int t = 0; t < 50; ++t) {
      Blocks est = Blocks::zeros(10, 3, 2);
      est.for_each([&](AgentMatrix& m, int) {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(eng);
      });
      s = strategies::step(strategy, s, ctx, est);
      double gap = 0.0;
      double scale = 0.0;
      for (int b = 0; b < 3; ++b) {
        const AgentMatrix& tr = b == 0 ? s.trackers.theta : (b == 1 ? s.trackers.x : s.trackers.y);
        const AgentMatrix& e = b == 0 ? est.theta : (b == 1 ? est.x : est.y);
        gap += (tr.colwise().mean() - e.colwise().mean()).squaredNorm();
        scale += e.colwise().mean().squaredNorm();
      }
      if (std::sqrt(gap) > 1e-10 * (1.0 + std::sqrt(scale))) {
        return {"gt_tracking", false, std::string(strategies::to_string(strategy)) + " step " + std::to_string(t)};
      }
    }
  }
  return {"gt_tracking", true, "mean(trackers) = mean(estimates) for all GT placements"};
}

Check schedules() {
  directions::Schedules s;
  s.mu0 = 0.1;
  s.p = 0.01;
  s.K = 100;
  for (std::size_t k : {0u, 1u, 1000u, 1000000u}) {
    if (directions::mu_at(s, k) != 0.1 * std::pow(static_cast<double>(k + 1), -0.01)) {
      return {"schedules", false, "mu_at differs at k=" + std::to_string(k)};
    }
  }
  const auto st = directions::steps_at(s, 0, 4);
  const double expect = s.c_theta * std::sqrt(4.0) / std::sqrt(100.0);
  return {"schedules", st.theta == expect && st.x == s.c_lambda * expect, "mu and step schedules"};
}

runner::RunConfig short_config() {
  runner::RunConfig cfg;
  cfg.run_id = "selftest";
  cfg.problem.noise.delta_f = 0.1;
  cfg.problem.noise.delta_g = 0.1;
  cfg.topology.a = 1.0 / 3.0;
  cfg.strategy = strategies::Strategy::gt_atc;
  cfg.K = 200;
  cfg.schedules.K = 200;
  cfg.schedules.mu0 = 0.1;
  cfg.schedules.p = 0.01;
  cfg.schedules.override_steps = directions::StepTriple{0.1, 0.01, 0.01};
  cfg.record_every = 20;
  cfg.base_seed = 17;
  return cfg;
}

Check determinism_and_csv() {
  const auto cfg = short_config();
  const int threads = kernels::worker_threads();
  kernels::set_worker_threads(1);
  const auto a = runner::run(cfg);
  kernels::set_worker_threads(4);
  const auto b = runner::run(cfg);
  kernels::set_worker_threads(threads);
  const std::string ca = output::to_csv(a);
  if (output::numeric_columns(ca) != output::numeric_columns(output::to_csv(b))) {
    return {"determinism_and_csv", false, "runs differ across thread counts"};
  }
  const auto rows = output::parse_csv(ca);
  if (rows.size() != a.rows.size()) return {"determinism_and_csv", false, "row count after parse"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].grad_psi_sq != a.rows[i].record.grad_psi_sq || rows[i].mu != a.rows[i].mu ||
        rows[i].consensus_total != a.rows[i].record.consensus_total) {
      return {"determinism_and_csv", false, "csv round-trip differs at row " + std::to_string(i)};
    }
  }
  return {"determinism_and_csv", true, std::to_string(rows.size()) + " rows, 1 vs 4 threads"};
}

Check draw_keys() {
  const auto k1 = derive_draw_key(7, 3, 2, Stream::grad_f);
  const auto k2 = derive_draw_key(7, 3, 2, Stream::grad_f);
  const auto k3 = derive_draw_key(7, 3, 2, Stream::grad_g);
  const auto k4 = derive_draw_key(7, 3, 3, Stream::grad_f);
  return {"draw_keys", k1 == k2 && !(k1 == k3) && !(k1 == k4), "deterministic and stream-disjoint"};
}

}  // namespace

std::vector<Check> run_all() {
  const std::vector<std::function<Check()>> checks = {builders_stochastic, ring_spectrum, mixing_contraction,
                                                      toy_gradients,       moreau_domination, gt_tracking,
                                                      schedules,           draw_keys,        determinism_and_csv};
  std::vector<Check> out;
  for (const auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"exception", false, e.what()});
    }
  }
  return out;
}

}  // namespace dsbo::selftest
