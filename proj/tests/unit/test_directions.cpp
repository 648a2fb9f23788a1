#include "dsbo/directions.hpp"
#include "dsbo/error.hpp"
#include "dsbo/toy.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dsbo;
using namespace dsbo::directions;
using problems::NoiseKind;
using problems::NoiseModel;
using problems::QuadraticToy;

namespace {

Vec randn(Eigen::Index d, std::mt19937_64& eng) {
  std::normal_distribution<double> nd;
  Vec v(d);
  for (auto& e : v) e = nd(eng);
  return v;
}

bool equal(const DirectionTriple& a, const DirectionTriple& b) {
  return a.d_theta == b.d_theta && a.d_x == b.d_x && a.d_y == b.d_y;
}

SampleKeys keys_at(std::uint64_t k, std::uint64_t agent) {
  return {derive_draw_key(5, k, agent, Stream::grad_f), derive_draw_key(5, k, agent, Stream::grad_g)};
}

}  // namespace

TEST_CASE("theta = y cancels the proximal terms") {
  const QuadraticToy toy({});
  std::mt19937_64 eng(1);
  const Vec x = randn(10, eng), y = randn(20, eng);
  const double mu = 0.3;
  const auto d = deterministic_directions(toy, 2, x, y, y, mu, 10.0);
  const auto gf = toy.grad_f(2, x, y);
  const auto gg = toy.grad_g(2, x, y);
  CHECK((d.d_theta - gg.gy).norm() == 0.0);
  CHECK((d.d_x - mu * gf.gx).norm() < 1e-14);
  CHECK((d.d_y - (mu * gf.gy + gg.gy)).norm() < 1e-14);
}

TEST_CASE("stationary degenerate point gives zero directions") {
  const QuadraticToy toy({});
  std::mt19937_64 eng(2);
  const Vec x = randn(10, eng);
  Vec y = randn(20, eng);
  // Agent i's own lower minimizer: y1 = (a_i / b_i^2) x.
  y.head(10) = (toy.a(3) / (toy.b(3) * toy.b(3))) * x;
  const auto d = deterministic_directions(toy, 3, x, y, y, 0.0, 1.0);
  CHECK(d.d_theta.norm() < 1e-14);
  CHECK(d.d_x.norm() < 1e-14);
  CHECK(d.d_y.norm() < 1e-14);
}

TEST_CASE("directions at a numeric point match hand-evaluated gradients") {
  problems::ToyParams p;
  p.N = 1;
  p.n_agents = 2;
  const QuadraticToy toy(p);
  // Agent 1: a = 1.1, b = 1.05. x = 2, y = (y1, y2) = (0.5, -1), theta = (1, 3).
  const Vec x = Vec::Constant(1, 2.0);
  Vec y(2), th(2);
  y << 0.5, -1.0;
  th << 1.0, 3.0;
  const double a = 1.1, b = 1.05, mu = 0.4, gamma = 0.5;
  const auto d = deterministic_directions(toy, 1, x, y, th, mu, gamma);
  // grad_y1 g(x, theta) = b^2 theta1 - a x; grad_y2 g = 0.
  CHECK(d.d_theta[0] == doctest::Approx(b * b * 1.0 - a * 2.0 + (1.0 - 0.5) / gamma));
  CHECK(d.d_theta[1] == doctest::Approx((3.0 + 1.0) / gamma));
  // grad_x f = a (a x - y2); grad_x g(x, .) = -a y1.
  CHECK(d.d_x[0] == doctest::Approx(mu * a * (a * 2.0 + 1.0) - a * 0.5 + a * 1.0));
  // grad_y1 f = b (b y1 - 1); grad_y2 f = -(a x - y2).
  CHECK(d.d_y[0] == doctest::Approx(mu * b * (b * 0.5 - 1.0) + (b * b * 0.5 - a * 2.0) - (0.5 - 1.0) / gamma));
  CHECK(d.d_y[1] == doctest::Approx(-mu * (a * 2.0 + 1.0) - (-1.0 - 3.0) / gamma));
}

TEST_CASE("stochastic directions: degenerate noise, determinism, shared sample") {
  const QuadraticToy toy({});
  std::mt19937_64 eng(3);
  const Vec x = randn(10, eng), y = randn(20, eng), th = randn(20, eng);
  const NoiseModel zero{NoiseKind::additive_gaussian, 0.0, 0.0, 32};
  CHECK(equal(stochastic_directions(toy, 0, x, y, th, 0.5, 2.0, zero, keys_at(1, 0)),
              deterministic_directions(toy, 0, x, y, th, 0.5, 2.0)));

  const NoiseModel noise{NoiseKind::additive_gaussian, 0.4, 0.7, 32};
  CHECK(equal(stochastic_directions(toy, 0, x, y, th, 0.5, 2.0, noise, keys_at(4, 0)),
              stochastic_directions(toy, 0, x, y, th, 0.5, 2.0, noise, keys_at(4, 0))));

  // theta = y: both g evaluations carry the same noise draw, so only the f
  // noise survives in d_x.
  const double mu = 0.5;
  const auto keys = keys_at(7, 0);
  const auto d = stochastic_directions(toy, 0, x, y, y, mu, 2.0, noise, keys);
  const auto fs = toy.sample_grad_f(0, x, y, noise, keys.f);
  const auto gs = toy.sample_grad_g(0, x, y, noise, keys.g);
  CHECK(d.d_x == Vec(mu * fs.gx + gs.gx - gs.gx));
  CHECK((d.d_x - mu * fs.gx).norm() < 1e-14);
}

TEST_CASE("stochastic directions are unbiased") {
  const QuadraticToy toy({});
  std::mt19937_64 eng(4);
  const Vec x = randn(10, eng), y = randn(20, eng), th = randn(20, eng);
  const double delta = 0.5;
  const NoiseModel noise{NoiseKind::additive_gaussian, delta, delta, 32};
  const auto exact = deterministic_directions(toy, 1, x, y, th, 0.8, 3.0);
  DirectionTriple sum{Vec::Zero(20), Vec::Zero(10), Vec::Zero(20)};
  const int m = 10'000;
  for (int k = 0; k < m; ++k) {
    const auto d = stochastic_directions(toy, 1, x, y, th, 0.8, 3.0, noise, keys_at(static_cast<std::uint64_t>(k), 1));
    sum.d_theta += d.d_theta;
    sum.d_x += d.d_x;
    sum.d_y += d.d_y;
  }
  const double band = 4 * delta / 100;
  CHECK((sum.d_theta / m - exact.d_theta).cwiseAbs().maxCoeff() < band);
  CHECK((sum.d_x / m - exact.d_x).cwiseAbs().maxCoeff() < band);
  CHECK((sum.d_y / m - exact.d_y).cwiseAbs().maxCoeff() < band);
}

TEST_CASE("direction argument checks") {
  const QuadraticToy toy({});
  const Vec x = Vec::Zero(10), y = Vec::Zero(20);
  CHECK_THROWS_AS(deterministic_directions(toy, 0, x, y, Vec::Zero(19), 1.0, 1.0), Error);
  CHECK_THROWS_AS(deterministic_directions(toy, 0, x, y, y, 1.0, 0.0), Error);
  CHECK_THROWS_AS(deterministic_directions(toy, 0, x, y, y, -1.0, 1.0), Error);
  CHECK_THROWS_AS(deterministic_directions(toy, 0, Vec::Zero(3), y, y, 1.0, 1.0), Error);
}

TEST_CASE("schedules") {
  Schedules s;
  s.mu0 = 2.0;
  s.p = 0.001;
  CHECK(mu_at(s, 0) == 2.0);
  CHECK(mu_at(s, 999) == doctest::Approx(1.98623).epsilon(1e-5));
  CHECK(mu_at(s, 999) == 2.0 * std::pow(1000.0, -0.001));
  for (std::size_t k = 0; k < 2000; ++k) CHECK(mu_at(s, k + 1) <= mu_at(s, k));

  s.c_theta = 1.0;
  s.c_lambda = 1.0;
  s.K = 100;
  const auto st = steps_at(s, 0, 4);
  CHECK(st.theta == 0.2);
  CHECK(st.x == 0.2);
  CHECK(st.y == 0.2);
  const auto later = steps_at(s, 57, 4);
  CHECK(later.theta == st.theta);

  s.c_lambda = 0.1;
  CHECK(steps_at(s, 0, 4).x == 0.1 * 0.2);
  s.override_steps = StepTriple{0.1, 0.01, 0.02};
  CHECK(steps_at(s, 3, 4).y == 0.02);
  CHECK(steps_at(s, 3, 4)[Block::theta] == 0.1);

  Schedules bad;
  bad.mu0 = 0.0;
  CHECK_THROWS_AS(validate(bad), Error);
  bad.mu0 = 1.0;
  bad.p = -0.1;
  CHECK_THROWS_AS(validate(bad), Error);
  Schedules fixed;
  fixed.p = 0.0;
  CHECK_NOTHROW(validate(fixed));
  CHECK(mu_at(fixed, 123456) == fixed.mu0);
}

TEST_CASE("estimator degeneracy and recursion") {
  std::mt19937_64 eng(5);
  auto triple = [&] { return DirectionTriple{randn(4, eng), randn(3, eng), randn(4, eng)}; };

  for (auto kind : {EstimatorKind::momentum, EstimatorKind::storm}) {
    EstimatorState st;
    st.kind = kind;
    st.rho = {1.0, 1.0, 1.0};
    for (int k = 0; k < 5; ++k) {
      const auto raw = triple();
      const auto old = triple();
      const auto up = apply_estimator(st, raw, &old);
      CHECK(equal(up.estimate, raw));
      st = up.state;
    }
  }

  // First call returns raw even with rho < 1.
  EstimatorState mom;
  mom.kind = EstimatorKind::momentum;
  mom.rho = {0.2, 0.2, 0.2};
  const auto r = triple();
  auto up = apply_estimator(mom, r);
  CHECK(equal(up.estimate, r));

  // Constant raw input: the gap to raw shrinks by (1 - rho) each step.
  const DirectionTriple target{Vec::Ones(4), Vec::Ones(3), Vec::Ones(4)};
  double gap = (up.estimate.d_x - target.d_x).norm();
  for (int k = 0; k < 30; ++k) {
    up = apply_estimator(up.state, target);
    const double next = (up.estimate.d_x - target.d_x).norm();
    CHECK(next == doctest::Approx(0.8 * gap).epsilon(1e-10));
    gap = next;
  }

  // STORM with constant iterates and no noise: correction cancels, estimate == raw.
  EstimatorState storm;
  storm.kind = EstimatorKind::storm;
  storm.rho = {0.3, 0.3, 0.3};
  const auto c = triple();
  auto su = apply_estimator(storm, c);
  for (int k = 0; k < 10; ++k) {
    su = apply_estimator(su.state, c, &c);
    CHECK((su.estimate.d_theta - c.d_theta).norm() < 1e-15);
    CHECK((su.estimate.d_x - c.d_x).norm() < 1e-15);
  }
  CHECK_THROWS_AS(apply_estimator(su.state, c), Error);

  // Minibatch ignores history.
  EstimatorState mb;
  const auto m1 = apply_estimator(mb, triple());
  const auto r2 = triple();
  CHECK(equal(apply_estimator(m1.state, r2).estimate, r2));
}

TEST_CASE("rho schedules") {
  CHECK(RhoSchedule::default_for(EstimatorKind::momentum).at(50) == 0.2);
  const auto storm = RhoSchedule::default_for(EstimatorKind::storm);
  CHECK(storm.at(0) == 1.0);
  CHECK(storm.at(7) == doctest::Approx(std::pow(8.0, -2.0 / 3.0)));
  CHECK(parse_estimator_kind("storm") == EstimatorKind::storm);
  CHECK_THROWS_AS(parse_estimator_kind("adam"), Error);
}
