#include <doctest.h>

#include <cmath>

#include "pablo/olo.hpp"
#include "pablo/rng.hpp"

using namespace pablo;
using doctest::Approx;

namespace {

DynamicBaseParams example_params() {
  DynamicBaseParams p;
  p.alpha = 0.01;
  p.gamma = 0.01;
  p.eta = 1.0;
  p.k = 4.0;
  p.G = 1.0;
  p.anchor = Vector{0, 0};
  return p;
}

// psi(w) for anchor 0: (k/eta)[(r + alpha) ln(r/alpha + 1) - r].
double psi(const Vector& w, const DynamicBaseParams& p) {
  const double r = w.norm();
  return p.k / p.eta * ((r + p.alpha) * std::log1p(r / p.alpha) - r);
}

Vector grad_psi(const Vector& w, const DynamicBaseParams& p) {
  const double r = w.norm();
  if (r == 0.0) return Vector(w.dim());
  return (p.k / p.eta * std::log1p(r / p.alpha) / r) * w;
}

// <g, w> + phi_t(w) + D_psi(w | w_t)
double objective(const Vector& w, const Vector& g, const Vector& wt, const DynamicBaseParams& p) {
  const double c = 0.5 * p.eta * g.squared_norm() + p.gamma;
  return dot(g, w) + c * w.norm() + psi(w, p) - psi(wt, p) - dot(grad_psi(wt, p), w - wt);
}

Vector random_vector(RngStream& rng, std::size_t d, double radius) {
  Vector v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = rng.normal();
  return (radius * rng.uniform() / v.norm()) * v;
}

}  // namespace

TEST_CASE("base_update hand example") {
  DynamicBase b(example_params());
  b.update(Vector{1, 0});
  const double expect = -0.01 * std::expm1(0.25 * (1.0 - 0.5 - 0.01));
  CHECK(b.predict()[0] == Approx(expect).epsilon(1e-14));
  CHECK(b.predict()[0] == Approx(-0.00130319).epsilon(1e-5));
  CHECK(b.predict()[1] == 0.0);
}

TEST_CASE("base_update fixed point and collapse") {
  DynamicBase b(example_params());
  b.update(Vector{0, 0});
  CHECK(b.predict().is_zero());

  auto p = example_params();
  p.gamma = 1.0;
  DynamicBase c(p);
  c.update(Vector{1, 0});
  CHECK(c.predict().is_zero());
}

TEST_CASE("base_update rejects gradients above G") {
  DynamicBase b(example_params());
  CHECK_THROWS_AS(b.update(Vector{1.1, 0}), Error);
  CHECK_NOTHROW(b.update(Vector{0.6, 0.8}));
  auto p = example_params();
  p.eta = 2.0;
  CHECK_THROWS_AS(DynamicBase{p}, Error);
  p = example_params();
  p.k = 3.0;
  CHECK_THROWS_AS(DynamicBase{p}, Error);
}

TEST_CASE("base_project examples") {
  CHECK(base_project(Vector{-1.5, 2.0}, Domain::FullSpace) == Vector{-1.5, 2.0});
  CHECK(base_project(Vector{-0.3}, Domain::NonNegativeHalfLine) == Vector{0.0});
  CHECK(base_project(Vector{0.7}, Domain::NonNegativeHalfLine) == Vector{0.7});
  CHECK_THROWS_AS(base_project(Vector{1, 2}, Domain::NonNegativeHalfLine), Error);
}

TEST_CASE("half-line learner stays nonnegative") {
  DynamicBase y(tuned_base_params(1, 1.0, 1.0, 100, 1.0), Domain::NonNegativeHalfLine);
  RngStream rng(1);
  for (int t = 0; t < 100; ++t) {
    y.update(Vector{2.0 * rng.uniform() - 1.0});
    CHECK(y.predict()[0] >= 0.0);
  }
}

TEST_CASE("closed form agrees with the minimizer of the update objective") {
  RngStream rng(31);
  int interior = 0;
  for (int trial = 0; trial < 300; ++trial) {
    DynamicBaseParams p;
    p.alpha = 0.01 + rng.uniform();
    p.gamma = 0.01 + 0.2 * rng.uniform();
    p.eta = 0.1 + 0.9 * rng.uniform();
    p.k = 4.0 + 4.0 * rng.uniform();
    p.G = 1.0;
    p.anchor = Vector{0, 0};
    DynamicBase b(p);
    const int warmup = static_cast<int>(rng.uniform_int(5));
    for (int i = 0; i < warmup; ++i) b.update(random_vector(rng, 2, 1.0));
    const Vector wt = b.predict();
    const Vector g = random_vector(rng, 2, 1.0);
    b.update(g);
    const Vector w = b.predict();

    const double c = 0.5 * p.eta * g.squared_norm() + p.gamma;
    const Vector theta = grad_psi(wt, p) - g;
    if (w.is_zero()) {
      // 0 minimizes iff the subgradient ball of c ||w|| + psi contains theta.
      CHECK(theta.norm() <= c + 1e-12);
    } else {
      ++interior;
      const Vector grad = g + (c / w.norm()) * w + grad_psi(w, p) - grad_psi(wt, p);
      CHECK(grad.norm() <= 1e-8);
    }
    const double f0 = objective(w, g, wt, p);
    for (int k = 0; k < 8; ++k) {
      const Vector probe = w + random_vector(rng, 2, 1e-3);
      CHECK(objective(probe, g, wt, p) >= f0 - 1e-12);
    }
  }
  CHECK(interior > 50);
}

TEST_CASE("step_size_grid") {
  const auto g = step_size_grid(1.0, 1024);
  REQUIRE(g.size() == 11);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == std::ldexp(1.0, static_cast<int>(i)) / 1024.0);
  CHECK(step_size_grid(2.0, 1) == std::vector<double>{0.5});
  const auto h = step_size_grid(3.0, 1000);
  CHECK(h.size() == 10);
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] > h[i - 1]);
  CHECK(h.back() <= 1.0 / 3.0);
  CHECK(step_size_grid(1.0, 1ull << 20).size() == 21);
}

TEST_CASE("meta sums its bases and starts at zero") {
  DynamicMeta m({3, 1.0, 2.0, 64});
  CHECK(m.predict().is_zero());
  CHECK(m.grid().size() == 7);
  RngStream rng(4);
  for (int t = 0; t < 64; ++t) {
    m.update(random_vector(rng, 3, 2.0));
    Vector sum(3);
    for (const auto& b : m.bases()) sum += b.predict();
    CHECK(m.predict() == sum);
  }
  m.reset();
  CHECK(m.predict().is_zero());
}

TEST_CASE("base_regret_bound substitutions") {
  const double G = 1.5, eps = 2.0, eta = 0.3;
  const std::size_t T = 10;
  const auto p = tuned_base_params(2, eps, G, T, eta);
  CHECK(p.alpha == Approx(eps / T));
  CHECK(p.gamma == Approx(G / T));
  CHECK(p.k == 4.0);

  RngStream rng(8);
  std::vector<Vector> grads;
  for (std::size_t t = 0; t < T; ++t) grads.push_back(random_vector(rng, 2, G));
  CHECK(base_regret_bound(ComparatorSequence::constant(Vector{0, 0}, T), grads, p) == Approx(G * eps));

  const Vector u{0.6, -0.8};
  const std::vector<Vector> zeros(T, Vector{0, 0});
  const double expect = G * (1.0 + eps) + 8.0 * phi_weight(1.0, T / eps) / (2.0 * eta);
  CHECK(base_regret_bound(ComparatorSequence::constant(u, T), zeros, p) == Approx(expect));

  const auto p1 = tuned_base_params(2, eps, G, 1, 0.5);
  CHECK(base_regret_bound(ComparatorSequence::constant(Vector{0, 0}, 1), {Vector{1, 0}}, p1) == Approx(G * eps));
  CHECK_THROWS_AS(base_regret_bound(ComparatorSequence::constant(u, 3), zeros, p), Error);
}

TEST_CASE("origin regret and iterate growth under the aligned adversary") {
  const double G = 1.0, eps = 1.0;
  const std::size_t T = 512;
  for (double eta : step_size_grid(G, T)) {
    DynamicBase b(tuned_base_params(2, eps, G, T, eta));
    double regret = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
      const Vector w = b.predict();
      CHECK(w.norm() <= eps * std::ldexp(1.0, static_cast<int>(t - 1)) + 1e-12);
      const Vector g = w.is_zero() ? Vector{G, 0} : (G / w.norm()) * w;
      regret += dot(g, w);
      b.update(g);
    }
    CHECK(regret <= G * eps + 1e-9);
  }
}

TEST_CASE("random certificates for base and meta") {
  RngStream rng(12);
  const std::size_t T = 128;
  const double G = 1.0, eps = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> grads, iters, us;
    Vector u = random_vector(rng, 2, 3.0);
    const double eta = step_size_grid(G, T)[rng.uniform_int(8)];
    DynamicBase b(tuned_base_params(2, eps, G, T, eta));
    DynamicMeta m({2, eps, G, T});
    std::vector<Vector> meta_iters;
    for (std::size_t t = 0; t < T; ++t) {
      if (rng.uniform() < 0.05) u = random_vector(rng, 2, 3.0);
      us.push_back(u);
      const Vector g = random_vector(rng, 2, G);
      iters.push_back(b.predict());
      meta_iters.push_back(m.predict());
      grads.push_back(g);
      b.update(g);
      m.update(g);
    }
    const ComparatorSequence cs(us);
    CHECK(linear_regret(grads, iters, cs) <= base_regret_bound(cs, grads, b.params()) + 1e-9);
    CHECK(linear_regret(grads, meta_iters, cs) <= meta_regret_bound(cs, grads, eps, G, m.grid().size()) + 1e-9);
  }
}

TEST_CASE("linear_regret") {
  const std::vector<Vector> g{Vector{1, 0}, Vector{0, 1}};
  const std::vector<Vector> w{Vector{2, 0}, Vector{0, -1}};
  CHECK(linear_regret(g, w, ComparatorSequence::constant(Vector{1, 1}, 2)) == Approx(2.0 - 1.0 - 2.0));
  CHECK_THROWS_AS(linear_regret(g, {Vector{0, 0}}, ComparatorSequence::constant(Vector{1, 1}, 2)), Error);
}
