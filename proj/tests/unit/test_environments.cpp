#include <doctest.h>

#include <cmath>

#include "pablo/environments.hpp"

using namespace pablo;
using doctest::Approx;

TEST_CASE("hypercube instance") {
  CHECK(hypercube_delta(64) == 0.015625);
  const auto inst = hypercube_env(4, 64, RngStream(1));
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::fabs(inst.theta[i]) == 0.015625);
  CHECK(inst.theta.squared_norm() == Approx(0.0009765625));
  CHECK(inst.comparator.norm() == Approx(1.0));
  CHECK(dot(inst.comparator, inst.theta) == Approx(-0.015625 * 2.0));
  CHECK_THROWS_AS(hypercube_env(4, 15, RngStream(1)), Error);
  CHECK_THROWS_AS(clipped_hypercube_env(4, 15, RngStream(1)), Error);
}

TEST_CASE("hypercube comparator aligns against every sign pattern") {
  RngStream rng(2);
  for (int i = 0; i < 50; ++i) {
    const std::size_t d = 1 + rng.uniform_int(10);
    const Vector theta = draw_hypercube_theta(d, 0.1, rng);
    CHECK(dot(hypercube_comparator(theta), theta) == Approx(-0.1 * std::sqrt(double(d))));
  }
  CHECK(hypercube_comparator(Vector{0.0, 2.0})[0] == 0.0);
}

TEST_CASE("hypercube loss moments") {
  const std::size_t d = 4, T = 64, n = 100000;
  auto inst = hypercube_env(d, T, RngStream(3));
  double s2 = 0.0, s4 = 0.0, cmp = 0.0, cmp2 = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const Vector l = inst.env->loss(t, Vector(d));
    const double q = l.squared_norm();
    s2 += q;
    s4 += q * q;
    const double c = dot(l, inst.comparator);
    cmp += c;
    cmp2 += c * c;
  }
  const double mean = s2 / n, sd = std::sqrt((s4 / n - mean * mean) / n);
  CHECK(std::fabs(mean - (inst.theta.squared_norm() + 0.5)) <= 3.0 * sd);
  CHECK(mean <= 1.0);
  const double cm = cmp / n, csd = std::sqrt((cmp2 / n - cm * cm) / n);
  CHECK(std::fabs(cm + hypercube_delta(T) * 2.0) <= 5.0 * csd);
  CHECK(inst.env->clip_count() == 0);
}

TEST_CASE("clipped sigma") {
  CHECK(clipped_sigma_sq(4, 100) == Approx(0.0045108).epsilon(1e-4));
  const double direct = 0.25 / (4.0 + std::pow(2.0 + 2.0 * std::sqrt(std::log(800.0)), 2));
  CHECK(clipped_sigma_sq(4, 100) == Approx(direct).epsilon(1e-14));
  for (std::size_t d = 1; d < 40; ++d)
    for (std::size_t T = 1; T < 5000; T = T * 3 + 1) {
      CHECK(clipped_sigma_sq(d, T) <= 0.5);
      CHECK(clipped_sigma_sq(d + 1, T) < clipped_sigma_sq(d, T));
      CHECK(clipped_sigma_sq(d, T + 1) < clipped_sigma_sq(d, T));
    }
}

TEST_CASE("clipped hypercube bound and clip rarity") {
  const std::size_t d = 4, T = 100, n = 1000000;
  auto inst = clipped_hypercube_env(d, T, RngStream(4));
  CHECK(inst.env->sigma() == Approx(std::sqrt(clipped_sigma_sq(d, T))));
  std::size_t over = 0;
  for (std::size_t t = 0; t < n; ++t) over += inst.env->loss(t, Vector(d)).norm() > 1.0;
  CHECK(over == 0);
  const double p = 1.0 / (8.0 * T);
  const double freq = double(inst.env->clip_count()) / n;
  CHECK(freq <= p + 5.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("stochastic env clips to zero") {
  StochasticEnv env(Vector{0.0, 0.0}, 1.0, 0.5, RngStream(5));
  std::size_t zeros = 0;
  for (std::size_t t = 0; t < 1000; ++t) {
    const Vector l = env.loss(t, Vector(2));
    CHECK(l.norm() <= 0.5);
    if (l.is_zero()) ++zeros;
  }
  CHECK(zeros == env.clip_count());
  CHECK(zeros > 800);
}

TEST_CASE("environment determinism") {
  auto a = hypercube_env(3, 100, RngStream(9));
  auto b = hypercube_env(3, 100, RngStream(9));
  auto c = hypercube_env(3, 100, RngStream(10));
  CHECK(a.theta == b.theta);
  bool differs = false;
  for (std::size_t t = 0; t < 100; ++t) {
    const Vector la = a.env->loss(t, Vector(3));
    CHECK(la == b.env->loss(t, Vector(3)));
    differs = differs || !(la == c.env->loss(t, Vector(3)));
  }
  CHECK(differs);
}

TEST_CASE("adaptive sign env") {
  AdaptiveSignEnv env(2, 1.0);
  const Vector l = env.loss(0, Vector{3, 4});
  CHECK(l[0] == Approx(0.6));
  CHECK(l[1] == Approx(0.8));
  CHECK(env.loss(1, Vector{0, 0}) == Vector{1, 0});
  AdaptiveSignEnv g3(3, 2.5);
  CHECK(g3.loss(0, Vector{-1, 2, 0.5}).norm() == Approx(2.5));
}

TEST_CASE("fixed sequence cycles and random bounded respects G") {
  FixedSequenceEnv f({Vector{1.0}, Vector{-1.0}});
  CHECK(f.loss(0, Vector{0.0}) == Vector{1.0});
  CHECK(f.loss(1, Vector{0.0}) == Vector{-1.0});
  CHECK(f.loss(2, Vector{0.0}) == Vector{1.0});
  RandomBoundedEnv r(3, 2.0, RngStream(6));
  for (std::size_t t = 0; t < 1000; ++t) CHECK(r.loss(t, Vector(3)).norm() <= 2.0 + 1e-12);
  CHECK(zero_env(4)->loss(0, Vector(4)).is_zero());
}

TEST_CASE("piecewise hypercube alternates signs over nearly equal blocks") {
  const Vector theta{0.1, -0.1};
  PiecewiseHypercubeEnv env(theta, 10, 3, 0.0, std::nullopt, RngStream(7));
  // Blocks [0,3), [3,6), [6,10).
  CHECK(env.segment_of(0) == 0);
  CHECK(env.segment_of(2) == 0);
  CHECK(env.segment_of(3) == 1);
  CHECK(env.segment_of(6) == 2);
  CHECK(env.segment_of(9) == 2);
  CHECK(env.loss(0, Vector(2)) == theta);
  CHECK(env.aligned_comparator(4).value()[0] == Approx(1.0 / std::sqrt(2.0)));
  CHECK_THROWS_AS(PiecewiseHypercubeEnv(theta, 2, 3, 0.0, std::nullopt, RngStream(7)), Error);
}

TEST_CASE("fenchel comparator") {
  CHECK(fenchel_comparator({Vector{0, 0}, Vector{0, 0}}, 1.0, 1.0, 2).is_zero());
  // ||L||^2 = G^2 T with G = 1, T = 4.
  const std::vector<Vector> ls(4, Vector{0.5, 0.0});
  const Vector u = fenchel_comparator(ls, 1.0, 1.0, 4);
  CHECK(u.norm() == Approx(std::exp(1.0)));
  CHECK(u[0] < 0.0);
  std::vector<Vector> neg;
  for (const auto& l : ls) neg.push_back(-1.0 * l);
  const Vector v = fenchel_comparator(neg, 1.0, 1.0, 4);
  CHECK(v.norm() == Approx(u.norm()));
  CHECK(v[0] == Approx(-u[0]));
}
