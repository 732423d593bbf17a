#include <doctest.h>

#include <cmath>

#include "pablo/olo.hpp"
#include "pablo/perturbation.hpp"

using namespace pablo;
using doctest::Approx;

namespace {

// Learner that always predicts a fixed point.
class FixedLearner final : public OnlineLearner {
 public:
  explicit FixedLearner(Vector w) : w_(std::move(w)) {}
  std::size_t dim() const override { return w_.dim(); }
  Vector predict() const override { return w_; }
  void update(const Vector& g) override { last = g; }
  void reset() override {}
  Vector last;

 private:
  Vector w_;
};

Vector random_vector(RngStream& rng, std::size_t d, double scale) {
  Vector v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

}  // namespace

TEST_CASE("make_lambda examples") {
  CHECK(make_lambda(Vector{3, 4}, {2, 0.1, 1.0}) == Approx(0.02).epsilon(1e-15));
  CHECK(make_lambda(Vector{0, 0}, {2, 1.0, 1.0}) == 0.5);
  CHECK(make_lambda(Vector(8), {8, 0.5, 1.0}) == 0.5);
  CHECK_THROWS_AS(make_lambda(Vector{0, 0}, {2, 0.0, 1.0}), Error);
  CHECK_THROWS_AS(make_lambda(Vector{0, 0, 0}, {2, 1.0, 1.0}), Error);
}

TEST_CASE("draw_from_index layout") {
  const auto d0 = draw_from_index(0, 0.5);
  CHECK(d0.axis == 0);
  CHECK(d0.sign == 1.0);
  const auto d3 = draw_from_index(3, 0.5);
  CHECK(d3.axis == 1);
  CHECK(d3.sign == -1.0);
}

TEST_CASE("perturb examples") {
  const Vector a = perturb(Vector{0, 0}, {0, 1.0, 0.5});
  CHECK(a[0] == Approx(std::sqrt(2.0)));
  CHECK(a[1] == 0.0);
  const Vector b = perturb(Vector{0, 0}, {0, -1.0, 0.5});
  CHECK(b[0] == Approx(-std::sqrt(2.0)));
  const Vector c = perturb(Vector{3, 4}, {1, 1.0, 0.02});
  CHECK(c[0] == 3.0);
  CHECK(c[1] == Approx(4.0 + std::sqrt(50.0)));
  CHECK(c[1] == Approx(11.0711).epsilon(1e-5));
}

TEST_CASE("estimate_loss examples") {
  const Vector a = estimate_loss(std::sqrt(2.0), {0, 1.0, 0.5}, 2);
  CHECK(a[0] == Approx(2.0));
  CHECK(a[1] == 0.0);
  CHECK(estimate_loss(0.0, {1, 1.0, 0.5}, 2).is_zero());
  const Vector b = estimate_loss(-std::sqrt(2.0), {0, -1.0, 0.5}, 2);
  CHECK(b[0] == Approx(2.0));
  CHECK_THROWS_AS(estimate_loss(NAN, {0, 1.0, 0.5}, 2), Error);
}

TEST_CASE("enumerate_estimates examples") {
  const auto t = enumerate_estimates(Vector{0, 0}, Vector{1, 0}, {2, 1.0, 1.0});
  REQUIRE(t.size() == 4);
  CHECK(t[0].estimate[0] == Approx(2.0));
  CHECK(t[1].estimate[0] == Approx(2.0));
  CHECK(t[2].estimate.squared_norm() == Approx(0.0));
  CHECK(t[3].estimate.squared_norm() == Approx(0.0));
  for (const auto& e : t) CHECK(e.probability == 0.25);
  const Vector mean = enumeration_mean(t);
  CHECK(mean[0] == Approx(1.0));
  CHECK(std::fabs(mean[1]) < 1e-15);
  CHECK(enumeration_second_moment(t) == Approx(2.0));

  for (const auto& e : enumerate_estimates(Vector{0.3, -1}, Vector{0, 0}, {2, 1.0, 1.0}))
    CHECK(e.estimate.is_zero());

  const auto one = enumerate_estimates(Vector{5.0}, Vector{1.0}, {1, 1.0, 1.0});
  REQUIRE(one.size() == 2);
  CHECK(enumeration_mean(one)[0] == Approx(1.0));
}

TEST_CASE("estimator identities on random instances") {
  RngStream rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 1 + rng.uniform_int(8);
    const double eps = 0.05 + rng.uniform();
    const Vector w = random_vector(rng, d, rng.uniform() * 3.0);
    Vector ell = random_vector(rng, d, 1.0);
    ell *= rng.uniform() / std::max(ell.norm(), 1e-300);
    const PerturbationConfig cfg{d, eps, 1.0};
    const double lambda = make_lambda(w, cfg);
    const auto table = enumerate_estimates(w, ell, cfg);
    REQUIRE(table.size() == 2 * d);

    const Vector mean = enumeration_mean(table);
    for (std::size_t i = 0; i < d; ++i) CHECK(std::fabs(mean[i] - ell[i]) <= 1e-12);

    const double dd = static_cast<double>(d);
    const double lw = dot(ell, w);
    const double second = dd * ell.squared_norm() + dd * lw * lw * (dd * lambda);
    CHECK(enumeration_second_moment(table) == Approx(second).epsilon(1e-9));
    CHECK(enumeration_second_moment(table) <= 2.0 * dd * ell.squared_norm() * (1.0 + 1e-12));

    const double as_bound = dd * dd * ell.squared_norm() * std::pow(std::sqrt(lambda) * w.norm() + 1.0, 2);
    for (const auto& e : table) {
      CHECK(e.estimate.squared_norm() <= as_bound * (1.0 + 1e-12));
      CHECK(e.estimate.squared_norm() <= 4.0 * dd * dd * ell.squared_norm() * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("diagonal enumeration identities") {
  RngStream rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.uniform_int(6);
    const Vector w = random_vector(rng, d, 1.0);
    const Vector ell = random_vector(rng, d, 0.5);
    std::vector<double> eig(d);
    double trace = 0.0;
    for (auto& e : eig) trace += (e = 0.1 + 2.0 * rng.uniform());
    const auto table = enumerate_estimates_diagonal(w, ell, eig);
    const Vector mean = enumeration_mean(table);
    for (std::size_t i = 0; i < d; ++i) CHECK(std::fabs(mean[i] - ell[i]) <= 1e-12);
    const double dd = static_cast<double>(d);
    const double lw = dot(ell, w);
    CHECK(enumeration_second_moment(table) == Approx(dd * ell.squared_norm() + dd * lw * lw * trace).epsilon(1e-9));
  }
  CHECK_THROWS_AS(enumerate_estimates_diagonal(Vector{0, 0}, Vector{1, 0}, {1.0}), Error);
  CHECK_THROWS_AS(enumerate_estimates_diagonal(Vector{0, 0}, Vector{1, 0}, {1.0, 0.0}), Error);
}

TEST_CASE("pablo_round reproduces the enumeration example") {
  FixedLearner learner(Vector{0, 0});
  const Vector ell{1, 0};
  const auto rec = pablo_round(learner, [&](const Vector& x) { return dot(ell, x); }, {2, 1.0, 1.0}, 0);
  CHECK(rec.draw.axis == 0);
  CHECK(rec.draw.sign == 1.0);
  CHECK(rec.played[0] == Approx(std::sqrt(2.0)));
  CHECK(rec.observed == Approx(std::sqrt(2.0)));
  CHECK(rec.estimate[0] == Approx(2.0));
  CHECK(learner.last == rec.estimate);
  CHECK_THROWS_AS(pablo_round(learner, [](const Vector&) { return 0.0; }, {2, 1.0, 1.0}, 4), Error);
}

TEST_CASE("pablo_round with zero loss and zero prediction") {
  FixedLearner learner(Vector{0, 0, 0});
  RngStream rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto rec = pablo_round(learner, [](const Vector&) { return 0.0; }, {3, 1.0, 1.0}, rng);
    CHECK(rec.w.is_zero());
    CHECK(rec.observed == 0.0);
    CHECK(rec.estimate.is_zero());
  }
  CHECK(rng.counter() == 20);
}

TEST_CASE("pablo_round is deterministic in the seed") {
  const Vector ell{0.3, -0.4};
  auto run = [&](std::uint64_t seed) {
    DynamicBase learner(tuned_base_params(2, 1.0, 4.0, 50, 0.25));
    RngStream rng(seed);
    std::vector<RoundRecord> out;
    for (int t = 0; t < 50; ++t)
      out.push_back(pablo_round(learner, [&](const Vector& x) { return dot(ell, x); }, {2, 0.5, 1.0}, rng));
    return out;
  };
  const auto a = run(77), b = run(77);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].played == b[i].played);
    CHECK(a[i].estimate == b[i].estimate);
    CHECK(a[i].observed == b[i].observed);
  }
}

TEST_CASE("Monte Carlo mean of the estimator stays in a 6 sigma band") {
  const Vector w{0.7, -0.2, 1.1};
  const Vector ell{0.4, 0.1, -0.5};
  const PerturbationConfig cfg{3, 0.5, 1.0};
  FixedLearner learner(w);
  RngStream rng(909);
  const int n = 100000;
  Vector sum(3);
  for (int i = 0; i < n; ++i)
    sum += pablo_round(learner, [&](const Vector& x) { return dot(ell, x); }, cfg, rng).estimate;
  const double lambda = make_lambda(w, cfg);
  const double total_var = 3.0 * ell.squared_norm() + 9.0 * lambda * std::pow(dot(ell, w), 2) - ell.squared_norm();
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::fabs(sum[i] / n - ell[i]) <= 6.0 * std::sqrt(total_var / n));
}
