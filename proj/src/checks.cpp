#include "pablo/checks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pablo/composite.hpp"
#include "pablo/environments.hpp"
#include "pablo/olo.hpp"
#include "pablo/perturbation.hpp"

namespace pablo::checks {

namespace {

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double log_uniform(RngStream& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

Vector gaussian_vec(RngStream& rng, std::size_t d, double scale) {
  Vector v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

// Uniform direction, norm exactly `radius`.
Vector on_sphere(RngStream& rng, std::size_t d, double radius) {
  Vector v = gaussian_vec(rng, d, 1.0);
  const double n = v.norm();
  if (n == 0.0) return Vector::unit(d, 0, radius);
  return (radius / n) * v;
}

struct Instance {
  std::size_t d;
  double eps;
  Vector w;
  Vector loss;
};

Instance random_instance(RngStream& rng) {
  static constexpr std::size_t dims[] = {1, 2, 4, 8, 16};
  Instance in;
  in.d = dims[rng.uniform_int(5)];
  in.eps = log_uniform(rng, 1e-3, 10.0);
  in.w = gaussian_vec(rng, in.d, log_uniform(rng, 1e-3, 1e2));
  in.loss = on_sphere(rng, in.d, rng.uniform());
  return in;
}

bool within(double value, double bound, double rel = 1e-12) { return value <= bound + rel * std::fabs(bound); }

bool bit_equal(const Vector& a, const Vector& b) {
  if (a.dim() != b.dim()) return false;
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

// Random piecewise-constant comparator with up to `max_switches` switches.
ComparatorSequence random_switching(RngStream& rng, std::size_t d, std::size_t T, std::size_t max_switches) {
  const std::size_t k = rng.uniform_int(max_switches + 1);
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < k; ++i) starts.push_back(1 + rng.uniform_int(T - 1));
  std::sort(starts.begin(), starts.end());
  std::vector<Vector> pts;
  pts.reserve(T);
  std::size_t seg = 0;
  Vector cur = on_sphere(rng, d, rng.uniform() < 0.1 ? 0.0 : log_uniform(rng, 1e-2, 20.0));
  for (std::size_t t = 0; t < T; ++t) {
    while (seg + 1 < starts.size() && starts[seg + 1] <= t) {
      ++seg;
      cur = on_sphere(rng, d, rng.uniform() < 0.1 ? 0.0 : log_uniform(rng, 1e-2, 20.0));
    }
    pts.push_back(cur);
  }
  return ComparatorSequence(std::move(pts));
}

// Gradient streams of three shapes: uniform in the ball, a drifting fixed
// direction, and sign-alternating blocks.
std::vector<Vector> random_gradients(RngStream& rng, std::size_t d, std::size_t T, double G) {
  const auto kind = rng.uniform_int(3);
  const Vector dir = on_sphere(rng, d, 1.0);
  const std::size_t block = 1 + rng.uniform_int(T);
  std::vector<Vector> g;
  g.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    switch (kind) {
      case 0:
        g.push_back(on_sphere(rng, d, G * rng.uniform()));
        break;
      case 1: {
        Vector v = dir + on_sphere(rng, d, 0.5 * rng.uniform());
        g.push_back((G * (0.5 + 0.5 * rng.uniform()) / v.norm()) * v);
        break;
      }
      default:
        g.push_back(((t / block) % 2 == 0 ? G : -G) * dir);
        break;
    }
  }
  return g;
}

// Runs a learner on a fixed gradient stream and returns the iterates.
std::vector<Vector> play(OnlineLearner& learner, const std::vector<Vector>& grads) {
  std::vector<Vector> iterates;
  iterates.reserve(grads.size());
  for (const auto& g : grads) {
    iterates.push_back(learner.predict());
    learner.update(g);
  }
  return iterates;
}

// Origin regret against the adaptive sign adversary, full information.
double adaptive_origin_regret(OnlineLearner& learner, double G, std::size_t T) {
  AdaptiveSignEnv env(learner.dim(), G);
  double r = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const Vector w = learner.predict();
    const Vector g = env.loss(t, w);
    r += dot(g, w);
    learner.update(g);
  }
  return r;
}

// Iterate growth: ||w_t|| <= eps 2^{t-1}.
bool growth_ok(const std::vector<Vector>& iterates, double eps) {
  for (std::size_t t = 0; t < iterates.size() && t < 1000; ++t)
    if (!within(iterates[t].norm(), eps * std::ldexp(1.0, static_cast<int>(t)))) return false;
  return true;
}

}  // namespace

CheckResult unbiasedness(std::size_t instances, std::uint64_t seed) {
  RngStream rng(RngStream::derive(seed, "unbiasedness"));
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto in = random_instance(rng);
    const Vector mean = enumeration_mean(enumerate_estimates(in.w, in.loss, {in.d, in.eps, 1.0}));
    for (std::size_t k = 0; k < in.d; ++k) worst = std::max(worst, std::fabs(mean[k] - in.loss[k]));
  }
  return {"unbiasedness", worst <= 1e-12, fmt("%g instances, max |mean - l| = %.3g", double(instances), worst)};
}

CheckResult second_moment(std::size_t instances, std::uint64_t seed) {
  RngStream rng(RngStream::derive(seed, "unbiasedness"));
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto in = random_instance(rng);
    const PerturbationConfig cfg{in.d, in.eps, 1.0};
    const double lambda = make_lambda(in.w, cfg);
    const double d = static_cast<double>(in.d);
    const double lw = dot(in.loss, in.w);
    const double expected = d * in.loss.squared_norm() + d * lw * lw * d * lambda;
    const double got = enumeration_second_moment(enumerate_estimates(in.w, in.loss, cfg));
    const double err = expected == 0.0 ? std::fabs(got) : std::fabs(got - expected) / expected;
    worst = std::max(worst, err);
  }
  const double worked =
      enumeration_second_moment(enumerate_estimates(Vector{0.0, 0.0}, Vector{1.0, 0.0}, {2, 1.0, 1.0}));
  const bool ok = worst <= 1e-9 && worked == 2.0;
  return {"second_moment", ok, fmt("max rel err %.3g, worked instance %.17g", worst, worked)};
}

CheckResult estimator_norm_bounds(std::size_t instances, std::uint64_t seed) {
  RngStream rng(RngStream::derive(seed, "estimator_norm_bounds"));
  std::size_t violations = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto in = random_instance(rng);
    const PerturbationConfig cfg{in.d, in.eps, 1.0};
    const auto table = enumerate_estimates(in.w, in.loss, cfg);
    const double d = static_cast<double>(in.d);
    const double l2 = in.loss.squared_norm();
    const double lambda = make_lambda(in.w, cfg);
    const double prop = d * d * l2 * std::pow(std::sqrt(lambda) * in.w.norm() + 1.0, 2);
    for (const auto& e : table) {
      const double n2 = e.estimate.squared_norm();
      if (!within(n2, 4.0 * d * d * l2) || !within(n2, prop)) ++violations;
    }
    if (!within(enumeration_second_moment(table), 2.0 * d * l2)) ++violations;
  }
  return {"estimator_norm_bounds", violations == 0, fmt("%g instances, %g violations", double(instances), double(violations))};
}

CheckResult base_certificate(std::size_t trials, std::size_t T, std::uint64_t seed) {
  RngStream rng(RngStream::derive(seed, "base_certificate"));
  std::size_t cert = 0, general = 0, growth = 0;
  double worst_ratio = -INFINITY;
  for (std::size_t i = 0; i < trials; ++i) {
    const std::size_t d = 1 + rng.uniform_int(4);
    const double G = log_uniform(rng, 0.5, 2.0);
    const double eps = log_uniform(rng, 0.1, 10.0);
    const double eta = log_uniform(rng, 1.0 / (G * static_cast<double>(T)), 1.0 / G);
    const auto params = tuned_base_params(d, eps, G, T, eta);
    DynamicBase base(params);
    const auto grads = random_gradients(rng, d, T, G);
    const auto u = random_switching(rng, d, T, 8);
    const auto iterates = play(base, grads);
    const double regret = linear_regret(grads, iterates, u);
    const double bound = base_regret_bound(u, grads, params);
    worst_ratio = std::max(worst_ratio, regret / bound);
    if (!within(regret, bound, 1e-9)) ++cert;
    if (!within(regret, base_regret_bound_general(u, grads, params), 1e-9)) ++general;
    if (!growth_ok(iterates, eps)) ++growth;
  }
  // Adaptive sign adversary: origin regret stays below G eps.
  double worst_origin = -INFINITY;
  for (double eta_frac : {1.0, 0.25, 1.0 / static_cast<double>(T)}) {
    for (std::size_t d : {1, 3}) {
      const double G = 1.5, eps = 0.7;
      DynamicBase base(tuned_base_params(d, eps, G, T, eta_frac / G));
      worst_origin = std::max(worst_origin, adaptive_origin_regret(base, G, T) - G * eps);
    }
  }
  const bool ok = cert == 0 && general == 0 && growth == 0 && worst_origin <= 1e-9;
  std::ostringstream os;
  os << trials << " trials: " << cert << " tuned / " << general << " general violations, " << growth
     << " growth violations, max regret/bound " << worst_ratio << ", max origin regret - G eps " << worst_origin;
  return {"base_certificate", ok, os.str()};
}

CheckResult meta_certificate(std::size_t trials, std::size_t T, std::uint64_t seed) {
  RngStream rng(RngStream::derive(seed, "meta_certificate"));
  std::size_t cert = 0, growth = 0;
  double worst_ratio = -INFINITY;
  for (std::size_t i = 0; i < trials; ++i) {
    const std::size_t d = 1 + rng.uniform_int(4);
    const double G = log_uniform(rng, 0.5, 2.0);
    const double eps = log_uniform(rng, 0.1, 10.0);
    DynamicMeta meta(MetaParams{d, eps, G, T});
    const auto grads = random_gradients(rng, d, T, G);
    const auto u = random_switching(rng, d, T, 8);
    const auto iterates = play(meta, grads);
    const double regret = linear_regret(grads, iterates, u);
    const double bound = meta_regret_bound(u, grads, eps, G, meta.grid().size());
    worst_ratio = std::max(worst_ratio, regret / bound);
    if (!within(regret, bound, 1e-9)) ++cert;
    if (!growth_ok(iterates, eps * static_cast<double>(meta.grid().size()))) ++growth;
  }
  const double G = 1.0, eps = 1.0;
  DynamicMeta meta(MetaParams{2, eps, G, T});
  const double origin = adaptive_origin_regret(meta, G, T) - G * eps * static_cast<double>(meta.grid().size());
  const bool ok = cert == 0 && growth == 0 && origin <= 1e-9;
  std::ostringstream os;
  os << trials << " trials: " << cert << " violations, " << growth << " growth violations, max regret/bound "
     << worst_ratio << ", origin regret - G|S|eps " << origin;
  return {"meta_certificate", ok, os.str()};
}

CheckResult composite_suite(std::size_t sequences, std::size_t learner_trials, std::uint64_t seed) {
  RngStream rng(RngStream::derive(seed, "composite"));
  std::size_t lower = 0, upper = 0, penalty_bound = 0;
  for (std::size_t i = 0; i < sequences; ++i) {
    const std::size_t T = 2 + rng.uniform_int(199);
    const double p = (i % 2 == 0) ? 2.0 : std::log(static_cast<double>(T) + 1.0);
    HuberComponent comp{log_uniform(rng, 1e-2, 10.0), log_uniform(rng, 1e-2, 10.0), p, 0.0};
    HuberComponent comp2{log_uniform(rng, 1e-2, 10.0), log_uniform(rng, 1e-2, 10.0),
                         std::log(static_cast<double>(T) + 1.0), 0.0};
    HuberComponent comp1{log_uniform(rng, 1e-2, 10.0), log_uniform(rng, 1e-2, 10.0), 2.0, 0.0};
    const double scale = log_uniform(rng, 1e-2, 10.0);
    std::vector<double> wn(T), un(T);
    for (std::size_t t = 0; t < T; ++t) {
      wn[t] = rng.uniform() < 0.1 ? 0.0 : scale * rng.uniform() * 2.0;
      un[t] = rng.uniform() < 0.1 ? 0.0 : scale * rng.uniform() * 2.0;
    }
    double sum_rw = 0.0, sum_ru = 0.0, sum_phi = 0.0, W = 0.0, U = 0.0;
    std::vector<Vector> us;
    for (std::size_t t = 0; t < T; ++t) {
      comp.running_sum += std::pow(wn[t], p);
      comp1.running_sum += std::pow(wn[t], comp1.p);
      comp2.running_sum += std::pow(wn[t], comp2.p);
      sum_rw += huber_value(wn[t], wn[t], comp);
      sum_ru += huber_value(un[t], wn[t], comp);
      sum_phi += huber_value(un[t], wn[t], comp1) + huber_value(un[t], wn[t], comp2);
      W += std::pow(wn[t], p);
      U += std::pow(un[t], p);
      us.push_back(Vector{un[t]});
    }
    const double c = comp.c, ap = std::pow(comp.alpha, p);
    if (!within(c * std::pow(W + ap, 1.0 / p) - c * comp.alpha, sum_rw)) ++lower;
    const double ub = c * p * std::pow(ap + U, 1.0 / p) * (std::pow(std::log1p(U / ap), (p - 1.0) / p) + 1.0);
    if (!within(sum_ru, ub)) ++upper;
    const double l3 = comparator_penalty_bound(ComparatorSequence(us), comp1.c, comp1.alpha, comp2.c, comp2.alpha, T);
    if (!within(sum_phi, l3)) ++penalty_bound;
  }

  std::size_t grad_bound = 0, residual = 0, reduction = 0;
  double worst_residual = 0.0, worst_grad_ratio = 0.0;
  const std::size_t T = 128;
  for (std::size_t i = 0; i < learner_trials; ++i) {
    const std::size_t d = 1 + rng.uniform_int(4);
    const double G = 1.0;
    const double eps = log_uniform(rng, 0.1, 10.0);
    const auto grads = random_gradients(rng, d, T, G);
    if (i % 10 == 9) {
      const auto k = highprob_constants(G, 0.05, T, d, eps, default_omega(eps, 0.05), step_size_grid(1.0, T).size());
      HighProbMeta meta(k, G, T, d);
      for (const auto& g : grads) {
        meta.update(g);
        for (const auto& l : meta.learners())
          if (!within(l.last_penalty_gradient_norm(), l.H())) ++grad_bound;
      }
      worst_residual = std::max(worst_residual, meta.max_fixed_point_residual());
      if (meta.max_fixed_point_residual() > kFixedPointTolerance) ++residual;
      continue;
    }
    CompositePenalty pen{HuberComponent{log_uniform(rng, 1e-3, 1.0), log_uniform(rng, 1e-2, 2.0), 2.0, 0.0},
                         HuberComponent{log_uniform(rng, 1e-3, 1.0), log_uniform(rng, 1e-2, 2.0),
                                        std::log(static_cast<double>(T) + 1.0), 0.0}};
    const auto grid = step_size_grid(G + pen.gradient_bound(), T);
    const double eta = grid[rng.uniform_int(grid.size())];
    CompositeLearner learner(CompositeParams{d, T, eta, G, eps, pen});
    for (const auto& g : grads) {
      learner.update(g);
      worst_grad_ratio = std::max(worst_grad_ratio, learner.last_penalty_gradient_norm() / learner.H());
      if (!within(learner.last_penalty_gradient_norm(), learner.H())) ++grad_bound;
    }
    worst_residual = std::max(worst_residual, learner.max_fixed_point_residual());
    if (learner.max_fixed_point_residual() > kFixedPointTolerance) ++residual;

    // Zero penalty: identical to the plain base learner, bit for bit.
    CompositeLearner plain(CompositeParams{d, T, 1.0 / G, G, eps, CompositePenalty{{0.0, 1.0, 2.0, 0.0}, {0.0, 1.0, 2.0, 0.0}}});
    DynamicBase base(tuned_base_params(d, eps, G, T, 1.0 / G));
    for (const auto& g : grads) {
      if (!bit_equal(plain.predict(), base.predict())) {
        ++reduction;
        break;
      }
      plain.update(g);
      base.update(g);
    }
  }

  const bool ok = lower == 0 && upper == 0 && penalty_bound == 0 && grad_bound == 0 && residual == 0 && reduction == 0;
  std::ostringstream os;
  os << sequences << " sequences: huber lower/upper " << lower << "/" << upper << ", penalty_bound " << penalty_bound << "; "
     << learner_trials << " learner trials: grad bound " << grad_bound << " (max ratio " << worst_grad_ratio
     << "), residual " << residual << " (max " << worst_residual << "), reduction mismatches " << reduction;
  return {"composite_suite", ok, os.str()};
}

CheckResult sum_inequalities(std::size_t sequences, std::uint64_t seed) {
  RngStream rng(RngStream::derive(seed, "sums"));
  std::size_t p_bound = 0, log_bound = 0;
  for (std::size_t i = 0; i < sequences; ++i) {
    const std::size_t T = 1 + rng.uniform_int(300);
    std::vector<double> a(T);
    const double scale = log_uniform(rng, 1e-3, 1e3);
    for (auto& x : a) x = rng.uniform() < 0.2 ? 0.0 : scale * log_uniform(rng, 1e-3, 1.0);
    double total = 0.0;
    for (double x : a) total += x;
    for (double p : {1.0, 2.0, 4.0, std::max(1.0, std::log(static_cast<double>(T) + 1.0))}) {
      double lhs = 0.0, run = 0.0;
      for (double x : a) {
        run += x;
        if (run > 0.0) lhs += x / std::pow(run, 1.0 - 1.0 / p);
      }
      if (!within(lhs, p * std::pow(total, 1.0 / p))) ++p_bound;
    }
    const double a0 = log_uniform(rng, 1e-3, 1e3);
    double lhs = 0.0, run = a0;
    for (double x : a) {
      run += x;
      lhs += x / run;
    }
    if (!within(lhs, std::log1p(total / a0))) ++log_bound;
  }
  std::ostringstream os;
  os << sequences << " sequences: p-bound " << p_bound << ", log-bound " << log_bound << " violations";
  return {"sum_inequalities", p_bound == 0 && log_bound == 0, os.str()};
}

CheckResult clipped_env_bound(std::size_t draws, std::uint64_t seed) {
  double worst = 0.0;
  for (std::size_t d : {1, 2, 8}) {
    const std::size_t T = 64 * d;
    auto inst = clipped_hypercube_env(d, T, RngStream(RngStream::derive(seed, "clip" + std::to_string(d))));
    const Vector zero(d);
    for (std::size_t i = 0; i < draws; ++i) worst = std::max(worst, inst.env->loss(i, zero).norm());
  }
  return {"clipped_env_bound", worst <= 1.0, fmt("max ||l_t|| = %.17g", worst)};
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.name = "determinism";
  c.env.kind = EnvKind::Hypercube;
  c.env.d = 3;
  c.learner.kind = LearnerKind::DynamicMeta;
  c.comparator.kind = ComparatorKind::Aligned;
  c.horizons = {64, 128};
  c.seed_count = 4;
  c.base_seed = 7;
  return c;
}

CheckResult run_determinism() {
  const auto cfg = small_config();
  std::ostringstream a, b;
  write_trials_csv(a, run_all(cfg, 1));
  write_trials_csv(b, run_all(cfg, 4));
  const bool ok = a.str() == b.str();
  return {"run_determinism", ok, ok ? "serial and pooled CSV identical" : "CSV differs between runs"};
}

CheckResult csv_round_trip() {
  const auto trials = run_all(small_config(), 1);
  std::stringstream ss;
  write_trials_csv(ss, trials);
  const auto back = read_trials_csv(ss);
  bool ok = back.size() == trials.size();
  for (std::size_t i = 0; ok && i < trials.size(); ++i) {
    const auto& x = trials[i];
    const auto& y = back[i];
    ok = x.env == y.env && x.learner == y.learner && x.d == y.d && x.T == y.T && x.seed == y.seed &&
         x.regret_static == y.regret_static && x.regret_dynamic == y.regret_dynamic && x.P_T == y.P_T &&
         x.S_T == y.S_T && x.Phi_T == y.Phi_T && x.P_T_Phi == y.P_T_Phi && x.max_u == y.max_u &&
         x.sum_l2u == y.sum_l2u;
  }
  return {"csv_round_trip", ok, ok ? "parsed CSV reproduces every summary field" : "mismatch after parsing"};
}

// ---------------------------------------------------------------- experiments

ExperimentConfig static_scaling_config(std::size_t seeds) {
  ExperimentConfig c;
  c.name = "static_scaling";
  c.env.kind = EnvKind::Stochastic;
  c.env.d = 4;
  c.env.theta = Vector{0.05, -0.05, 0.05, -0.05};
  // Per-coordinate noise of the hypercube instance, clipped so ||l_t|| <= G.
  c.env.sigma = std::sqrt(1.0 / 8.0);
  c.env.clip = 1.0;
  c.learner.kind = LearnerKind::DynamicMeta;
  c.learner.eps_budget = 1.0;
  c.learner.G = 1.0;
  c.comparator.kind = ComparatorKind::Aligned;
  c.comparator.norm = 1.0;
  c.horizons = {256, 512, 1024, 2048, 4096, 8192};
  c.seed_count = seeds;
  c.base_seed = 1000;
  return c;
}

ExperimentConfig path_length_config(std::size_t switches, std::size_t seeds) {
  ExperimentConfig c;
  c.name = "path_length_scaling";
  c.env.kind = EnvKind::PiecewiseHypercube;
  c.env.d = 4;
  c.env.segments = switches + 1;
  c.env.clip = 1.0;
  c.learner.kind = LearnerKind::DynamicMeta;
  c.learner.eps_budget = 1.0;
  c.comparator.kind = ComparatorKind::Aligned;
  // Alternating +-u with ||u|| = 1/2 gives P_T = switches exactly.
  c.comparator.norm = 0.5;
  c.horizons = {4096};
  c.seed_count = seeds;
  c.base_seed = 2000;
  return c;
}

ExperimentConfig highprob_config(std::size_t seeds) {
  ExperimentConfig c = static_scaling_config(seeds);
  c.name = "highprob_quantiles";
  c.learner.kind = LearnerKind::HighProbMeta;
  c.learner.delta = 0.05;
  c.horizons = {2048};
  c.base_seed = 3000;
  return c;
}

ExperimentConfig lower_bound_config(std::size_t d, bool clipped, std::size_t seeds) {
  ExperimentConfig c;
  c.name = "lower_bound_health";
  c.env.kind = clipped ? EnvKind::ClippedHypercube : EnvKind::Hypercube;
  c.env.d = d;
  c.learner.kind = LearnerKind::DynamicMeta;
  c.comparator.kind = ComparatorKind::Aligned;
  c.horizons = {64 * d};
  c.seed_count = seeds;
  c.base_seed = 4000;
  return c;
}

CheckResult static_scaling(const ExperimentScale& scale) {
  const auto r = sweep(static_scaling_config(scale.seeds), scale.threads);
  std::ostringstream os;
  for (const auto& a : r.aggregates) os << "T=" << a.T << " mean=" << a.mean << " ";
  if (r.fit.degenerate) {
    os << "fit degenerate: " << r.fit.reason;
    return {"static_sqrtT_scaling", false, os.str()};
  }
  os << "slope=" << r.fit.slope << " r2=" << r.fit.r2;
  return {"static_sqrtT_scaling", r.fit.slope >= 0.4 && r.fit.slope <= 0.6, os.str()};
}

CheckResult path_length_scaling(const ExperimentScale& scale) {
  std::vector<double> P, mean;
  std::ostringstream os;
  for (std::size_t switches : {1, 4, 16, 64}) {
    const auto trials = run_all(path_length_config(switches, scale.seeds), scale.threads);
    double m = 0.0, p = 0.0;
    for (const auto& t : trials) {
      m += t.regret_dynamic;
      p += t.P_T;
    }
    m /= static_cast<double>(trials.size());
    p /= static_cast<double>(trials.size());
    P.push_back(p);
    mean.push_back(m);
    os << "P=" << p << " mean=" << m << " ";
  }
  const auto fit = fit_loglog(P, mean);
  if (fit.degenerate) {
    os << "fit degenerate: " << fit.reason;
    return {"dynamic_path_length_scaling", false, os.str()};
  }
  os << "slope=" << fit.slope << " r2=" << fit.r2;
  return {"dynamic_path_length_scaling", fit.slope >= 0.3 && fit.slope <= 0.7, os.str()};
}

CheckResult highprob_quantiles(const ExperimentScale& scale) {
  const auto cfg = highprob_config(scale.seeds);
  const std::size_t n = cfg.seed_count;
  std::vector<TrialSummary> trials(n);
  parallel_for(n, scale.threads, [&](std::size_t i) {
    trials[i] = run_trial(cfg, cfg.horizons.front(), trial_seed(cfg, i)).summary;
  });
  std::vector<double> regrets;
  std::size_t grad_violations = 0;
  for (const auto& t : trials) {
    regrets.push_back(t.regret_dynamic);
    if (!within(t.max_penalty_gradient, t.penalty_bound_H)) ++grad_violations;
  }
  const double q50 = quantile(regrets, 0.5);
  const double q95 = quantile(regrets, 0.95);
  const bool ok = q50 > 0.0 && q95 <= 3.0 * q50 && grad_violations == 0;
  std::ostringstream os;
  os << n << " seeds: median=" << q50 << " q95=" << q95 << " ratio=" << q95 / q50 << ", grad-bound violations "
     << grad_violations;
  return {"highprob_quantile_stability", ok, os.str()};
}

CheckResult lower_bound_health(const ExperimentScale& scale) {
  std::ostringstream os;
  bool ok = true;
  for (std::size_t d : {2, 8}) {
    const std::size_t T = 64 * d;
    // Second moment of the unclipped losses.
    {
      auto inst = hypercube_env(d, T, RngStream(RngStream::derive(5000 + d, "moment")));
      const std::size_t N = 100000;
      double s = 0.0, s2 = 0.0;
      const Vector zero(d);
      for (std::size_t i = 0; i < N; ++i) {
        const double x = inst.env->loss(i, zero).squared_norm();
        s += x;
        s2 += x * x;
      }
      const double m = s / N;
      const double se = std::sqrt((s2 / N - m * m) / N);
      const bool pass = m <= 1.0 + 3.0 * se;
      ok = ok && pass;
      os << "d=" << d << " E||l||^2=" << m << (pass ? "" : " FAIL") << "; ";
    }
    // Clip frequency of the clipped variant.
    {
      auto inst = clipped_hypercube_env(d, T, RngStream(RngStream::derive(6000 + d, "clip")));
      const std::size_t N = 1000000;
      const Vector zero(d);
      for (std::size_t i = 0; i < N; ++i) inst.env->loss(i, zero);
      const double freq = static_cast<double>(inst.env->clip_count()) / N;
      const double target = 1.0 / (8.0 * T);
      const double limit = target + 5.0 * std::sqrt(target * (1.0 - target) / N);
      const bool pass = freq <= limit;
      ok = ok && pass;
      os << "clip freq=" << freq << " limit=" << limit << (pass ? "" : " FAIL") << "; ";
    }
    // Regret floor of the full stack.
    {
      const auto trials = run_all(lower_bound_config(d, true, scale.seeds), scale.threads);
      double m = 0.0;
      for (const auto& t : trials) m += t.regret_dynamic;
      m /= static_cast<double>(trials.size());
      const double floor = 0.05 * std::sqrt(static_cast<double>(d * T));
      const bool pass = m >= floor;
      ok = ok && pass;
      os << "mean regret=" << m << " floor=" << floor << (pass ? "" : " FAIL") << "; ";
    }
  }
  return {"lower_bound_env_health", ok, os.str()};
}

}  // namespace pablo::checks

namespace pablo {

std::vector<CheckResult> run_check_suite() {
  using namespace checks;
  return {
      unbiasedness(1000, 1),
      second_moment(1000, 1),
      estimator_norm_bounds(10000, 1),
      base_certificate(200, 256, 1),
      meta_certificate(50, 256, 1),
      composite_suite(500, 100, 1),
      sum_inequalities(500, 1),
      clipped_env_bound(100000, 1),
      run_determinism(),
      csv_round_trip(),
  };
}

}  // namespace pablo
