#pragma once

#include <cstddef>
#include <vector>

#include "pablo/core.hpp"
#include "pablo/olo.hpp"

namespace pablo {

/// One Huber-like term r_t(w; c, alpha, p). `running_sum` holds
/// sum_s ||w_s||^p over the rounds committed so far.
struct HuberComponent {
  double c = 0.0;
  double alpha = 1.0;
  double p = 2.0;
  double running_sum = 0.0;
};

/// r_t at a point of norm `w_norm`, centred at the current iterate of norm
/// `center_norm`. `comp.running_sum` must already include center_norm^p.
///   ||w|| <= ||w_t||: c ||w||^p / (alpha^p + S)^{1 - 1/p}
///   ||w|| >  ||w_t||: c (p ||w|| - (p - 1) ||w_t||) ||w_t||^{p-1} / (alpha^p + S)^{1 - 1/p}
double huber_value(double w_norm, double center_norm, const HuberComponent& comp);

/// Radial slope of r_t at its centre r = ||w_t||, where the running sum
/// excludes the current round: c p r^{p-1} / (alpha^p + S_excl + r^p)^{1 - 1/p}.
/// Never exceeds c p. Zero at r = 0.
double huber_grad_coeff(double r, const HuberComponent& comp, double sum_excluding_current);

struct CompositePenalty {
  HuberComponent first;   // p = 2
  HuberComponent second;  // p = ln(T + 1)

  // c1 p1 + c2 p2
  double gradient_bound() const { return first.c * first.p + second.c * second.p; }
  // sum of both radial slopes at radius r, using the stored running sums as S_excl
  double grad_coeff(double r) const;
  void commit(double r);
};

struct FixedPointSolution {
  Vector point;
  double radius = 0.0;
  double residual = 0.0;  // |h(r) - ||x|||
  int iterations = 0;
};

inline constexpr int kMaxBisectionIterations = 200;
inline constexpr double kFixedPointTolerance = 1e-12;

/// Solves w = x - y eta grad phi_t(w) for w along x. The radius solves
/// h(r) = r + y eta sum_j g_j(r) = ||x||, h strictly increasing, by bisection
/// on [0, ||x||]. Throws when the residual misses 1e-12 max(1, ||x||).
FixedPointSolution solve_fixed_point(const Vector& x, double y, double eta, const CompositePenalty& penalty);

// h(r) above, exposed for tests.
double fixed_point_map(double r, double y, double eta, const CompositePenalty& penalty);

struct CompositeParams {
  std::size_t dim = 1;
  std::size_t horizon = 1;
  double eta = 1.0;        // <= 1/(G + H)
  double G = 1.0;          // bound on incoming gradients
  double eps_budget = 1.0; // tuning of the inner base learners
  CompositePenalty penalty;
};

/// Optimistic composite-penalty learner for one step size. The direction
/// learner runs on R^d with feedback g + grad phi; the scale learner runs on
/// [0, inf) with feedback -eta <g + grad phi, grad phi>.
class CompositeLearner final : public OnlineLearner {
 public:
  explicit CompositeLearner(const CompositeParams& params);

  std::size_t dim() const override { return params_.dim; }
  Vector predict() const override { return current_; }
  void update(const Vector& gradient) override;
  void reset() override;

  double eta() const noexcept { return params_.eta; }
  double H() const noexcept { return params_.penalty.gradient_bound(); }
  const CompositePenalty& penalty() const noexcept { return penalty_; }
  const DynamicBase& direction_learner() const noexcept { return ax_; }
  const DynamicBase& scale_learner() const noexcept { return ay_; }

  // Diagnostics over the rounds since construction or reset.
  double last_penalty_gradient_norm() const noexcept { return last_grad_norm_; }
  double max_penalty_gradient_norm() const noexcept { return max_grad_norm_; }
  // |h(r) - ||x||| / max(1, ||x||)
  double max_fixed_point_residual() const noexcept { return max_residual_; }
  double last_scale_feedback() const noexcept { return last_scale_feedback_; }

  // grad phi_t at the current iterate, before it is committed.
  Vector penalty_gradient() const;

 private:
  void solve_current();

  CompositeParams params_;
  DynamicBase ax_;
  DynamicBase ay_;
  CompositePenalty penalty_;
  Vector current_;
  double last_grad_norm_ = 0.0;
  double max_grad_norm_ = 0.0;
  double max_residual_ = 0.0;
  double last_scale_feedback_ = 0.0;
};

struct HighProbConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double p1 = 2.0;
  double p2 = 1.0;
  double H = 0.0;
  double omega = 0.0;
  double eps_budget = 0.0;
  double delta = 0.0;
  double eps_floor = 0.0;  // omega / sqrt(T), for the perturbation scaling

  CompositePenalty penalty() const;
};

// omega = eps / sqrt(ln(16 / delta))
double default_omega(double eps_budget, double delta);

/// c1 = 6G sqrt(d |S| ln((4/delta)[T + ln_+(4 eps sqrt|S| / omega)]^2))
/// c2 = 72 d G ln((28/delta)[T + ln_+(2 eps sqrt|S| / omega)]^2)
/// alpha1 = eps, alpha2 = omega, p1 = 2, p2 = max(ln(T + 1), 1).
HighProbConstants highprob_constants(double G, double delta, std::size_t horizon, std::size_t d,
                                     double eps_budget, double omega, std::size_t grid_size);

/// Sum of composite learners over {min(2^i/((G+H)T), 1/(G+H))}.
class HighProbMeta final : public OnlineLearner {
 public:
  HighProbMeta(const HighProbConstants& constants, double G, std::size_t horizon, std::size_t dim);

  std::size_t dim() const override { return dim_; }
  Vector predict() const override;
  void update(const Vector& gradient) override;
  void reset() override;

  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<CompositeLearner>& learners() const noexcept { return learners_; }
  double H() const noexcept { return constants_.H; }
  double max_penalty_gradient_norm() const;
  double max_fixed_point_residual() const;

 private:
  HighProbConstants constants_;
  std::size_t dim_;
  std::vector<double> grid_;
  std::vector<CompositeLearner> learners_;
};

/// Upper bound on sum_t phi_t(u_t) for the two-component penalty:
/// 4 c1 sqrt((a1^2 + sum ||u||^2) ln(e + e sum ||u||^2 / a1^2))
///   + 3 c2 ln^2(T+1) max(a2, M) [ln_+(3M/a2) + 3].
double comparator_penalty_bound(const ComparatorSequence& u, double c1, double alpha1, double c2,
                                double alpha2, std::size_t horizon);

}  // namespace pablo
