#include "pablo/composite.hpp"

#include <algorithm>
#include <cmath>

namespace pablo {

namespace {

void validate_component(const HuberComponent& comp) {
  if (!(comp.c >= 0.0) || !std::isfinite(comp.c)) throw Error("composite", "c must be nonnegative");
  if (!(comp.alpha > 0.0)) throw Error("composite", "alpha must be positive");
  if (!(comp.p >= 1.0)) throw Error("composite", "p must be at least 1");
  if (!(comp.running_sum >= 0.0)) throw Error("composite", "running sum must be nonnegative");
}

// (alpha^p + S)^{1 - 1/p}
long double denominator(long double alpha, long double p, long double sum) {
  return std::pow(std::pow(alpha, p) + sum, 1.0L - 1.0L / p);
}

// g_j(r) with the current round's r^p included in the denominator.
long double slope(long double r, const HuberComponent& comp) {
  if (comp.c == 0.0 || r <= 0.0L) return 0.0L;
  const long double p = comp.p;
  const long double num = comp.c * p * std::pow(r, p - 1.0L);
  return num / denominator(comp.alpha, p, comp.running_sum + std::pow(r, p));
}

long double h_map(long double r, long double y_eta, const CompositePenalty& pen) {
  return r + y_eta * (slope(r, pen.first) + slope(r, pen.second));
}

}  // namespace

double huber_value(double w_norm, double center_norm, const HuberComponent& comp) {
  validate_component(comp);
  if (!(w_norm >= 0.0) || !(center_norm >= 0.0)) throw Error("composite", "norms must be nonnegative");
  if (comp.c == 0.0) return 0.0;
  const long double p = comp.p;
  const long double den = denominator(comp.alpha, p, comp.running_sum);
  long double v;
  if (w_norm <= center_norm)
    v = comp.c * std::pow(static_cast<long double>(w_norm), p) / den;
  else
    v = comp.c * (p * w_norm - (p - 1.0L) * center_norm) * std::pow(static_cast<long double>(center_norm), p - 1.0L) /
        den;
  return static_cast<double>(v);
}

double huber_grad_coeff(double r, const HuberComponent& comp, double sum_excluding_current) {
  validate_component(comp);
  if (!(r >= 0.0)) throw Error("composite", "radius must be nonnegative");
  HuberComponent c = comp;
  c.running_sum = sum_excluding_current;
  return static_cast<double>(slope(r, c));
}

double CompositePenalty::grad_coeff(double r) const {
  return huber_grad_coeff(r, first, first.running_sum) + huber_grad_coeff(r, second, second.running_sum);
}

void CompositePenalty::commit(double r) {
  first.running_sum += std::pow(r, first.p);
  second.running_sum += std::pow(r, second.p);
}

double fixed_point_map(double r, double y, double eta, const CompositePenalty& penalty) {
  return static_cast<double>(h_map(r, static_cast<long double>(y) * eta, penalty));
}

FixedPointSolution solve_fixed_point(const Vector& x, double y, double eta, const CompositePenalty& penalty) {
  if (!(y >= 0.0)) throw Error("composite", "scale y must be nonnegative");
  if (!(eta > 0.0)) throw Error("composite", "eta must be positive");
  validate_component(penalty.first);
  validate_component(penalty.second);

  const double target = x.norm();
  FixedPointSolution out{Vector(x.dim()), 0.0, 0.0, 0};
  if (target == 0.0) return out;
  const long double y_eta = static_cast<long double>(y) * eta;
  if (y_eta == 0.0L || penalty.gradient_bound() == 0.0) {
    out.point = x;
    out.radius = target;
    return out;
  }

  // A p = 1 component has slope c on (0, inf): when it alone outweighs ||x||
  // the subgradient condition holds at 0.
  long double jump = 0.0L;
  for (const auto* comp : {&penalty.first, &penalty.second})
    if (comp->p == 1.0) jump += comp->c;
  if (y_eta * jump >= target) return out;

  long double lo = 0.0L;
  long double hi = target;
  int it = 0;
  for (; it < kMaxBisectionIterations; ++it) {
    const long double mid = 0.5L * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (h_map(mid, y_eta, penalty) < target)
      lo = mid;
    else
      hi = mid;
  }

  // Pick whichever double-rounded endpoint leaves the smaller residual.
  double best_r = 0.0;
  long double best_res = INFINITY;
  for (long double cand : {lo, hi}) {
    const double r = static_cast<double>(cand);
    const long double res = std::fabs(h_map(r, y_eta, penalty) - static_cast<long double>(target));
    if (res < best_res) {
      best_res = res;
      best_r = r;
    }
  }
  const double tol = kFixedPointTolerance * std::max(1.0, target);
  if (!(best_res <= tol))
    throw Error("composite", "fixed-point solve missed tolerance after " + std::to_string(it) + " iterations");
  out.radius = best_r;
  out.residual = static_cast<double>(best_res);
  out.iterations = it;
  out.point = (best_r / target) * x;
  return out;
}

CompositeLearner::CompositeLearner(const CompositeParams& params)
    : params_(params),
      ax_(tuned_base_params(params.dim, params.eps_budget, params.G + params.penalty.gradient_bound(),
                            params.horizon, params.eta)),
      ay_(tuned_base_params(1, params.eps_budget, params.G + params.penalty.gradient_bound(), params.horizon,
                            params.eta),
          Domain::NonNegativeHalfLine),
      penalty_(params.penalty),
      current_(params.dim) {
  validate_component(params.penalty.first);
  validate_component(params.penalty.second);
  if (!(params.G > 0.0)) throw Error("composite", "G must be positive");
  if (params.eta * (params.G + H()) > 1.0 + 1e-12) throw Error("composite", "eta must not exceed 1/(G + H)");
  solve_current();
}

Vector CompositeLearner::penalty_gradient() const {
  const double r = current_.norm();
  if (r == 0.0) return Vector(params_.dim);
  return (penalty_.grad_coeff(r) / r) * current_;
}

void CompositeLearner::update(const Vector& g) {
  require_same_dim(g, current_, "composite");
  if (g.norm() > params_.G * (1.0 + kGradientSlack))
    throw Error("composite", "gradient norm exceeds G = " + std::to_string(params_.G));

  const Vector grad_phi = penalty_gradient();
  last_grad_norm_ = grad_phi.norm();
  max_grad_norm_ = std::max(max_grad_norm_, last_grad_norm_);

  const Vector combined = g + grad_phi;
  last_scale_feedback_ = -params_.eta * dot(combined, grad_phi);
  ax_.update(combined);
  ay_.update(Vector{last_scale_feedback_});

  penalty_.commit(current_.norm());
  solve_current();
}

void CompositeLearner::solve_current() {
  const Vector x = ax_.predict();
  const auto sol = solve_fixed_point(x, ay_.predict()[0], params_.eta, penalty_);
  max_residual_ = std::max(max_residual_, sol.residual / std::max(1.0, x.norm()));
  current_ = sol.point;
}

void CompositeLearner::reset() {
  ax_.reset();
  ay_.reset();
  penalty_ = params_.penalty;
  last_grad_norm_ = max_grad_norm_ = max_residual_ = last_scale_feedback_ = 0.0;
  solve_current();
}

CompositePenalty HighProbConstants::penalty() const {
  return CompositePenalty{HuberComponent{c1, alpha1, p1, 0.0}, HuberComponent{c2, alpha2, p2, 0.0}};
}

double default_omega(double eps_budget, double delta) {
  if (!(eps_budget > 0.0)) throw Error("composite", "eps_budget must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("composite", "delta must lie in (0, 1)");
  return eps_budget / std::sqrt(std::log(16.0 / delta));
}

HighProbConstants highprob_constants(double G, double delta, std::size_t horizon, std::size_t d,
                                     double eps_budget, double omega, std::size_t grid_size) {
  if (!(G > 0.0)) throw Error("composite", "G must be positive");
  if (!(delta > 0.0 && delta <= 0.25)) throw Error("composite", "delta must lie in (0, 1/4]");
  if (horizon == 0 || d == 0 || grid_size == 0) throw Error("composite", "T, d and |S| must be positive");
  if (!(eps_budget > 0.0) || !(omega > 0.0)) throw Error("composite", "eps_budget and omega must be positive");

  const double T = static_cast<double>(horizon);
  const double dd = static_cast<double>(d);
  const double S = static_cast<double>(grid_size);
  const double root_s = std::sqrt(S);
  const double a = T + log_plus(4.0 * eps_budget * root_s / omega);
  const double b = T + log_plus(2.0 * eps_budget * root_s / omega);

  HighProbConstants k;
  k.c1 = 6.0 * G * std::sqrt(dd * S * std::log((4.0 / delta) * a * a));
  k.c2 = 72.0 * dd * G * std::log((28.0 / delta) * b * b);
  k.alpha1 = eps_budget;
  k.alpha2 = omega;
  k.p1 = 2.0;
  k.p2 = std::max(std::log(T + 1.0), 1.0);
  k.H = k.c1 * k.p1 + k.c2 * k.p2;
  k.omega = omega;
  k.eps_budget = eps_budget;
  k.delta = delta;
  k.eps_floor = omega / std::sqrt(T);
  return k;
}

HighProbMeta::HighProbMeta(const HighProbConstants& constants, double G, std::size_t horizon, std::size_t dim)
    : constants_(constants), dim_(dim), grid_(step_size_grid(G + constants.H, horizon)) {
  if (dim == 0) throw Error("composite", "dimension must be positive");
  learners_.reserve(grid_.size());
  for (double eta : grid_)
    learners_.emplace_back(CompositeParams{dim, horizon, eta, G, constants.eps_budget, constants.penalty()});
}

Vector HighProbMeta::predict() const {
  Vector sum(dim_);
  for (const auto& l : learners_) sum += l.predict();
  return sum;
}

void HighProbMeta::update(const Vector& gradient) {
  for (auto& l : learners_) l.update(gradient);
}

void HighProbMeta::reset() {
  for (auto& l : learners_) l.reset();
}

double HighProbMeta::max_penalty_gradient_norm() const {
  double m = 0.0;
  for (const auto& l : learners_) m = std::max(m, l.max_penalty_gradient_norm());
  return m;
}

double HighProbMeta::max_fixed_point_residual() const {
  double m = 0.0;
  for (const auto& l : learners_) m = std::max(m, l.max_fixed_point_residual());
  return m;
}

double comparator_penalty_bound(const ComparatorSequence& u, double c1, double alpha1, double c2,
                                double alpha2, std::size_t horizon) {
  if (u.length() == 0) throw Error("composite", "empty comparator sequence");
  double sq = 0.0;
  for (const auto& p : u.points()) sq += p.squared_norm();
  const double M = max_norm(u);
  const double e = std::exp(1.0);
  const double L = std::log(static_cast<double>(horizon) + 1.0);
  const double first = 4.0 * c1 * std::sqrt((alpha1 * alpha1 + sq) * std::log(e + e * sq / (alpha1 * alpha1)));
  const double second = 3.0 * c2 * L * L * std::max(alpha2, M) * (log_plus(3.0 * M / alpha2) + 3.0);
  return first + second;
}

}  // namespace pablo
