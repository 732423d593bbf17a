#include "pablo/olo.hpp"

#include <algorithm>
#include <cmath>

namespace pablo {

DynamicBaseParams tuned_base_params(std::size_t dim, double eps_budget, double G, std::size_t horizon,
                                    double eta) {
  if (horizon == 0) throw Error("olo", "horizon must be positive");
  const double T = static_cast<double>(horizon);
  return DynamicBaseParams{eps_budget / T, G / T, eta, 4.0, G, Vector(dim)};
}

Vector base_project(const Vector& candidate, Domain domain) {
  switch (domain) {
    case Domain::FullSpace:
      return candidate;
    case Domain::NonNegativeHalfLine:
      if (candidate.dim() != 1) throw Error("olo", "half-line domain is one-dimensional");
      return Vector{std::max(candidate[0], 0.0)};
  }
  throw Error("olo", "unsupported domain");
}

DynamicBase::DynamicBase(DynamicBaseParams params, Domain domain)
    : params_(std::move(params)), domain_(domain), w_(params_.anchor) {
  const auto& p = params_;
  if (p.anchor.empty()) throw Error("olo", "anchor must have positive dimension");
  if (!(p.alpha > 0.0) || !(p.gamma > 0.0) || !(p.eta > 0.0) || !(p.G > 0.0))
    throw Error("olo", "alpha, gamma, eta and G must be positive");
  if (!(p.k >= 4.0)) throw Error("olo", "k must be at least 4");
  if (p.eta * p.G > 1.0 + 1e-12) throw Error("olo", "eta must not exceed 1/G");
  if (domain == Domain::NonNegativeHalfLine && !(p.anchor.dim() == 1 && p.anchor[0] == 0.0))
    throw Error("olo", "half-line domain needs the scalar anchor 0");
}

double DynamicBase::dual_magnitude(double radius) const {
  return (params_.k / params_.eta) * std::log1p(radius / params_.alpha);
}

void DynamicBase::update(const Vector& g) {
  require_same_dim(g, w_, "olo");
  const auto& p = params_;
  const double g_sq = g.squared_norm();
  if (std::sqrt(g_sq) > p.G * (1.0 + kGradientSlack))
    throw Error("olo", "gradient norm " + std::to_string(std::sqrt(g_sq)) + " exceeds G = " +
                           std::to_string(p.G));

  // theta = grad psi(w_t) - g; the first term vanishes at the anchor.
  Vector offset = w_ - p.anchor;
  const double radius = offset.norm();
  Vector theta = -1.0 * g;
  if (radius > 0.0) theta.axpy(dual_magnitude(radius) / radius, offset);

  const double theta_norm = theta.norm();
  Vector next = p.anchor;
  if (theta_norm > 0.0) {
    const double exponent = (p.eta / p.k) * (theta_norm - 0.5 * p.eta * g_sq - p.gamma);
    const double magnitude = p.alpha * std::max(std::expm1(exponent), 0.0);
    if (!std::isfinite(magnitude)) throw Error("olo", "iterate overflow");
    if (magnitude > 0.0) next.axpy(magnitude / theta_norm, theta);
  }
  w_ = base_project(next, domain_);
}

std::vector<double> step_size_grid(double G, std::size_t horizon) {
  if (!(G > 0.0)) throw Error("olo", "G must be positive");
  if (horizon == 0) throw Error("olo", "horizon must be positive");
  const double T = static_cast<double>(horizon);
  const double cap = 1.0 / G;
  std::vector<double> grid;
  const auto top = static_cast<int>(std::floor(std::log2(T)));
  for (int i = 0; i <= top; ++i) {
    const double eta = std::min(std::ldexp(1.0, i) / (G * T), cap);
    if (!grid.empty() && eta <= grid.back()) continue;
    grid.push_back(eta);
  }
  return grid;
}

DynamicMeta::DynamicMeta(const MetaParams& params) : params_(params), grid_(step_size_grid(params.G, params.horizon)) {
  if (params.dim == 0) throw Error("olo", "dimension must be positive");
  if (!(params.eps_budget > 0.0)) throw Error("olo", "eps_budget must be positive");
  bases_.reserve(grid_.size());
  for (double eta : grid_)
    bases_.emplace_back(tuned_base_params(params.dim, params.eps_budget, params.G, params.horizon, eta));
}

Vector DynamicMeta::predict() const {
  Vector sum(params_.dim);
  for (const auto& b : bases_) sum += b.predict();
  return sum;
}

void DynamicMeta::update(const Vector& gradient) {
  for (auto& b : bases_) b.update(gradient);
}

void DynamicMeta::reset() {
  for (auto& b : bases_) b.reset();
}

namespace {

void require_matching(const ComparatorSequence& u, const std::vector<Vector>& grads) {
  if (u.length() != grads.size()) throw Error("olo", "comparator and gradient sequences differ in length");
  if (grads.empty()) throw Error("olo", "empty gradient sequence");
}

}  // namespace

double base_regret_bound(const ComparatorSequence& u, const std::vector<Vector>& grads,
                      const DynamicBaseParams& params) {
  require_matching(u, grads);
  const std::size_t T = grads.size();
  const double Td = static_cast<double>(T);
  const double eps = params.alpha * Td;
  const Vector& w1 = params.anchor;

  double M = 0.0;
  double variance = 0.0;
  double path_phi = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double r = distance(u[t], w1);
    M = std::max(M, r);
    variance += grads[t].squared_norm() * r;
    if (t > 0) path_phi += phi_weight(distance(u[t], u[t - 1]), 4.0 * Td * Td * Td / eps);
  }
  const double phi_T = phi_weight(distance(u.back(), w1), Td / eps);
  return params.G * (M + eps) + 8.0 * (phi_T + path_phi) / (2.0 * params.eta) + 0.5 * params.eta * variance;
}

double base_regret_bound_general(const ComparatorSequence& u, const std::vector<Vector>& grads,
                              const DynamicBaseParams& params) {
  require_matching(u, grads);
  const auto& p = params;
  const std::size_t T = grads.size();
  double variance = 0.0;
  double drift = 0.0;
  double grad_sq = 0.0;
  double path_phi = 0.0;
  const double lambda = p.k / (p.eta * p.alpha * p.gamma);
  for (std::size_t t = 0; t < T; ++t) {
    const double r = distance(u[t], p.anchor);
    const double g_sq = grads[t].squared_norm();
    variance += g_sq * r;
    drift += r;
    grad_sq += g_sq;
    if (t > 0) path_phi += phi_weight(distance(u[t], u[t - 1]), lambda);
  }
  const double phi_T = phi_weight(distance(u.back(), p.anchor), 1.0 / p.alpha);
  return p.k * (phi_T + path_phi) / p.eta + 0.5 * p.eta * variance + p.gamma * drift + p.eta * p.alpha * grad_sq;
}

double meta_regret_bound(const ComparatorSequence& u, const std::vector<Vector>& grads, double eps_budget,
                       double G, std::size_t grid_size) {
  require_matching(u, grads);
  const std::size_t T = grads.size();
  const auto m = linearithmic_metrics(u, eps_budget, T);
  double variance = 0.0;
  for (std::size_t t = 0; t < T; ++t) variance += grads[t].squared_norm() * u[t].norm();
  const double penalty = m.phi_T + m.path_phi;
  return 4.0 * G * (static_cast<double>(grid_size) * eps_budget + max_norm(u) + penalty) +
         2.0 * std::sqrt(2.0 * penalty * variance);
}

double linear_regret(const std::vector<Vector>& grads, const std::vector<Vector>& iterates,
                     const ComparatorSequence& u) {
  if (grads.size() != iterates.size() || grads.size() != u.length())
    throw Error("olo", "regret inputs differ in length");
  double r = 0.0;
  for (std::size_t t = 0; t < grads.size(); ++t) r += dot(grads[t], iterates[t]) - dot(grads[t], u[t]);
  return r;
}

}  // namespace pablo
