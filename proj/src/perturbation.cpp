#include "pablo/perturbation.hpp"

#include <algorithm>
#include <cmath>

namespace pablo {

void validate(const PerturbationConfig& cfg) {
  if (cfg.d == 0) throw Error("perturbation", "dimension must be positive");
  if (!(cfg.eps_floor > 0.0) || !std::isfinite(cfg.eps_floor))
    throw Error("perturbation", "eps_floor must be positive");
  if (!(cfg.lipschitz_G > 0.0)) throw Error("perturbation", "lipschitz_G must be positive");
}

PerturbationDraw draw_from_index(std::uint64_t index, double lambda) {
  return PerturbationDraw{static_cast<std::size_t>(index / 2), (index % 2 == 0) ? 1.0 : -1.0, lambda};
}

double make_lambda(const Vector& w, const PerturbationConfig& cfg) {
  validate(cfg);
  if (w.dim() != cfg.d) throw Error("perturbation", "iterate dimension differs from config");
  const double floor_sq = cfg.eps_floor * cfg.eps_floor;
  return 1.0 / (static_cast<double>(cfg.d) * std::max(w.squared_norm(), floor_sq));
}

Vector perturb(const Vector& w, const PerturbationDraw& draw) {
  if (draw.axis >= w.dim()) throw Error("perturbation", "draw axis out of range");
  Vector out = w;
  out[draw.axis] += draw.sign / std::sqrt(draw.lambda);
  return out;
}

Vector estimate_loss(double observed, const PerturbationDraw& draw, std::size_t d) {
  if (!std::isfinite(observed)) throw Error("perturbation", "observed feedback is not finite");
  return Vector::unit(d, draw.axis, static_cast<double>(d) * std::sqrt(draw.lambda) * draw.sign * observed);
}

std::vector<WeightedEstimate> enumerate_estimates_diagonal(const Vector& w, const Vector& loss,
                                                           const std::vector<double>& eigenvalues) {
  require_same_dim(w, loss, "perturbation");
  const std::size_t d = w.dim();
  if (eigenvalues.size() != d) throw Error("perturbation", "need one eigenvalue per axis");
  const double p = 1.0 / (2.0 * static_cast<double>(d));
  std::vector<WeightedEstimate> table;
  table.reserve(2 * d);
  for (std::uint64_t k = 0; k < 2 * d; ++k) {
    const double lambda = eigenvalues[k / 2];
    if (!(lambda > 0.0)) throw Error("perturbation", "eigenvalues must be positive");
    const PerturbationDraw draw = draw_from_index(k, lambda);
    const double observed = dot(loss, perturb(w, draw));
    table.push_back({draw, estimate_loss(observed, draw, d), p});
  }
  return table;
}

std::vector<WeightedEstimate> enumerate_estimates(const Vector& w, const Vector& loss,
                                                  const PerturbationConfig& cfg) {
  validate(cfg);
  const double lambda = make_lambda(w, cfg);
  return enumerate_estimates_diagonal(w, loss, std::vector<double>(cfg.d, lambda));
}

Vector enumeration_mean(const std::vector<WeightedEstimate>& table) {
  if (table.empty()) throw Error("perturbation", "empty enumeration");
  Vector mean(table.front().estimate.dim());
  for (const auto& e : table) mean.axpy(e.probability, e.estimate);
  return mean;
}

double enumeration_second_moment(const std::vector<WeightedEstimate>& table) {
  double m = 0.0;
  for (const auto& e : table) m += e.probability * e.estimate.squared_norm();
  return m;
}

RoundRecord pablo_round(OnlineLearner& learner, const FeedbackFn& feedback,
                        const PerturbationConfig& cfg, std::uint64_t outcome_index) {
  if (learner.dim() != cfg.d) throw Error("perturbation", "learner dimension differs from config");
  if (outcome_index >= 2 * cfg.d) throw Error("perturbation", "outcome index out of range");
  RoundRecord rec;
  rec.w = learner.predict();
  rec.draw = draw_from_index(outcome_index, make_lambda(rec.w, cfg));
  rec.played = perturb(rec.w, rec.draw);
  rec.observed = feedback(rec.played);
  rec.estimate = estimate_loss(rec.observed, rec.draw, cfg.d);
  learner.update(rec.estimate);
  return rec;
}

RoundRecord pablo_round(OnlineLearner& learner, const FeedbackFn& feedback,
                        const PerturbationConfig& cfg, RngStream& rng) {
  return pablo_round(learner, feedback, cfg, rng.uniform_int(2 * cfg.d));
}

}  // namespace pablo
