#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "pablo/core.hpp"
#include "pablo/rng.hpp"

namespace pablo {

struct PerturbationConfig {
  std::size_t d = 1;
  double eps_floor = 0.5;   // floor on ||w|| inside the isotropic scaling
  double lipschitz_G = 1.0; // ||loss|| <= G
};

void validate(const PerturbationConfig& cfg);

/// One sampled outcome s_t = sign * e_axis together with the eigenvalue
/// lambda of H_t along that axis.
struct PerturbationDraw {
  std::size_t axis = 0;
  double sign = 1.0;
  double lambda = 1.0;
};

// Outcome index k in [0, 2d) maps to axis k / 2, sign + for even k.
PerturbationDraw draw_from_index(std::uint64_t index, double lambda);

// lambda = 1 / (d * max(||w||^2, eps_floor^2)).
double make_lambda(const Vector& w, const PerturbationConfig& cfg);

// w + lambda^{-1/2} * sign * e_axis.
Vector perturb(const Vector& w, const PerturbationDraw& draw);

// d * sqrt(lambda) * sign * observed * e_axis.
Vector estimate_loss(double observed, const PerturbationDraw& draw, std::size_t d);

struct WeightedEstimate {
  PerturbationDraw draw;
  Vector estimate;
  double probability = 0.0;
};

/// All 2d equally likely estimates for the isotropic H_t.
std::vector<WeightedEstimate> enumerate_estimates(const Vector& w, const Vector& loss,
                                                  const PerturbationConfig& cfg);

/// Same enumeration for a diagonal H_t = diag(eigenvalues) in the standard
/// basis.
std::vector<WeightedEstimate> enumerate_estimates_diagonal(const Vector& w, const Vector& loss,
                                                           const std::vector<double>& eigenvalues);

// Probability-weighted mean of the estimates and of their squared norms.
Vector enumeration_mean(const std::vector<WeightedEstimate>& table);
double enumeration_second_moment(const std::vector<WeightedEstimate>& table);

/// Everything one PABLO round produced.
struct RoundRecord {
  Vector w;          // learner prediction
  PerturbationDraw draw;
  Vector played;     // perturbed point sent to the environment
  double observed = 0.0;
  Vector estimate;   // loss estimate sent back to the learner
};

// Scalar bandit feedback <loss_t, played>. The true loss stays with the caller.
using FeedbackFn = std::function<double(const Vector& played)>;

// Runs one round with outcome `outcome_index` in [0, 2d).
RoundRecord pablo_round(OnlineLearner& learner, const FeedbackFn& feedback,
                        const PerturbationConfig& cfg, std::uint64_t outcome_index);

// Runs one round, drawing the outcome uniformly with a single rng call.
RoundRecord pablo_round(OnlineLearner& learner, const FeedbackFn& feedback,
                        const PerturbationConfig& cfg, RngStream& rng);

}  // namespace pablo
