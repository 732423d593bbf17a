#pragma once

#include <cstddef>
#include <vector>

#include "pablo/core.hpp"

namespace pablo {

enum class Domain { FullSpace, NonNegativeHalfLine };

/// Hyperparameters of the dynamic mirror-descent base learner with
/// regularizer psi(w) = (k/eta) int_0^{||w - w1||} ln(x/alpha + 1) dx.
struct DynamicBaseParams {
  double alpha = 1.0;  // units of ||w||
  double gamma = 1.0;  // units of ||g||
  double eta = 1.0;    // step size, <= 1/G
  double k = 4.0;
  double G = 1.0;      // gradient-norm bound
  Vector anchor;       // w_1
};

// alpha = eps/T, gamma = G/T, k = 4, anchor 0.
DynamicBaseParams tuned_base_params(std::size_t dim, double eps_budget, double G, std::size_t horizon,
                                    double eta);

// Relative slack on the ||g|| <= G check, absorbing rounding in callers
// whose bound is attained exactly.
inline constexpr double kGradientSlack = 1e-9;

// Mirror of w~ onto the domain: identity on R^d, max(w~, 0) on [0, inf).
Vector base_project(const Vector& candidate, Domain domain);

class DynamicBase final : public OnlineLearner {
 public:
  explicit DynamicBase(DynamicBaseParams params, Domain domain = Domain::FullSpace);

  std::size_t dim() const override { return params_.anchor.dim(); }
  Vector predict() const override { return w_; }
  void update(const Vector& gradient) override;
  void reset() override { w_ = params_.anchor; }

  const DynamicBaseParams& params() const noexcept { return params_; }
  Domain domain() const noexcept { return domain_; }

  // psi'(r) = (k/eta) ln(r/alpha + 1)
  double dual_magnitude(double radius) const;

 private:
  DynamicBaseParams params_;
  Domain domain_;
  Vector w_;
};

// {min(2^i / (G T), 1/G) : i = 0..floor(log2 T)} with saturated duplicates dropped.
std::vector<double> step_size_grid(double G, std::size_t horizon);

struct MetaParams {
  std::size_t dim = 1;
  double eps_budget = 1.0;
  double G = 1.0;
  std::size_t horizon = 1;
};

/// Sum of tuned base learners over the step-size grid.
class DynamicMeta final : public OnlineLearner {
 public:
  explicit DynamicMeta(const MetaParams& params);

  std::size_t dim() const override { return params_.dim; }
  Vector predict() const override;
  void update(const Vector& gradient) override;
  void reset() override;

  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<DynamicBase>& bases() const noexcept { return bases_; }

 private:
  MetaParams params_;
  std::vector<double> grid_;
  std::vector<DynamicBase> bases_;
};

/// Tuned dynamic-regret certificate for a single base learner:
/// G(M + eps) + 8[Phi(||u_T - w1||, T/eps) + P^Phi(4T^3/eps)]/(2 eta)
///   + (eta/2) sum ||g_t||^2 ||u_t - w1||,
/// with eps = alpha T and T the number of gradients. Valid when the params
/// come from tuned_base_params with 1/(GT) <= eta <= 1/G.
double base_regret_bound(const ComparatorSequence& u, const std::vector<Vector>& grads,
                      const DynamicBaseParams& params);

/// Untuned form, valid for any eta <= 1/G, k >= 4 and any prefix length:
/// k[Phi(||u_T - w1||, 1/alpha) + P^Phi(k/(eta alpha gamma))]/eta
///   + (eta/2) sum ||g||^2 ||u_t - w1|| + gamma sum ||u_t - w1|| + eta alpha sum ||g||^2.
double base_regret_bound_general(const ComparatorSequence& u, const std::vector<Vector>& grads,
                              const DynamicBaseParams& params);

/// Certificate for DynamicMeta:
/// 4G(|S| eps + M + Phi_T + P^Phi) + 2 sqrt(2 (Phi_T + P^Phi) sum ||g_t||^2 ||u_t||).
double meta_regret_bound(const ComparatorSequence& u, const std::vector<Vector>& grads, double eps_budget,
                       double G, std::size_t grid_size);

// sum_t <g_t, w_t - u_t>
double linear_regret(const std::vector<Vector>& grads, const std::vector<Vector>& iterates,
                     const ComparatorSequence& u);

}  // namespace pablo
