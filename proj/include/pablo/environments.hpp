#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "pablo/core.hpp"
#include "pablo/rng.hpp"

namespace pablo {

/// Loss generator. `loss` is called exactly once per round, in order, with
/// the point the learner played; only adaptive environments look at it.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t dim() const = 0;
  virtual Vector loss(std::size_t t, const Vector& played) = 0;

  // Unit comparator -sgn(theta_t)/sqrt(d) for hypercube-type instances.
  virtual std::optional<Vector> aligned_comparator(std::size_t /*t*/) const { return std::nullopt; }
  // Rounds whose loss was zeroed by clipping.
  virtual std::size_t clip_count() const { return 0; }
};

/// Oblivious sequence, cycled when shorter than the horizon.
class FixedSequenceEnv final : public Environment {
 public:
  explicit FixedSequenceEnv(std::vector<Vector> losses);
  std::size_t dim() const override { return losses_.front().dim(); }
  Vector loss(std::size_t t, const Vector& played) override;

 private:
  std::vector<Vector> losses_;
};

std::unique_ptr<Environment> zero_env(std::size_t d);

/// l_t = theta + sigma * N(0, I). With a clip radius the loss is replaced by
/// zero whenever ||l_t|| exceeds it.
class StochasticEnv final : public Environment {
 public:
  StochasticEnv(Vector theta, double sigma, std::optional<double> clip_radius, RngStream noise);
  std::size_t dim() const override { return theta_.dim(); }
  Vector loss(std::size_t t, const Vector& played) override;
  std::optional<Vector> aligned_comparator(std::size_t t) const override;
  std::size_t clip_count() const override { return clips_; }

  const Vector& theta() const noexcept { return theta_; }
  double sigma() const noexcept { return sigma_; }

 private:
  Vector theta_;
  double sigma_;
  std::optional<double> clip_;
  RngStream noise_;
  std::size_t clips_ = 0;
};

/// Piecewise-stationary hypercube: the horizon is split into `segments`
/// nearly equal blocks and the mean alternates theta, -theta, theta, ...
class PiecewiseHypercubeEnv final : public Environment {
 public:
  PiecewiseHypercubeEnv(Vector theta, std::size_t horizon, std::size_t segments, double sigma,
                        std::optional<double> clip_radius, RngStream noise);
  std::size_t dim() const override { return theta_.dim(); }
  Vector loss(std::size_t t, const Vector& played) override;
  std::optional<Vector> aligned_comparator(std::size_t t) const override;
  std::size_t clip_count() const override { return clips_; }

  std::size_t segment_of(std::size_t t) const;
  std::size_t segments() const noexcept { return segments_; }

 private:
  Vector theta_;
  std::size_t horizon_;
  std::size_t segments_;
  double sigma_;
  std::optional<double> clip_;
  RngStream noise_;
  std::size_t clips_ = 0;
};

/// l_t = G w~_t / ||w~_t||, or G e_1 at the origin.
class AdaptiveSignEnv final : public Environment {
 public:
  AdaptiveSignEnv(std::size_t d, double G);
  std::size_t dim() const override { return d_; }
  Vector loss(std::size_t t, const Vector& played) override;

 private:
  std::size_t d_;
  double G_;
};

/// Uniform direction times a uniform radius in [0, G]; oblivious.
class RandomBoundedEnv final : public Environment {
 public:
  RandomBoundedEnv(std::size_t d, double G, RngStream rng);
  std::size_t dim() const override { return d_; }
  Vector loss(std::size_t t, const Vector& played) override;

 private:
  std::size_t d_;
  double G_;
  RngStream rng_;
};

class CallbackEnv final : public Environment {
 public:
  using Fn = std::function<Vector(std::size_t t, const Vector& played)>;
  CallbackEnv(std::size_t d, Fn fn);
  std::size_t dim() const override { return d_; }
  Vector loss(std::size_t t, const Vector& played) override;

 private:
  std::size_t d_;
  Fn fn_;
};

// Delta = 1 / (8 sqrt(T)).
double hypercube_delta(std::size_t horizon);

// Uniform draw from {+-Delta}^d.
Vector draw_hypercube_theta(std::size_t d, double delta, RngStream& rng);

// -sgn(theta) / sqrt(d); zero coordinates map to 0.
Vector hypercube_comparator(const Vector& theta);

// sigma^2 = (1/4) / (d + (sqrt(d) + 2 sqrt(ln(8T)))^2)
double clipped_sigma_sq(std::size_t d, std::size_t horizon);

struct HypercubeInstance {
  Vector theta;
  Vector comparator;  // u_theta
  std::unique_ptr<StochasticEnv> env;
};

/// theta from rng.child("theta"), noise from rng.child("noise").
/// Unclipped: N(0, I/(2d)) noise. Clipped: sigma^2 = clipped_sigma_sq and
/// l_t = l~_t 1{||l~_t|| <= 1}. Both need T >= 4d.
HypercubeInstance hypercube_env(std::size_t d, std::size_t horizon, const RngStream& rng);
HypercubeInstance clipped_hypercube_env(std::size_t d, std::size_t horizon, const RngStream& rng);

/// u = -(L/||L||) eps exp(||L||^2 / (G^2 T)), L = sum of losses; 0 when L = 0.
Vector fenchel_comparator(const std::vector<Vector>& losses, double eps, double G, std::size_t horizon);

}  // namespace pablo
