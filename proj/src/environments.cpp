#include "pablo/environments.hpp"

#include <algorithm>
#include <cmath>

namespace pablo {

namespace {

Vector gaussian(std::size_t d, double sigma, RngStream& rng) {
  Vector v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = sigma * rng.normal();
  return v;
}

void require_sigma(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error("environments", "sigma must be nonnegative");
}

void require_clip(const std::optional<double>& clip) {
  if (clip && !(*clip > 0.0)) throw Error("environments", "clip radius must be positive");
}

// Draws theta + noise and zeroes it when it leaves the clip ball.
Vector noisy(const Vector& mean, double sigma, const std::optional<double>& clip, RngStream& rng,
             std::size_t& clips) {
  Vector l = mean + gaussian(mean.dim(), sigma, rng);
  if (clip && l.norm() > *clip) {
    ++clips;
    return Vector(mean.dim());
  }
  return l;
}

}  // namespace

FixedSequenceEnv::FixedSequenceEnv(std::vector<Vector> losses) : losses_(std::move(losses)) {
  if (losses_.empty()) throw Error("environments", "fixed sequence needs at least one loss");
  for (const auto& l : losses_) require_same_dim(l, losses_.front(), "environments");
  if (losses_.front().empty()) throw Error("environments", "losses must have positive dimension");
}

Vector FixedSequenceEnv::loss(std::size_t t, const Vector&) { return losses_[t % losses_.size()]; }

std::unique_ptr<Environment> zero_env(std::size_t d) {
  if (d == 0) throw Error("environments", "dimension must be positive");
  return std::make_unique<FixedSequenceEnv>(std::vector<Vector>{Vector(d)});
}

StochasticEnv::StochasticEnv(Vector theta, double sigma, std::optional<double> clip_radius, RngStream noise)
    : theta_(std::move(theta)), sigma_(sigma), clip_(clip_radius), noise_(noise) {
  if (theta_.empty()) throw Error("environments", "theta must have positive dimension");
  require_sigma(sigma);
  require_clip(clip_);
}

Vector StochasticEnv::loss(std::size_t, const Vector&) { return noisy(theta_, sigma_, clip_, noise_, clips_); }

std::optional<Vector> StochasticEnv::aligned_comparator(std::size_t) const { return hypercube_comparator(theta_); }

PiecewiseHypercubeEnv::PiecewiseHypercubeEnv(Vector theta, std::size_t horizon, std::size_t segments,
                                             double sigma, std::optional<double> clip_radius, RngStream noise)
    : theta_(std::move(theta)), horizon_(horizon), segments_(segments), sigma_(sigma), clip_(clip_radius),
      noise_(noise) {
  if (theta_.empty()) throw Error("environments", "theta must have positive dimension");
  if (segments == 0 || segments > horizon) throw Error("environments", "need 1 <= segments <= T");
  require_sigma(sigma);
  require_clip(clip_);
}

std::size_t PiecewiseHypercubeEnv::segment_of(std::size_t t) const {
  // block j covers [floor(j T / K), floor((j+1) T / K))
  return std::min(segments_ - 1, ((t + 1) * segments_ - 1) / horizon_);
}

Vector PiecewiseHypercubeEnv::loss(std::size_t t, const Vector&) {
  const double sign = (segment_of(t) % 2 == 0) ? 1.0 : -1.0;
  return noisy(sign * theta_, sigma_, clip_, noise_, clips_);
}

std::optional<Vector> PiecewiseHypercubeEnv::aligned_comparator(std::size_t t) const {
  const double sign = (segment_of(t) % 2 == 0) ? 1.0 : -1.0;
  return hypercube_comparator(sign * theta_);
}

AdaptiveSignEnv::AdaptiveSignEnv(std::size_t d, double G) : d_(d), G_(G) {
  if (d == 0) throw Error("environments", "dimension must be positive");
  if (!(G > 0.0)) throw Error("environments", "G must be positive");
}

Vector AdaptiveSignEnv::loss(std::size_t, const Vector& played) {
  if (played.dim() != d_) throw Error("environments", "played point has the wrong dimension");
  const double n = played.norm();
  if (n == 0.0) return Vector::unit(d_, 0, G_);
  return (G_ / n) * played;
}

RandomBoundedEnv::RandomBoundedEnv(std::size_t d, double G, RngStream rng) : d_(d), G_(G), rng_(rng) {
  if (d == 0) throw Error("environments", "dimension must be positive");
  if (!(G > 0.0)) throw Error("environments", "G must be positive");
}

Vector RandomBoundedEnv::loss(std::size_t, const Vector&) {
  Vector dir = gaussian(d_, 1.0, rng_);
  const double n = dir.norm();
  const double radius = G_ * rng_.uniform();
  if (n == 0.0) return Vector(d_);
  return (radius / n) * dir;
}

CallbackEnv::CallbackEnv(std::size_t d, Fn fn) : d_(d), fn_(std::move(fn)) {
  if (d == 0) throw Error("environments", "dimension must be positive");
  if (!fn_) throw Error("environments", "empty callback");
}

Vector CallbackEnv::loss(std::size_t t, const Vector& played) {
  Vector l = fn_(t, played);
  if (l.dim() != d_) throw Error("environments", "callback returned the wrong dimension");
  return l;
}

double hypercube_delta(std::size_t horizon) {
  if (horizon == 0) throw Error("environments", "horizon must be positive");
  return 1.0 / (8.0 * std::sqrt(static_cast<double>(horizon)));
}

Vector draw_hypercube_theta(std::size_t d, double delta, RngStream& rng) {
  Vector theta(d);
  for (std::size_t i = 0; i < d; ++i) theta[i] = delta * rng.rademacher();
  return theta;
}

Vector hypercube_comparator(const Vector& theta) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(theta.dim()));
  Vector u(theta.dim());
  for (std::size_t i = 0; i < theta.dim(); ++i) u[i] = theta[i] > 0.0 ? -scale : (theta[i] < 0.0 ? scale : 0.0);
  return u;
}

double clipped_sigma_sq(std::size_t d, std::size_t horizon) {
  if (d == 0 || horizon == 0) throw Error("environments", "d and T must be positive");
  const double dd = static_cast<double>(d);
  const double s = std::sqrt(dd) + 2.0 * std::sqrt(std::log(8.0 * static_cast<double>(horizon)));
  return 0.25 / (dd + s * s);
}

namespace {

HypercubeInstance make_hypercube(std::size_t d, std::size_t horizon, const RngStream& rng, double sigma,
                                 std::optional<double> clip) {
  if (d == 0) throw Error("environments", "dimension must be positive");
  if (horizon < 4 * d) throw Error("environments", "hypercube instance needs T >= 4d");
  RngStream theta_rng = rng.child("theta");
  HypercubeInstance out;
  out.theta = draw_hypercube_theta(d, hypercube_delta(horizon), theta_rng);
  out.comparator = hypercube_comparator(out.theta);
  out.env = std::make_unique<StochasticEnv>(out.theta, sigma, clip, rng.child("noise"));
  return out;
}

}  // namespace

HypercubeInstance hypercube_env(std::size_t d, std::size_t horizon, const RngStream& rng) {
  return make_hypercube(d, horizon, rng, std::sqrt(1.0 / (2.0 * static_cast<double>(d))), std::nullopt);
}

HypercubeInstance clipped_hypercube_env(std::size_t d, std::size_t horizon, const RngStream& rng) {
  return make_hypercube(d, horizon, rng, std::sqrt(clipped_sigma_sq(d, horizon)), 1.0);
}

Vector fenchel_comparator(const std::vector<Vector>& losses, double eps, double G, std::size_t horizon) {
  if (losses.empty()) throw Error("environments", "empty loss sequence");
  if (!(eps > 0.0) || !(G > 0.0) || horizon == 0) throw Error("environments", "eps, G and T must be positive");
  Vector L(losses.front().dim());
  for (const auto& l : losses) L += l;
  const double n = L.norm();
  if (n == 0.0) return Vector(L.dim());
  const double scale = eps * std::exp(n * n / (G * G * static_cast<double>(horizon)));
  if (!std::isfinite(scale)) throw Error("environments", "fenchel comparator norm overflows");
  return (-scale / n) * L;
}

}  // namespace pablo
