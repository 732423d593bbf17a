#include "pablo/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

namespace pablo {

namespace {

void require_finite(const std::vector<double>& data) {
  for (double x : data) {
    if (!std::isfinite(x)) throw Error("core", "vector component is not finite");
  }
}

}  // namespace

Vector::Vector(std::size_t dim, double fill) : data_(dim, fill) {
  if (!std::isfinite(fill)) throw Error("core", "vector component is not finite");
}

Vector::Vector(std::initializer_list<double> values) : data_(values) { require_finite(data_); }

Vector::Vector(std::vector<double> values) : data_(std::move(values)) { require_finite(data_); }

Vector Vector::unit(std::size_t dim, std::size_t axis, double scale) {
  if (axis >= dim) throw Error("core", "unit vector axis out of range");
  Vector v(dim);
  v[axis] = scale;
  return v;
}

double Vector::squared_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return s;
}

double Vector::norm() const { return std::sqrt(squared_norm()); }

bool Vector::is_zero() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return x == 0.0; });
}

bool Vector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Vector& Vector::operator+=(const Vector& other) {
  require_same_dim(*this, other, "core");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  require_same_dim(*this, other, "core");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vector& Vector::operator*=(double scale) {
  for (double& x : data_) x *= scale;
  return *this;
}

Vector& Vector::axpy(double scale, const Vector& other) {
  require_same_dim(*this, other, "core");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
  return *this;
}

Vector operator+(Vector lhs, const Vector& rhs) { return lhs += rhs; }
Vector operator-(Vector lhs, const Vector& rhs) { return lhs -= rhs; }
Vector operator*(double scale, Vector v) { return v *= scale; }
Vector operator*(Vector v, double scale) { return v *= scale; }

double dot(const Vector& a, const Vector& b) {
  require_same_dim(a, b, "core");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

double distance(const Vector& a, const Vector& b) {
  require_same_dim(a, b, "core");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

void require_same_dim(const Vector& a, const Vector& b, const char* module) {
  if (a.dim() != b.dim()) {
    throw Error(module, "dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()) + ")");
  }
}

ComparatorSequence::ComparatorSequence(std::vector<Vector> points) : points_(std::move(points)) {
  for (const auto& p : points_) require_same_dim(points_.front(), p, "core");
}

ComparatorSequence ComparatorSequence::constant(const Vector& u, std::size_t length) {
  return ComparatorSequence(std::vector<Vector>(length, u));
}

double path_length(const ComparatorSequence& u) {
  if (u.length() == 0) throw Error("core", "path_length of an empty sequence");
  double total = 0.0;
  for (std::size_t t = 1; t < u.length(); ++t) total += distance(u[t], u[t - 1]);
  return total;
}

std::size_t switch_count(const ComparatorSequence& u) {
  if (u.length() == 0) throw Error("core", "switch_count of an empty sequence");
  std::size_t switches = 0;
  for (std::size_t t = 1; t < u.length(); ++t) {
    require_same_dim(u[t], u[t - 1], "core");
    bool same = true;
    for (std::size_t i = 0; i < u[t].dim() && same; ++i) {
      same = std::bit_cast<std::uint64_t>(u[t][i]) == std::bit_cast<std::uint64_t>(u[t - 1][i]);
    }
    if (!same) ++switches;
  }
  return switches;
}

LinearithmicMetrics linearithmic_metrics(const ComparatorSequence& u, double eps_budget,
                                         std::size_t horizon) {
  if (!(eps_budget > 0.0)) throw Error("core", "eps_budget must be positive");
  if (horizon == 0) throw Error("core", "horizon must be positive");
  if (u.length() == 0) return {};
  const double T = static_cast<double>(horizon);
  LinearithmicMetrics m;
  m.phi_T = phi_weight(u.back().norm(), T / eps_budget);
  const double lambda = 4.0 * T * T * T / eps_budget;
  for (std::size_t t = 1; t < u.length(); ++t) m.path_phi += phi_weight(distance(u[t], u[t - 1]), lambda);
  return m;
}

double max_norm(const ComparatorSequence& u) {
  double m = 0.0;
  for (const auto& p : u.points()) m = std::max(m, p.norm());
  return m;
}

double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

}  // namespace pablo
