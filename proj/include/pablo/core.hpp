#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pablo {

/// Error raised on a violated precondition. `module()` names the component
/// that rejected the input ("core", "olo", "harness", ...).
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Dense vector in R^d. Every component is finite; construction and the
/// checked mutators enforce it.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0);
  Vector(std::initializer_list<double> values);
  explicit Vector(std::vector<double> values);

  static Vector unit(std::size_t dim, std::size_t axis, double scale = 1.0);

  std::size_t dim() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& raw() const noexcept { return data_; }

  double norm() const;
  double squared_norm() const;
  bool is_zero() const noexcept;
  bool all_finite() const noexcept;

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double scale);
  // this += scale * other
  Vector& axpy(double scale, const Vector& other);

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

Vector operator+(Vector lhs, const Vector& rhs);
Vector operator-(Vector lhs, const Vector& rhs);
Vector operator*(double scale, Vector v);
Vector operator*(Vector v, double scale);

double dot(const Vector& a, const Vector& b);
double distance(const Vector& a, const Vector& b);

// Throws Error(module, ...) when the dimensions differ.
void require_same_dim(const Vector& a, const Vector& b, const char* module);

/// A comparator sequence u_1..u_T. A constant sequence encodes a static
/// comparator.
class ComparatorSequence {
 public:
  ComparatorSequence() = default;
  explicit ComparatorSequence(std::vector<Vector> points);
  static ComparatorSequence constant(const Vector& u, std::size_t length);

  std::size_t length() const noexcept { return points_.size(); }
  std::size_t dim() const noexcept { return points_.empty() ? 0 : points_.front().dim(); }
  const Vector& operator[](std::size_t t) const { return points_[t]; }
  const Vector& back() const { return points_.back(); }
  const std::vector<Vector>& points() const noexcept { return points_; }

 private:
  std::vector<Vector> points_;
};

/// Online linear optimization learner. `predict` returns the point for the
/// current round and depends only on gradients passed to earlier `update`
/// calls; `update` advances exactly one round.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;
  virtual std::size_t dim() const = 0;
  virtual Vector predict() const = 0;
  virtual void update(const Vector& gradient) = 0;
  virtual void reset() = 0;
};

// Sum_{t>=2} ||u_t - u_{t-1}||.
double path_length(const ComparatorSequence& u);

// Number of t >= 2 with u_t != u_{t-1}, compared componentwise and exactly.
std::size_t switch_count(const ComparatorSequence& u);

struct LinearithmicMetrics {
  double phi_T = 0.0;    // ||u_T|| ln(||u_T|| T / eps + 1)
  double path_phi = 0.0; // sum ||du_t|| ln(4 T^3 ||du_t|| / eps + 1)
};

LinearithmicMetrics linearithmic_metrics(const ComparatorSequence& u, double eps_budget,
                                         std::size_t horizon);

// Phi(x, lambda) = x ln(lambda x + 1).
inline double phi_weight(double x, double lambda) { return x * std::log1p(lambda * x); }

// max_t ||u_t||.
double max_norm(const ComparatorSequence& u);

// ln_+(x) = max(ln x, 0).
double log_plus(double x);

}  // namespace pablo
