#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wass {

/// Error raised for malformed input (dimension mismatch, bad weights, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Error raised when an internal solver fails on input it should handle.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point of R^d stored by value.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<double> coords) : coords_(std::move(coords)) {}
  Point(std::initializer_list<double> coords) : coords_(coords) {}

  static Point zeros(std::size_t dim) { return Point(std::vector<double>(dim, 0.0)); }

  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  double& operator[](std::size_t i) { return coords_[i]; }

  std::span<const double> coords() const noexcept { return coords_; }
  const std::vector<double>& vec() const noexcept { return coords_; }

  bool finite() const noexcept {
    for (double c : coords_)
      if (!std::isfinite(c)) return false;
    return true;
  }

  Point& operator+=(const Point& o) {
    check_same_dim(o);
    for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] += o.coords_[i];
    return *this;
  }
  Point& operator-=(const Point& o) {
    check_same_dim(o);
    for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] -= o.coords_[i];
    return *this;
  }
  Point& operator*=(double s) noexcept {
    for (double& c : coords_) c *= s;
    return *this;
  }

  friend Point operator+(Point a, const Point& b) { return a += b; }
  friend Point operator-(Point a, const Point& b) { return a -= b; }
  friend Point operator*(Point a, double s) { return a *= s; }
  friend Point operator*(double s, Point a) { return a *= s; }
  friend Point operator-(Point a) { return a *= -1.0; }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  void check_same_dim(const Point& o) const {
    if (o.dim() != dim()) throw InvalidArgument("point dimension mismatch");
  }

  std::vector<double> coords_;
};

inline double dot(const Point& a, const Point& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("point dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Point& a) { return dot(a, a); }
inline double norm(const Point& a) { return std::sqrt(norm2(a)); }

inline double dist2(const Point& a, const Point& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("point dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// (1-s) a + s b
inline Point lerp(const Point& a, const Point& b, double s) {
  if (a.dim() != b.dim()) throw InvalidArgument("point dimension mismatch");
  Point r = Point::zeros(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) r[i] = (1.0 - s) * a[i] + s * b[i];
  return r;
}

inline std::string to_string(const Point& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.dim(); ++i) {
    if (i) s += ", ";
    s += std::to_string(p[i]);
  }
  return s + ")";
}

}  // namespace wass
