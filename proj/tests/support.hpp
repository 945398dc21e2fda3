#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cheaptalk/geometry.hpp"

namespace cheaptalk::testing {

// Hand-rolled generators for property tests, independent of the library's sampling code.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  bool coin() { return index(2) == 0; }

  Point point(std::size_t n, double scale = 3.0) {
    Point p(n);
    for (auto& x : p) x = uniform(-scale, scale);
    return p;
  }
  // Mostly generic values, occasionally integers so that ties and exact zeros show up.
  Point lattice_or_point(std::size_t n, double scale = 3.0) {
    if (index(4) != 0) return point(n, scale);
    Point p(n);
    for (auto& x : p) x = std::round(uniform(-scale, scale));
    return p;
  }
  BiasVector bias(std::size_t n, double scale = 2.0) { return BiasVector(point(n, scale)); }
  BiasVector nonzero_bias(std::size_t n, double scale = 2.0) {
    while (true) {
      BiasVector b = bias(n, scale);
      if (b.norm_sq() > 1e-6) return b;
    }
  }

 private:
  std::mt19937_64 engine_;
};

inline double sq(double x) { return x * x; }

inline double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace cheaptalk::testing
