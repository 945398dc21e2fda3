#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cheaptalk {

// A point in source units (m, u, x, y).
using Point = std::vector<double>;

// Constant misalignment between encoder and decoder objectives.
class BiasVector {
 public:
  BiasVector() = default;
  explicit BiasVector(std::vector<double> coords);

  std::span<const double> coords() const { return coords_; }
  std::size_t size() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  double norm_sq() const;
  bool is_zero() const;

 private:
  std::vector<double> coords_;
};

// {m : (m - anchor)^T normal = 0}
struct Hyperplane {
  Point normal;
  Point anchor;

  // Signed value (m - anchor)^T normal; zero exactly on the plane.
  double evaluate(std::span<const double> m) const;
};

// K decoder actions of common dimension n, stored row-major.
class ActionSet {
 public:
  ActionSet() = default;
  // Coincident actions (within merge_tol in sup norm) are merged keeping the first.
  explicit ActionSet(const std::vector<Point>& actions, double merge_tol = 0.0);
  ActionSet(std::size_t dimension, std::vector<double> flat);

  std::size_t size() const { return dimension_ == 0 ? 0 : flat_.size() / dimension_; }
  std::size_t dimension() const { return dimension_; }
  bool empty() const { return flat_.empty(); }
  std::span<const double> operator[](std::size_t i) const {
    return {flat_.data() + i * dimension_, dimension_};
  }
  std::span<double> mutable_action(std::size_t i) { return {flat_.data() + i * dimension_, dimension_}; }
  std::span<const double> flat() const { return flat_; }
  std::vector<Point> to_points() const;

 private:
  std::size_t dimension_ = 0;
  std::vector<double> flat_;
};

double encoder_cost(std::span<const double> m, std::span<const double> u, const BiasVector& b);
double decoder_cost(std::span<const double> m, std::span<const double> u);

// Positive iff the encoder strictly prefers u_first over u_second at m.
double h_value(std::span<const double> m, std::span<const double> u_first,
               std::span<const double> u_second, const BiasVector& b);

// Indifference plane between two actions; u_first's side is {evaluate >= 0}.
Hyperplane indifference_hyperplane(std::span<const double> u_first,
                                   std::span<const double> u_second, const BiasVector& b);

// ||u_b - u_a||^2 - 2|(u_b - u_a)^T b|; nonnegative iff the pair can coexist at equilibrium.
double geo_slack(std::span<const double> u_a, std::span<const double> u_b, const BiasVector& b);

// Position of the indifference plane along u_a + lambda (u_b - u_a).
double lambda_bar(std::span<const double> u_a, std::span<const double> u_b, const BiasVector& b);

// Pairwise condition in the 2D decoupled coordinates, bias b_tilde on the second axis.
double g_slack_transformed(std::span<const double> y_a, std::span<const double> y_b,
                           double b_tilde);

// Smallest index minimising encoder_cost(m, u_i, b). Zero-based.
std::size_t assign_action(std::span<const double> m, const ActionSet& actions,
                          const BiasVector& b);

// Minimum geo_slack over all unordered pairs (+inf for a single action).
double min_pairwise_geo_slack(const ActionSet& actions, const BiasVector& b);

}  // namespace cheaptalk
