#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>

#include "cheaptalk/geometry.hpp"

namespace cheaptalk {

enum class Direction { forward, inverse };

// Invertible change of variables x = forward * m, u = inverse * y.
//
// For orthonormal transforms scale is 1 and costs are preserved exactly. The 2D pair transform
// is not orthonormal: squared distances in transformed coordinates are scale times the original
// ones, and the encoder's bias becomes (0, scale).
struct LinearTransform {
  std::string kind;
  Eigen::MatrixXd forward;
  Eigen::MatrixXd inverse;
  Eigen::VectorXd transformed_bias;
  double scale = 1.0;
  bool orthonormal = true;

  std::size_t dimension() const { return static_cast<std::size_t>(forward.rows()); }
};

LinearTransform identity_transform(std::size_t n);

// x1 = b1 m2 - b2 m1, x2 = b1 m1 + b2 m2.
LinearTransform pair_transform_2d(const BiasVector& b);

// Rows k < n: (1,..,1,-k,0,..)/sqrt(k(k+1)); last row (1,..,1)/sqrt(n).
LinearTransform helmert_transform(std::size_t n);

// Helmert transform with the equal bias b = (c,..,c) attached.
LinearTransform helmert_transform(const BiasVector& b);

// Orthonormal transform whose last row is b/|b|, so that only the last coordinate is biased.
LinearTransform bias_aligning_transform(const BiasVector& b);

Point apply(const LinearTransform& t, std::span<const double> p, Direction direction);

}  // namespace cheaptalk
