#include "cheaptalk/transforms.hpp"

#include <cmath>

#include "cheaptalk/errors.hpp"

namespace cheaptalk {

namespace {

Eigen::VectorXd to_eigen(std::span<const double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

LinearTransform orthonormal(std::string kind, Eigen::MatrixXd forward, const BiasVector* b) {
  LinearTransform t;
  t.kind = std::move(kind);
  t.inverse = forward.transpose();
  t.forward = std::move(forward);
  t.transformed_bias = b ? Eigen::VectorXd(t.forward * to_eigen(b->coords()))
                         : Eigen::VectorXd::Zero(t.forward.rows());
  t.scale = 1.0;
  t.orthonormal = true;
  return t;
}

// Householder reflection I - 2 v v^T / v^T v with v = e_n - b_hat. It is symmetric and
// involutive, so its last row is b_hat and it maps b_hat to e_n.
Eigen::MatrixXd reflection_to_last_axis(const Eigen::VectorXd& b_hat) {
  const Eigen::Index n = b_hat.size();
  Eigen::VectorXd v = -b_hat;
  v[n - 1] += 1.0;
  const double vv = v.squaredNorm();
  if (vv < 1e-300) return Eigen::MatrixXd::Identity(n, n);
  return Eigen::MatrixXd::Identity(n, n) - (2.0 / vv) * v * v.transpose();
}

}  // namespace

LinearTransform identity_transform(std::size_t n) {
  if (n == 0) throw InvalidArgument("transform dimension must be positive");
  const auto size = static_cast<Eigen::Index>(n);
  return orthonormal("identity", Eigen::MatrixXd::Identity(size, size), nullptr);
}

LinearTransform pair_transform_2d(const BiasVector& b) {
  if (b.size() != 2) throw DimensionMismatch(2, b.size());
  if (b.is_zero()) throw InvalidArgument("pair transform needs a nonzero bias");
  const double b1 = b[0];
  const double b2 = b[1];
  const double b_tilde = b1 * b1 + b2 * b2;
  LinearTransform t;
  t.kind = "pair2d";
  t.forward.resize(2, 2);
  t.forward << -b2, b1, b1, b2;
  t.inverse = t.forward / b_tilde;
  t.transformed_bias.resize(2);
  t.transformed_bias << 0.0, b_tilde;
  t.scale = b_tilde;
  t.orthonormal = false;
  return t;
}

LinearTransform helmert_transform(std::size_t n) {
  if (n < 2) throw InvalidArgument("Helmert transform needs n >= 2");
  const auto size = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(size, size);
  for (Eigen::Index k = 1; k < size; ++k) {
    const double norm = std::sqrt(static_cast<double>(k) * static_cast<double>(k + 1));
    for (Eigen::Index j = 0; j < k; ++j) h(k - 1, j) = 1.0 / norm;
    h(k - 1, k) = -static_cast<double>(k) / norm;
  }
  h.row(size - 1).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  return orthonormal("helmert", std::move(h), nullptr);
}

LinearTransform helmert_transform(const BiasVector& b) {
  LinearTransform t = helmert_transform(b.size());
  t.transformed_bias = t.forward * to_eigen(b.coords());
  return t;
}

LinearTransform bias_aligning_transform(const BiasVector& b) {
  const std::size_t n = b.size();
  if (n < 2) throw InvalidArgument("bias aligning transform needs n >= 2");
  if (b.is_zero()) throw InvalidArgument("bias aligning transform needs a nonzero bias");
  const double norm = std::sqrt(b.norm_sq());
  const auto size = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd f(size, size);

  const double planar = std::hypot(b[0], b[1]);
  if (n == 2) {
    f << b[1] / norm, -b[0] / norm, b[0] / norm, b[1] / norm;
  } else if (n == 3 && planar > 1e-12 * norm) {
    // Closed form from the three-dimensional decoupling construction.
    f << b[1] / planar, -b[0] / planar, 0.0,                          //
        b[0] * b[2] / (norm * planar), b[1] * b[2] / (norm * planar), -planar / norm,  //
        b[0] / norm, b[1] / norm, b[2] / norm;
  } else {
    f = reflection_to_last_axis(to_eigen(b.coords()) / norm);
  }
  LinearTransform t = orthonormal("bias_aligning", std::move(f), &b);
  // Exact by construction; avoids round-off leaking bias into the unbiased coordinates.
  t.transformed_bias.setZero();
  t.transformed_bias[size - 1] = norm;
  return t;
}

Point apply(const LinearTransform& t, std::span<const double> p, Direction direction) {
  if (p.size() != t.dimension()) throw DimensionMismatch(t.dimension(), p.size());
  const Eigen::MatrixXd& m = direction == Direction::forward ? t.forward : t.inverse;
  Eigen::VectorXd out = m * to_eigen(p);
  return Point(out.data(), out.data() + out.size());
}

}  // namespace cheaptalk
