#include "cheaptalk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cheaptalk/errors.hpp"

namespace cheaptalk {

namespace {

void require_same(std::size_t a, std::size_t b) {
  if (a != b) throw DimensionMismatch(a, b);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

BiasVector::BiasVector(std::vector<double> coords) : coords_(std::move(coords)) {
  if (!all_finite(coords_)) throw InvalidArgument("bias vector has non-finite entries");
}

double BiasVector::norm_sq() const {
  double s = 0.0;
  for (double c : coords_) s += c * c;
  return s;
}

bool BiasVector::is_zero() const {
  return std::all_of(coords_.begin(), coords_.end(), [](double c) { return c == 0.0; });
}

double Hyperplane::evaluate(std::span<const double> m) const {
  require_same(normal.size(), m.size());
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += (m[i] - anchor[i]) * normal[i];
  return s;
}

ActionSet::ActionSet(const std::vector<Point>& actions, double merge_tol) {
  if (actions.empty()) return;
  dimension_ = actions.front().size();
  if (dimension_ == 0) throw InvalidArgument("actions must have positive dimension");
  for (const auto& a : actions) {
    require_same(dimension_, a.size());
    if (!all_finite(a)) throw InvalidArgument("action has non-finite entries");
    bool duplicate = false;
    for (std::size_t k = 0; k < size() && !duplicate; ++k) {
      auto existing = (*this)[k];
      double dist = 0.0;
      for (std::size_t i = 0; i < dimension_; ++i) dist = std::max(dist, std::abs(existing[i] - a[i]));
      duplicate = dist <= merge_tol;
    }
    if (!duplicate) flat_.insert(flat_.end(), a.begin(), a.end());
  }
}

ActionSet::ActionSet(std::size_t dimension, std::vector<double> flat)
    : dimension_(dimension), flat_(std::move(flat)) {
  if (dimension_ == 0 || flat_.size() % dimension_ != 0)
    throw InvalidArgument("flat action storage does not match dimension");
  if (!all_finite(flat_)) throw InvalidArgument("action has non-finite entries");
}

std::vector<Point> ActionSet::to_points() const {
  std::vector<Point> out;
  out.reserve(size());
  for (std::size_t k = 0; k < size(); ++k) out.emplace_back((*this)[k].begin(), (*this)[k].end());
  return out;
}

double encoder_cost(std::span<const double> m, std::span<const double> u, const BiasVector& b) {
  require_same(m.size(), u.size());
  require_same(m.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = m[i] - u[i] - b[i];
    s += d * d;
  }
  return s;
}

double decoder_cost(std::span<const double> m, std::span<const double> u) {
  require_same(m.size(), u.size());
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = m[i] - u[i];
    s += d * d;
  }
  return s;
}

Hyperplane indifference_hyperplane(std::span<const double> u_first,
                                   std::span<const double> u_second, const BiasVector& b) {
  require_same(u_first.size(), u_second.size());
  require_same(u_first.size(), b.size());
  Hyperplane plane;
  plane.normal.resize(u_first.size());
  plane.anchor.resize(u_first.size());
  bool identical = true;
  for (std::size_t i = 0; i < u_first.size(); ++i) {
    plane.normal[i] = u_first[i] - u_second[i];
    plane.anchor[i] = 0.5 * (u_first[i] + u_second[i]) + b[i];
    identical = identical && plane.normal[i] == 0.0;
  }
  if (identical) throw InvalidArgument("indifference plane undefined for identical actions");
  return plane;
}

// c^e(m, u2) - c^e(m, u1) = 2 (m - (u1+u2)/2 - b)^T (u1 - u2), so the first action's bin is
// {h >= 0}.
double h_value(std::span<const double> m, std::span<const double> u_first,
               std::span<const double> u_second, const BiasVector& b) {
  return indifference_hyperplane(u_first, u_second, b).evaluate(m);
}

double geo_slack(std::span<const double> u_a, std::span<const double> u_b, const BiasVector& b) {
  require_same(u_a.size(), u_b.size());
  require_same(u_a.size(), b.size());
  double dist_sq = 0.0;
  double along = 0.0;
  for (std::size_t i = 0; i < u_a.size(); ++i) {
    const double d = u_b[i] - u_a[i];
    dist_sq += d * d;
    along += d * b[i];
  }
  return dist_sq - 2.0 * std::abs(along);
}

double lambda_bar(std::span<const double> u_a, std::span<const double> u_b, const BiasVector& b) {
  require_same(u_a.size(), u_b.size());
  require_same(u_a.size(), b.size());
  double dist_sq = 0.0;
  double along = 0.0;
  for (std::size_t i = 0; i < u_a.size(); ++i) {
    const double d = u_b[i] - u_a[i];
    dist_sq += d * d;
    along += d * b[i];
  }
  if (dist_sq == 0.0) throw InvalidArgument("lambda_bar undefined for coincident actions");
  return 0.5 * (1.0 + 2.0 * along / dist_sq);
}

double g_slack_transformed(std::span<const double> y_a, std::span<const double> y_b,
                           double b_tilde) {
  if (y_a.size() != 2) throw DimensionMismatch(2, y_a.size());
  if (y_b.size() != 2) throw DimensionMismatch(2, y_b.size());
  const double d1 = y_a[0] - y_b[0];
  const double d2 = y_a[1] - y_b[1];
  return d1 * d1 + d2 * d2 - 2.0 * b_tilde * std::abs(d2);
}

std::size_t assign_action(std::span<const double> m, const ActionSet& actions,
                          const BiasVector& b) {
  if (actions.empty()) throw InvalidArgument("assign_action needs a nonempty action set");
  require_same(actions.dimension(), m.size());
  require_same(m.size(), b.size());
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < actions.size(); ++k) {
    const double c = encoder_cost(m, actions[k], b);
    if (c < best_cost) {
      best_cost = c;
      best = k;
    }
  }
  return best;
}

double min_pairwise_geo_slack(const ActionSet& actions, const BiasVector& b) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < actions.size(); ++i)
    for (std::size_t j = i + 1; j < actions.size(); ++j)
      best = std::min(best, geo_slack(actions[i], actions[j], b));
  return best;
}

}  // namespace cheaptalk
