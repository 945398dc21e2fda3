#include "cheaptalk/classify.hpp"

#include <algorithm>
#include <cmath>

#include "cheaptalk/errors.hpp"

namespace cheaptalk {

std::string_view to_string(Existence e) {
  switch (e) {
    case Existence::exists: return "exists";
    case Existence::not_exists: return "not-exists";
    case Existence::undetermined: return "undetermined";
  }
  return "undetermined";
}

std::string_view to_string(ExistenceCase c) {
  switch (c) {
    case ExistenceCase::zero_bias: return "zero-bias";
    case ExistenceCase::gaussian_required: return "gaussian-required";
    case ExistenceCase::symmetry_required: return "symmetry-required";
    case ExistenceCase::antisymmetric_bias: return "antisymmetric-bias";
    case ExistenceCase::correlated_gaussian: return "correlated-gaussian";
  }
  return "zero-bias";
}

std::string_view to_string(Confidence c) {
  return c == Confidence::analytic ? "analytic" : "numerical";
}

namespace {

bool nearly_equal(double x, double y) {
  return std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y));
}

void attach_curve(ClassificationVerdict& v, const SourceModel& source, const BiasVector& b,
                  const Budget& budget) {
  const auto grid = default_curve_grid(source, b);
  const auto curve = conditional_mean_curve(source, b, grid, budget);
  double max_z = 0.0, max_dev = 0.0;
  for (const auto& p : curve) {
    const double value = std::abs(p.estimate.value[0]);
    max_dev = std::max(max_dev, value);
    max_z = std::max(max_z, p.estimate.std_error > 0.0 ? value / p.estimate.std_error : 0.0);
  }
  v.curve_max_abs_z = max_z;
  v.curve_max_deviation = max_dev;
}

}  // namespace

ClassificationVerdict classify_linear_existence(const SourceModel& source, const BiasVector& b,
                                                const std::optional<Budget>& evidence) {
  if (!source.is_iid())
    throw InvalidArgument("classification by family needs an iid source; use the correlated "
                          "gaussian condition for correlated pairs");
  if (source.dimension() != 2) throw InvalidArgument("classification is defined for n = 2");
  if (b.size() != 2) throw DimensionMismatch(2, b.size());
  const double b1 = b[0], b2 = b[1];
  const Marginal& law = source.marginal();

  ClassificationVerdict v;
  if (b1 == 0.0 || b2 == 0.0) {
    v.exists = Existence::exists;
    v.theorem_case = ExistenceCase::zero_bias;
  } else if (nearly_equal(b1, -b2)) {
    v.exists = Existence::exists;
    v.theorem_case = ExistenceCase::antisymmetric_bias;
  } else if (nearly_equal(b1, b2)) {
    v.theorem_case = ExistenceCase::symmetry_required;
    const double deviation = symmetry_deviation(law);
    v.symmetry_deviation = deviation;
    if (const auto flag = law.analytic_symmetric()) {
      v.exists = *flag ? Existence::exists : Existence::not_exists;
    } else {
      v.confidence = Confidence::numerical;
      v.exists = deviation < kSymmetryThreshold ? Existence::exists : Existence::not_exists;
    }
  } else {
    v.theorem_case = ExistenceCase::gaussian_required;
    if (law.kind() == Marginal::Kind::tabulated) {
      v.confidence = Confidence::numerical;
      v.exists = Existence::undetermined;
    } else {
      v.exists = law.is_gaussian() ? Existence::exists : Existence::not_exists;
    }
  }
  const bool want_curve = evidence || v.exists == Existence::undetermined;
  if (want_curve && !b.is_zero()) attach_curve(v, source, b, evidence.value_or(Budget{}));
  return v;
}

CorrelatedCondition correlated_gaussian_condition(double var1, double var2, double cov,
                                                  const BiasVector& b) {
  if (!(var1 > 0.0) || !(var2 > 0.0)) throw InvalidArgument("variances must be positive");
  if (!std::isfinite(cov) || cov * cov > var1 * var2 * (1.0 + 1e-12))
    throw InvalidArgument("covariance matrix is not positive semidefinite");
  if (b.size() != 2) throw DimensionMismatch(2, b.size());
  const double b1 = b[0], b2 = b[1];
  CorrelatedCondition c;
  c.residual = b1 * b2 * (var2 - var1) + (b1 * b1 - b2 * b2) * cov;
  c.scale = std::max({1.0, std::abs(b1 * b2) * (var1 + var2), (b1 * b1 + b2 * b2) * std::abs(cov)});
  c.holds = std::abs(c.residual) <= 1e-12 * c.scale;
  return c;
}

ClassificationVerdict classify_correlated_gaussian(const SourceModel& source, const BiasVector& b) {
  if (source.family() != Family::correlated_gaussian_2d)
    throw InvalidArgument("expected a correlated gaussian source");
  const auto c = correlated_gaussian_condition(source.correlated_var1(), source.correlated_var2(),
                                               source.correlated_covariance(), b);
  ClassificationVerdict v;
  v.theorem_case = ExistenceCase::correlated_gaussian;
  v.exists = c.holds ? Existence::exists : Existence::undetermined;
  v.correlated_residual = c.residual;
  return v;
}

}  // namespace cheaptalk
