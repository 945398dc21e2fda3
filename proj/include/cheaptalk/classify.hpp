#pragma once

#include <optional>
#include <string_view>

#include "cheaptalk/geometry.hpp"
#include "cheaptalk/sources.hpp"

namespace cheaptalk {

enum class Existence { exists, not_exists, undetermined };
enum class ExistenceCase {
  zero_bias,
  gaussian_required,
  symmetry_required,
  antisymmetric_bias,
  correlated_gaussian
};
enum class Confidence { analytic, numerical };

std::string_view to_string(Existence e);
std::string_view to_string(ExistenceCase c);
std::string_view to_string(Confidence c);

struct ClassificationVerdict {
  Existence exists = Existence::undetermined;
  ExistenceCase theorem_case = ExistenceCase::zero_bias;
  Confidence confidence = Confidence::analytic;
  // Evidence, filled where it applies.
  std::optional<double> symmetry_deviation;
  std::optional<double> curve_max_abs_z;      // largest |E[X2 | X1 = t] - E[X2]| / stderr
  std::optional<double> curve_max_deviation;  // largest |E[X2 | X1 = t] - E[X2]|
  std::optional<double> correlated_residual;
};

// Existence of an informative linear equilibrium for an iid two-dimensional source. When
// `evidence` is given, the conditional-mean curve is estimated with that budget and attached.
ClassificationVerdict classify_linear_existence(const SourceModel& source, const BiasVector& b,
                                                const std::optional<Budget>& evidence = {});

struct CorrelatedCondition {
  double residual = 0.0;
  double scale = 1.0;
  bool holds = false;
};

// b1 b2 (var2 - var1) + (b1^2 - b2^2) cov = 0 makes the linear equilibrium exist for a
// correlated gaussian pair.
CorrelatedCondition correlated_gaussian_condition(double var1, double var2, double cov,
                                                  const BiasVector& b);

// Verdict for the correlated gaussian family: exists when the condition holds, otherwise
// undetermined (the condition is only known to be sufficient).
ClassificationVerdict classify_correlated_gaussian(const SourceModel& source, const BiasVector& b);

}  // namespace cheaptalk
