#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cheaptalk/geometry.hpp"
#include "cheaptalk/sources.hpp"
#include "cheaptalk/transforms.hpp"

namespace cheaptalk {

// A scalar quantizer: cell i is (thresholds[i-1], thresholds[i]] with reconstruction levels[i].
struct ScalarCodebook {
  std::vector<double> thresholds;  // increasing, levels.size() - 1 entries
  std::vector<double> levels;

  std::size_t size() const { return levels.size(); }
  // Points on a threshold go to the lower cell.
  std::size_t encode(double x) const;
};

// K-bin equilibrium of the scalar game with encoder cost (x - y - beta)^2.
struct ScalarEquilibrium {
  ScalarCodebook codebook;
  std::vector<double> masses;
  double beta = 0.0;
  // |predicted - actual| centroid of the last bin at the solution.
  double residual = 0.0;

  ActionSet actions() const;
};

// Boundaries satisfy l_i = (u_i + u_{i+1}) / 2 + beta and every u_i is its bin's centroid. Found by
// bisection on the first boundary. Throws Infeasible (with the largest feasible K) when the
// shooting collapses a bin of a bounded support.
ScalarEquilibrium solve_scalar_biased(const Marginal& law, double beta, std::size_t bins);
ScalarEquilibrium solve_scalar_biased(const SourceModel& source, double beta, std::size_t bins);

// Encoder strategy: either a finite quantizer (the encoder reports its preferred action), or a
// product of scalar codebooks in transformed coordinates x = T m with decoder action T^-1 y.
class EncoderPolicy {
 public:
  enum class Kind { quantizer, linear_reveal, linear_plus_quantizer };

  static EncoderPolicy quantizer(ActionSet actions);
  // One codebook per transformed coordinate. `revealed` lists coordinates with grid codebooks.
  static EncoderPolicy linear(LinearTransform transform, std::vector<ScalarCodebook> codebooks,
                              std::vector<std::size_t> revealed, std::size_t grid_levels);

  Kind kind() const { return kind_; }
  std::size_t dimension() const;
  const ActionSet& actions() const { return actions_; }
  const LinearTransform& transform() const { return transform_; }
  const std::vector<ScalarCodebook>& codebooks() const { return codebooks_; }
  const std::vector<std::size_t>& revealed() const { return revealed_; }
  std::size_t grid_levels() const { return grid_levels_; }
  // Number of distinct messages, saturating at UINT64_MAX.
  std::uint64_t message_count() const;

  // Message chosen for source m under bias b.
  std::uint64_t encode(std::span<const double> m, const BiasVector& b) const;
  // Decoder action for a message; writes n values.
  void decode(std::uint64_t message, std::span<double> out) const;
  Point decode(std::uint64_t message) const;
  // All decoder actions (only when message_count() is small enough to enumerate).
  ActionSet enumerate_actions() const;

 private:
  Kind kind_ = Kind::quantizer;
  ActionSet actions_;
  LinearTransform transform_;
  std::vector<ScalarCodebook> codebooks_;
  std::vector<std::size_t> revealed_;
  std::size_t grid_levels_ = 0;
  std::vector<std::uint64_t> radix_;  // mixed-radix place values per coordinate
};

enum class InitScheme { quantile, random };

struct SolverConfig {
  double tolerance = 1e-8;
  std::size_t max_iterations = 500;
  double damping = 1.0;
  Budget budget;
  InitScheme init = InitScheme::quantile;
  std::size_t max_restarts = 3;

  void validate() const;
};

// One simultaneous sweep: encoder best response by assign_action, then each action moves a
// fraction `damping` of the way to its bin centroid. Throws BinDeath for light bins.
ActionSet best_response_step(const ActionSet& actions, const SourceModel& source,
                             const BiasVector& b, const Budget& budget = {},
                             double damping = 1.0);

struct FixedPointResult {
  ActionSet actions;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  double final_damping = 1.0;
  std::vector<double> movement;  // sup-norm movement per iteration
};

// Candidate equilibrium with K actions; pass the result to verify_equilibrium.
FixedPointResult solve_fixed_point(const SourceModel& source, const BiasVector& b, std::size_t bins,
                                   const SolverConfig& config = {});

// Reveals the first n-1 bias-free transformed coordinates on an L-level grid and plays the K-bin
// scalar equilibrium on the biased last coordinate.
EncoderPolicy construct_reveal_plus_quantize(const SourceModel& source, const BiasVector& b,
                                             std::size_t last_bins,
                                             std::size_t grid_levels = 1024);

struct Distortions {
  EstimateWithError encoder;  // J^e / n
  EstimateWithError decoder;  // J^d / n
  EstimateWithError gap;      // J^e - J^d per vector
  double bias_norm_sq = 0.0;
  // |gap - |b|^2| within 3 standard errors.
  bool identity_holds = false;
};

// Pooled centroid test: sum_c p_c |mean residual_c|^2 minus its expectation under exact centroids.
struct CentroidCheck {
  double excess = 0.0;
  double std_error = 0.0;
  double max_residual = 0.0;
  double max_residual_std_error = 0.0;
  std::size_t bins_checked = 0;
  std::size_t bins_skipped = 0;
  bool coarsened = false;
  bool pass = false;
};

struct EquilibriumCertificate {
  double min_pairwise_geo_slack = 0.0;
  std::size_t pairs_checked = 0;
  bool pairs_sampled = false;
  CentroidCheck centroid;
  EstimateWithError deviation_gain;
  Distortions distortions;
  std::size_t grid_levels = 0;
  double slack_tolerance = 1e-6;
  bool slack_pass = false;
  bool deviation_pass = false;

  bool pass() const { return slack_pass && centroid.pass && deviation_pass; }
};

struct VerifyOptions {
  Budget budget;
  double slack_tolerance = 1e-6;
  std::size_t deviation_samples = 50'000;
  std::size_t sampled_pairs = 200'000;
};

EquilibriumCertificate verify_equilibrium(const EncoderPolicy& policy, const SourceModel& source,
                                          const BiasVector& b, const VerifyOptions& options = {});

Distortions expected_distortions(const EncoderPolicy& policy, const SourceModel& source,
                                 const BiasVector& b, const Budget& budget = {});

struct LinearEquilibriumReport {
  std::vector<CurvePoint> curve;
  double max_abs_z = 0.0;          // largest |estimate| / stderr over the curve
  bool constant_curve = false;     // max_abs_z <= 3
  double coverage = 0.0;           // fraction of the conditional support reached by the actions
  bool covers_support = false;
  double max_report_gap = 0.0;     // largest |chosen report - x1| over sampled sources
  double report_resolution = 0.0;  // spacing of the report grid
  double deviation_fraction = 0.0;
  bool no_deviation = false;

  bool pass() const { return constant_curve && covers_support && no_deviation; }
};

// Numerical test of the two-dimensional linear equilibrium conditions in the pair-transform
// coordinates: a flat conditional-mean curve, full coverage of the conditional support, and no
// profitable misreport of the revealed coordinate.
LinearEquilibriumReport verify_linear_equilibrium(const SourceModel& source, const BiasVector& b,
                                                  const Budget& budget = {},
                                                  std::size_t curve_points = 11);

}  // namespace cheaptalk
