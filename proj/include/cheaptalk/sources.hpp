#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cheaptalk/geometry.hpp"
#include "cheaptalk/random.hpp"

namespace cheaptalk {

// Unbounded supports are truncated at this quantile for grid quadrature.
inline constexpr double kTruncationQuantile = 1e-6;
// Regions lighter than this are treated as dead bins.
inline constexpr double kMinRegionMass = 1e-4;
// Tabulated densities below this symmetry deviation are classified as symmetric.
inline constexpr double kSymmetryThreshold = 1e-3;

enum class Family {
  iid_gaussian,
  correlated_gaussian_2d,
  iid_uniform,
  iid_exponential,
  iid_laplace,
  tabulated_density,
};

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

// A one-dimensional law: the marginal of an iid source, or a projection of one.
class Marginal {
 public:
  enum class Kind { gaussian, uniform, exponential, laplace, tabulated };

  static Marginal gaussian(double mean, double variance);
  static Marginal uniform(double lo, double hi);
  static Marginal exponential(double rate);
  static Marginal laplace(double location, double scale);
  // Piecewise-constant density on uniform cells centred at `centers`; must integrate to 1.
  static Marginal tabulated(std::vector<double> centers, std::vector<double> density);

  Kind kind() const { return kind_; }
  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double p) const;
  double mean() const;
  double variance() const;
  // Exact support; infinite ends for unbounded laws.
  Interval support() const;
  // Support cut at the truncation quantile on unbounded sides.
  Interval truncated_support(double eps = kTruncationQuantile) const;
  double interval_mass(double a, double b) const;
  // E[X | a < X < b]; requires positive mass.
  double interval_mean(double a, double b) const;
  // Points where the density is not smooth (excluding support ends).
  std::vector<double> kinks() const;
  // Known exactly for analytic laws; empty for tabulated ones.
  std::optional<bool> analytic_symmetric() const;
  bool is_gaussian() const { return kind_ == Kind::gaussian; }
  double draw(Rng& rng) const;

  // Parameters (meaning depends on kind).
  double p0() const { return p0_; }
  double p1() const { return p1_; }

 private:
  Kind kind_ = Kind::gaussian;
  double p0_ = 0.0;  // mean / lo / rate / location / first cell centre
  double p1_ = 1.0;  // variance / hi / unused / scale / cell width
  std::vector<double> density_;
  std::vector<double> cell_cdf_;     // cumulative mass at cell right edges
  std::vector<double> cell_moment_;  // cumulative first moment at cell right edges
};

// Joint law of the n-dimensional source.
class SourceModel {
 public:
  static SourceModel iid(Family family, std::size_t n, Marginal marginal);
  static SourceModel iid_gaussian(std::size_t n, double mean, double variance);
  static SourceModel iid_uniform(std::size_t n, double lo, double hi);
  static SourceModel iid_exponential(std::size_t n, double rate);
  static SourceModel iid_laplace(std::size_t n, double location, double scale);
  static SourceModel iid_tabulated(std::size_t n, Marginal marginal);
  static SourceModel correlated_gaussian_2d(double mean1, double mean2, double var1, double var2,
                                            double covariance);
  // Joint 2D piecewise-constant density on a uniform grid.
  static SourceModel tabulated_2d(std::vector<double> x1_centers, std::vector<double> x2_centers,
                                  std::vector<double> density_row_major);

  Family family() const { return family_; }
  std::size_t dimension() const { return n_; }
  bool is_iid() const { return family_ != Family::correlated_gaussian_2d && !joint_table_; }
  bool is_gaussian() const {
    return family_ == Family::iid_gaussian || family_ == Family::correlated_gaussian_2d;
  }
  // Marginal law of each coordinate (iid families only).
  const Marginal& marginal() const;

  Point mean() const;
  Eigen::MatrixXd covariance() const;
  double total_variance() const { return covariance().trace(); }
  double density(std::span<const double> m) const;
  // Probability of the box [lo, hi) and its centroid. Exact for iid families, where the box may
  // be unbounded; midpoint rule on a bounded box otherwise.
  double cell_mass(std::span<const double> lo, std::span<const double> hi,
                   std::span<double> centroid) const;
  // Per-coordinate box carrying all but a negligible amount of mass.
  std::vector<Interval> truncated_box(double eps = kTruncationQuantile) const;
  // Writes one draw into out (length n).
  void draw(Rng& rng, std::span<double> out) const;
  // Law of w^T M. Exact for Gaussian families; tabulated by line integrals for n = 2.
  Marginal projected_marginal(std::span<const double> w, std::size_t cells = 4096) const;

  // Parameters used by classification.
  double correlated_var1() const { return var1_; }
  double correlated_var2() const { return var2_; }
  double correlated_covariance() const { return cov_; }

 private:
  Family family_ = Family::iid_gaussian;
  std::size_t n_ = 1;
  Marginal marginal_;
  // correlated gaussian
  double mean1_ = 0.0, mean2_ = 0.0, var1_ = 1.0, var2_ = 1.0, cov_ = 0.0;
  double chol11_ = 1.0, chol21_ = 0.0, chol22_ = 1.0;
  // joint table
  struct JointTable {
    std::vector<double> x1, x2;  // cell centres
    double h1 = 0.0, h2 = 0.0;
    std::vector<double> density;  // row-major over (x1, x2)
    std::vector<double> cumulative;
  };
  std::optional<JointTable> joint_table_;
};

// Scalar or vector estimate with its standard error.
struct EstimateWithError {
  std::vector<double> value;
  std::vector<double> component_std_error;
  double std_error = 0.0;  // sqrt(sum of squared component errors)
  std::size_t sample_count = 0;  // 0 for quadrature results
  double mass = 1.0;             // probability of the conditioning event
};

// Intersection of half-spaces {h_i(m) >= 0}.
struct HalfSpaceRegion {
  std::vector<Hyperplane> constraints;
  bool contains(std::span<const double> m) const;
};

// Region given by an explicit selection of rows of a flat sample array.
struct SampleMaskRegion {
  std::span<const double> samples;
  std::vector<std::uint8_t> mask;
};

using Region = std::variant<HalfSpaceRegion, SampleMaskRegion>;

enum class EstimationMethod { automatic, monte_carlo, quadrature };

struct Budget {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 42;
  EstimationMethod method = EstimationMethod::automatic;
  std::size_t quadrature_cells = 0;  // per axis; 0 picks a default by dimension
  int refine_depth = 3;
};

// Flat row-major draws; deterministic in (source, count, seed) for any number of workers.
std::vector<double> sample(const SourceModel& source, std::size_t count, std::uint64_t seed);
std::vector<Point> sample_points(const SourceModel& source, std::size_t count,
                                 std::uint64_t seed);

EstimateWithError region_mean(const SourceModel& source, const Region& region,
                              const Budget& budget = {});

// E[X2 | X1 = t] - E[X2] for X1 = b1 M2 - b2 M1, X2 = b1 M1 + b2 M2.
struct CurvePoint {
  double t = 0.0;
  EstimateWithError estimate;
  double window_width = 0.0;
};
std::vector<CurvePoint> conditional_mean_curve(const SourceModel& source, const BiasVector& b,
                                               std::span<const double> grid,
                                               const Budget& budget = {});
// Evenly spaced grid between the given quantiles of X1, estimated from draws.
std::vector<double> default_curve_grid(const SourceModel& source, const BiasVector& b,
                                       std::size_t points = 11, double lo_quantile = 0.05,
                                       double hi_quantile = 0.95);

// sup |f(mu + x) - f(mu - x)| / sup f over a quantile grid.
double symmetry_deviation(const Marginal& marginal, std::size_t grid_points = 2001);

// Support of X1 on the line X2 = x2 (pair-transform coordinates for bias b).
Interval conditional_support(const SourceModel& source, const BiasVector& b, double x2);

// CSV loaders: `x,density` (1D) or `x1,x2,density` (2D) on uniform grids.
Marginal load_tabulated_1d(const std::string& path);
SourceModel load_tabulated_2d(const std::string& path);

}  // namespace cheaptalk
