#include "cheaptalk/sources.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "cheaptalk/errors.hpp"
#include "cheaptalk/montecarlo.hpp"

namespace cheaptalk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct FamilyName {
  Family family;
  std::string_view name;
};

constexpr FamilyName kFamilyNames[] = {
    {Family::iid_gaussian, "iid-gaussian"},
    {Family::correlated_gaussian_2d, "correlated-gaussian-2d"},
    {Family::iid_uniform, "iid-uniform"},
    {Family::iid_exponential, "iid-exponential"},
    {Family::iid_laplace, "iid-laplace"},
    {Family::tabulated_density, "tabulated-density"},
};

// Integral of g over [a, b] split at the given interior breakpoints.
template <class G>
double piecewise_gauss(G g, double a, double b, std::vector<double> breaks) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = std::max(a, breaks[i]);
    const double hi = std::min(b, breaks[i + 1]);
    if (hi > lo) total += boost::math::quadrature::gauss<double, 20>::integrate(g, lo, hi);
  }
  return total;
}

// Parameter range of the line p + s d inside the box, or empty.
std::optional<Interval> clip_line(const std::vector<Interval>& box, const double* p,
                                  const double* d, std::size_t n) {
  double lo = -kInf, hi = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(d[i]) < 1e-300) {
      if (p[i] < box[i].lo || p[i] > box[i].hi) return std::nullopt;
      continue;
    }
    double t0 = (box[i].lo - p[i]) / d[i];
    double t1 = (box[i].hi - p[i]) / d[i];
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
  }
  if (hi < lo) return std::nullopt;
  return Interval{lo, hi};
}

}  // namespace

std::string_view to_string(Family f) {
  for (const auto& e : kFamilyNames)
    if (e.family == f) return e.name;
  return "unknown";
}

Family family_from_string(std::string_view name) {
  for (const auto& e : kFamilyNames)
    if (e.name == name) return e.family;
  throw InvalidArgument("unsupported source family '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------------------------
// SourceModel

SourceModel SourceModel::iid(Family family, std::size_t n, Marginal marginal) {
  if (n == 0) throw InvalidArgument("source dimension must be positive");
  if (family == Family::correlated_gaussian_2d) throw InvalidArgument("correlated family is not iid");
  SourceModel s;
  s.family_ = family;
  s.n_ = n;
  s.marginal_ = std::move(marginal);
  return s;
}

SourceModel SourceModel::iid_gaussian(std::size_t n, double mean, double variance) {
  return iid(Family::iid_gaussian, n, Marginal::gaussian(mean, variance));
}
SourceModel SourceModel::iid_uniform(std::size_t n, double lo, double hi) {
  return iid(Family::iid_uniform, n, Marginal::uniform(lo, hi));
}
SourceModel SourceModel::iid_exponential(std::size_t n, double rate) {
  return iid(Family::iid_exponential, n, Marginal::exponential(rate));
}
SourceModel SourceModel::iid_laplace(std::size_t n, double location, double scale) {
  return iid(Family::iid_laplace, n, Marginal::laplace(location, scale));
}
SourceModel SourceModel::iid_tabulated(std::size_t n, Marginal marginal) {
  if (marginal.kind() != Marginal::Kind::tabulated) throw InvalidArgument("expected a tabulated marginal");
  return iid(Family::tabulated_density, n, std::move(marginal));
}

SourceModel SourceModel::correlated_gaussian_2d(double mean1, double mean2, double var1,
                                                double var2, double covariance) {
  if (!(var1 > 0.0) || !(var2 > 0.0)) throw InvalidArgument("variances must be positive");
  if (covariance * covariance > var1 * var2 * (1.0 + 1e-12))
    throw InvalidArgument("covariance matrix is not positive semidefinite");
  SourceModel s;
  s.family_ = Family::correlated_gaussian_2d;
  s.n_ = 2;
  s.mean1_ = mean1;
  s.mean2_ = mean2;
  s.var1_ = var1;
  s.var2_ = var2;
  s.cov_ = covariance;
  s.chol11_ = std::sqrt(var1);
  s.chol21_ = covariance / s.chol11_;
  s.chol22_ = std::sqrt(std::max(0.0, var2 - s.chol21_ * s.chol21_));
  if (!(s.chol22_ > 0.0))
    throw InvalidArgument("singular covariance has no density (positive measure required)");
  return s;
}

SourceModel SourceModel::tabulated_2d(std::vector<double> x1, std::vector<double> x2,
                                      std::vector<double> density) {
  if (x1.size() < 2 || x2.size() < 2 || density.size() != x1.size() * x2.size())
    throw InvalidArgument("2D table needs a full grid of at least 2x2 points");
  auto check_uniform = [](const std::vector<double>& x) {
    const double h = x[1] - x[0];
    if (!(h > 0.0)) throw InvalidArgument("tabulated grid must be increasing");
    for (std::size_t i = 1; i < x.size(); ++i)
      if (std::abs(x[i] - x[0] - static_cast<double>(i) * h) > 1e-9 * std::max(1.0, std::abs(x[i])))
        throw InvalidArgument("tabulated grid must be uniform");
    return h;
  };
  JointTable t;
  t.h1 = check_uniform(x1);
  t.h2 = check_uniform(x2);
  double total = 0.0;
  for (double d : density) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("tabulated density must be nonnegative");
    total += d * t.h1 * t.h2;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw InvalidArgument("tabulated density integrates to " + std::to_string(total) + ", not 1");
  t.cumulative.resize(density.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    density[i] /= total;
    acc += density[i] * t.h1 * t.h2;
    t.cumulative[i] = acc;
  }
  t.x1 = std::move(x1);
  t.x2 = std::move(x2);
  t.density = std::move(density);
  SourceModel s;
  s.family_ = Family::tabulated_density;
  s.n_ = 2;
  s.joint_table_ = std::move(t);
  return s;
}

const Marginal& SourceModel::marginal() const {
  if (!is_iid()) throw InvalidArgument("marginal() is only defined for iid sources");
  return marginal_;
}

Point SourceModel::mean() const {
  if (family_ == Family::correlated_gaussian_2d) return {mean1_, mean2_};
  if (joint_table_) {
    const auto& t = *joint_table_;
    Point mu(2, 0.0);
    for (std::size_t i = 0; i < t.x1.size(); ++i)
      for (std::size_t j = 0; j < t.x2.size(); ++j) {
        const double w = t.density[i * t.x2.size() + j] * t.h1 * t.h2;
        mu[0] += w * t.x1[i];
        mu[1] += w * t.x2[j];
      }
    return mu;
  }
  return Point(n_, marginal_.mean());
}

Eigen::MatrixXd SourceModel::covariance() const {
  const auto n = static_cast<Eigen::Index>(n_);
  if (family_ == Family::correlated_gaussian_2d) {
    Eigen::MatrixXd c(2, 2);
    c << var1_, cov_, cov_, var2_;
    return c;
  }
  if (joint_table_) {
    const auto& t = *joint_table_;
    const Point mu = mean();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
    for (std::size_t i = 0; i < t.x1.size(); ++i)
      for (std::size_t j = 0; j < t.x2.size(); ++j) {
        const double w = t.density[i * t.x2.size() + j] * t.h1 * t.h2;
        const double d1 = t.x1[i] - mu[0];
        const double d2 = t.x2[j] - mu[1];
        c(0, 0) += w * (d1 * d1 + t.h1 * t.h1 / 12.0);
        c(1, 1) += w * (d2 * d2 + t.h2 * t.h2 / 12.0);
        c(0, 1) += w * d1 * d2;
      }
    c(1, 0) = c(0, 1);
    return c;
  }
  return Eigen::MatrixXd::Identity(n, n) * marginal_.variance();
}

double SourceModel::cell_mass(std::span<const double> lo, std::span<const double> hi,
                              std::span<double> centroid) const {
  if (is_iid()) {
    double mass = 1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double p = marginal_.interval_mass(lo[i], hi[i]);
      mass *= p;
      centroid[i] = p > 0.0 ? marginal_.interval_mean(lo[i], hi[i]) : 0.5 * (lo[i] + hi[i]);
    }
    return mass;
  }
  double volume = 1.0;
  for (std::size_t i = 0; i < n_; ++i) {
    centroid[i] = 0.5 * (lo[i] + hi[i]);
    volume *= hi[i] - lo[i];
  }
  return density(centroid) * volume;
}

double SourceModel::density(std::span<const double> m) const {
  if (m.size() != n_) throw DimensionMismatch(n_, m.size());
  if (family_ == Family::correlated_gaussian_2d) {
    const double det = var1_ * var2_ - cov_ * cov_;
    const double d1 = m[0] - mean1_;
    const double d2 = m[1] - mean2_;
    const double q = (var2_ * d1 * d1 - 2.0 * cov_ * d1 * d2 + var1_ * d2 * d2) / det;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
  }
  if (joint_table_) {
    const auto& t = *joint_table_;
    const double lo1 = t.x1.front() - 0.5 * t.h1;
    const double lo2 = t.x2.front() - 0.5 * t.h2;
    const double f1 = (m[0] - lo1) / t.h1;
    const double f2 = (m[1] - lo2) / t.h2;
    if (f1 < 0.0 || f2 < 0.0) return 0.0;
    const auto i = static_cast<std::size_t>(f1);
    const auto j = static_cast<std::size_t>(f2);
    if (i >= t.x1.size() || j >= t.x2.size()) return 0.0;
    return t.density[i * t.x2.size() + j];
  }
  double p = 1.0;
  for (double x : m) p *= marginal_.pdf(x);
  return p;
}

std::vector<Interval> SourceModel::truncated_box(double eps) const {
  if (family_ == Family::correlated_gaussian_2d) {
    const double z = -boost::math::quantile(boost::math::normal(), eps);
    return {{mean1_ - z * std::sqrt(var1_), mean1_ + z * std::sqrt(var1_)},
            {mean2_ - z * std::sqrt(var2_), mean2_ + z * std::sqrt(var2_)}};
  }
  if (joint_table_) {
    const auto& t = *joint_table_;
    return {{t.x1.front() - 0.5 * t.h1, t.x1.back() + 0.5 * t.h1},
            {t.x2.front() - 0.5 * t.h2, t.x2.back() + 0.5 * t.h2}};
  }
  return std::vector<Interval>(n_, marginal_.truncated_support(eps));
}

void SourceModel::draw(Rng& rng, std::span<double> out) const {
  if (family_ == Family::correlated_gaussian_2d) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    out[0] = mean1_ + chol11_ * z1;
    out[1] = mean2_ + chol21_ * z1 + chol22_ * z2;
    return;
  }
  if (joint_table_) {
    const auto& t = *joint_table_;
    const double u = rng.uniform() * t.cumulative.back();
    const auto it = std::lower_bound(t.cumulative.begin(), t.cumulative.end(), u);
    const auto cell = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - t.cumulative.begin(), static_cast<std::ptrdiff_t>(t.cumulative.size()) - 1));
    const std::size_t i = cell / t.x2.size();
    const std::size_t j = cell % t.x2.size();
    out[0] = t.x1[i] + (rng.uniform() - 0.5) * t.h1;
    out[1] = t.x2[j] + (rng.uniform() - 0.5) * t.h2;
    return;
  }
  for (std::size_t i = 0; i < n_; ++i) out[i] = marginal_.draw(rng);
}

Marginal SourceModel::projected_marginal(std::span<const double> w, std::size_t cells) const {
  if (w.size() != n_) throw DimensionMismatch(n_, w.size());
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(n_));
  const double norm = wv.norm();
  if (!(norm > 0.0)) throw InvalidArgument("projection direction must be nonzero");
  const Point mu = mean();
  double center = 0.0;
  for (std::size_t i = 0; i < n_; ++i) center += w[i] * mu[i];
  if (is_gaussian()) return Marginal::gaussian(center, wv.dot(covariance() * wv));
  if (is_iid() && std::count(w.begin(), w.end(), 0.0) == static_cast<std::ptrdiff_t>(n_ - 1) &&
      std::find(w.begin(), w.end(), 1.0) != w.end())
    return marginal_;
  if (n_ == 1) {
    if (marginal_.kind() == Marginal::Kind::uniform) {
      const double a = w[0] * marginal_.p0(), b = w[0] * marginal_.p1();
      return Marginal::uniform(std::min(a, b), std::max(a, b));
    }
    throw InvalidArgument("projection of a 1D non-gaussian source is only tabulated for n = 2");
  }
  if (n_ != 2)
    throw InvalidArgument("projected law of a non-gaussian source is only available for n = 2");

  // Density of t = w^T m: integrate the joint density along the lines w^T m = t.
  const std::vector<Interval> box = truncated_box();
  const double u0 = w[0] / norm, u1 = w[1] / norm;  // unit direction
  const double v0 = -u1, v1 = u0;                    // orthogonal direction
  double t_lo = kInf, t_hi = -kInf;
  for (int k = 0; k < 4; ++k) {
    const double c0 = (k & 1) ? box[0].hi : box[0].lo;
    const double c1 = (k & 2) ? box[1].hi : box[1].lo;
    const double t = w[0] * c0 + w[1] * c1;
    t_lo = std::min(t_lo, t);
    t_hi = std::max(t_hi, t);
  }
  const std::vector<double> kinks = is_iid() ? marginal_.kinks() : std::vector<double>{};
  auto line_density = [&](double t) {
    const double r = t / norm;  // signed distance along the unit direction
    const double p[2] = {r * u0, r * u1};
    const double d[2] = {v0, v1};
    const auto range = clip_line(box, p, d, 2);
    if (!range || !(range->hi > range->lo)) return 0.0;
    std::vector<double> breaks;
    for (double k : kinks) {
      if (std::abs(v0) > 1e-300) breaks.push_back((k - p[0]) / v0);
      if (std::abs(v1) > 1e-300) breaks.push_back((k - p[1]) / v1);
    }
    auto g = [&](double s) {
      const double m[2] = {p[0] + s * d[0], p[1] + s * d[1]};
      return density(std::span<const double>(m, 2));
    };
    return piecewise_gauss(g, range->lo, range->hi, breaks) / norm;
  };
  const double h = (t_hi - t_lo) / static_cast<double>(cells);
  std::vector<double> centers(cells), dens(cells);
  double total = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double lo = t_lo + static_cast<double>(c) * h;
    centers[c] = lo + 0.5 * h;
    // Two-point Gauss rule for the cell average.
    const double off = 0.5 * h / std::numbers::sqrt3;
    dens[c] = 0.5 * (line_density(centers[c] - off) + line_density(centers[c] + off));
    total += dens[c] * h;
  }
  if (!(total > 0.0)) throw InvalidArgument("projected density vanished");
  for (double& d : dens) d /= total;
  return Marginal::tabulated(std::move(centers), std::move(dens));
}

// ---------------------------------------------------------------------------------------------
// Sampling

void draw_chunk(const SourceModel& source, std::uint64_t seed, std::size_t chunk, std::size_t rows,
                std::span<double> out) {
  const std::size_t n = source.dimension();
  Rng rng(seed, chunk);
  for (std::size_t r = 0; r < rows; ++r) source.draw(rng, out.subspan(r * n, n));
}

std::vector<double> sample(const SourceModel& source, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("sample count must be positive");
  const std::size_t n = source.dimension();
  std::vector<double> out(count * n);
  const auto chunks = static_cast<std::int64_t>(chunk_count(count));
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const auto first = static_cast<std::size_t>(c) * kChunkRows;
    const std::size_t rows = std::min(kChunkRows, count - first);
    draw_chunk(source, seed, static_cast<std::size_t>(c), rows,
               std::span<double>(out.data() + first * n, rows * n));
  }
  return out;
}

std::vector<Point> sample_points(const SourceModel& source, std::size_t count, std::uint64_t seed) {
  const std::vector<double> flat = sample(source, count, seed);
  const std::size_t n = source.dimension();
  std::vector<Point> out(count);
  for (std::size_t r = 0; r < count; ++r) out[r].assign(flat.begin() + r * n, flat.begin() + (r + 1) * n);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Region means

bool HalfSpaceRegion::contains(std::span<const double> m) const {
  return std::all_of(constraints.begin(), constraints.end(),
                     [&](const Hyperplane& h) { return h.evaluate(m) >= 0.0; });
}

namespace {

EstimateWithError finish(const BinStats& stats, std::size_t bin, double total_weight,
                         bool monte_carlo) {
  EstimateWithError e;
  e.value = stats.mean(bin);
  e.mass = total_weight > 0.0 ? stats.weight[bin] / total_weight : 0.0;
  const std::size_t n = stats.n;
  e.component_std_error.assign(n, 0.0);
  if (monte_carlo) {
    e.sample_count = stats.count[bin];
    const auto cov = stats.covariance(bin);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = stats.count[bin] > 1 ? cov[i * n + i] / static_cast<double>(stats.count[bin]) : 0.0;
      e.component_std_error[i] = std::sqrt(std::max(0.0, v));
      total += std::max(0.0, v);
    }
    e.std_error = std::sqrt(total);
  }
  return e;
}

EstimateWithError interval_region_mean(const SourceModel& source, const HalfSpaceRegion& region) {
  double lo = -kInf, hi = kInf;
  for (const auto& h : region.constraints) {
    const double a = h.normal[0];
    if (a > 0.0)
      lo = std::max(lo, h.anchor[0]);
    else if (a < 0.0)
      hi = std::min(hi, h.anchor[0]);
  }
  const Marginal& m = source.marginal();
  const double mass = hi > lo ? m.interval_mass(lo, hi) : 0.0;
  if (!(mass >= kMinRegionMass)) throw BinDeath(0, mass);
  EstimateWithError e;
  e.value = {m.interval_mean(lo, hi)};
  e.component_std_error = {0.0};
  e.mass = mass;
  return e;
}

}  // namespace

EstimateWithError region_mean(const SourceModel& source, const Region& region,
                              const Budget& budget) {
  const std::size_t n = source.dimension();
  if (const auto* mask = std::get_if<SampleMaskRegion>(&region)) {
    if (mask->samples.size() != mask->mask.size() * n)
      throw InvalidArgument("sample mask length does not match the sample array");
    BinStats stats(2, n, {});
    for (std::size_t r = 0; r < mask->mask.size(); ++r)
      stats.add(mask->mask[r] ? 0 : 1, mask->samples.subspan(r * n, n));
    const double total = stats.total_weight();
    if (!(total > 0.0) || stats.weight[0] / total < kMinRegionMass) throw BinDeath(0, stats.weight[0] / std::max(total, 1.0));
    return finish(stats, 0, total, true);
  }
  const auto& halfspaces = std::get<HalfSpaceRegion>(region);
  for (const auto& h : halfspaces.constraints)
    if (h.normal.size() != n) throw DimensionMismatch(n, h.normal.size());

  auto encode = [&](std::span<const double> m) -> std::size_t { return halfspaces.contains(m) ? 0 : 1; };
  EstimationMethod method = budget.method;
  if (method == EstimationMethod::automatic)
    method = n <= 3 ? EstimationMethod::quadrature : EstimationMethod::monte_carlo;

  if (method == EstimationMethod::quadrature && n == 1 && source.is_iid())
    return interval_region_mean(source, halfspaces);

  if (method == EstimationMethod::quadrature) {
    if (n > 3) throw InvalidArgument("grid quadrature is limited to n <= 3");
    const std::size_t cells = budget.quadrature_cells ? budget.quadrature_cells : (n == 1 ? 1 << 16 : n == 2 ? 512 : 64);
    const BinStats stats = quadrature_bin_stats(source, 2, {}, cells, budget.refine_depth, encode);
    const double total = stats.total_weight();
    const double mass = total > 0.0 ? stats.weight[0] / total : 0.0;
    if (!(mass >= kMinRegionMass)) throw BinDeath(0, mass);
    return finish(stats, 0, total, false);
  }
  const BinStats stats = mc_bin_stats(source, budget, 2, {}, encode);
  const double total = stats.total_weight();
  const double mass = stats.weight[0] / total;
  if (!(mass >= kMinRegionMass)) throw BinDeath(0, mass);
  return finish(stats, 0, total, true);
}

// ---------------------------------------------------------------------------------------------
// Conditional mean curve

std::vector<double> default_curve_grid(const SourceModel& source, const BiasVector& b,
                                       std::size_t points, double lo_quantile, double hi_quantile) {
  if (source.dimension() != 2 || b.size() != 2) throw InvalidArgument("curve grid needs n = 2");
  const std::size_t count = 200'000;
  const std::vector<double> draws = sample(source, count, 0x5eedULL);
  std::vector<double> x1(count);
  for (std::size_t r = 0; r < count; ++r) x1[r] = b[0] * draws[2 * r + 1] - b[1] * draws[2 * r];
  std::sort(x1.begin(), x1.end());
  const double lo = x1[static_cast<std::size_t>(lo_quantile * static_cast<double>(count - 1))];
  const double hi = x1[static_cast<std::size_t>(hi_quantile * static_cast<double>(count - 1))];
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = points == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

std::vector<CurvePoint> conditional_mean_curve(const SourceModel& source, const BiasVector& b,
                                               std::span<const double> grid, const Budget& budget) {
  if (source.dimension() != 2) throw InvalidArgument("conditional mean curve needs a 2D source");
  if (b.size() != 2) throw DimensionMismatch(2, b.size());
  if (b.is_zero()) throw InvalidArgument("conditional mean curve needs a nonzero bias");
  const std::size_t window = std::max<std::size_t>(100, budget.samples / 200);
  if (budget.samples < window) throw BudgetExhausted("fewer draws than one regression window");

  const std::vector<double> draws = sample(source, budget.samples, budget.seed);
  std::vector<std::pair<double, double>> xy(budget.samples);
  for (std::size_t r = 0; r < budget.samples; ++r) {
    const double m1 = draws[2 * r], m2 = draws[2 * r + 1];
    xy[r] = {b[0] * m2 - b[1] * m1, b[0] * m1 + b[1] * m2};
  }
  std::sort(xy.begin(), xy.end());
  const Point mu = source.mean();
  const double x2_mean = b[0] * mu[0] + b[1] * mu[1];

  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  for (double t : grid) {
    if (t < xy.front().first || t > xy.back().first)
      throw InvalidArgument("curve grid point " + std::to_string(t) + " lies outside the sampled support");
    // Window of the `window` draws nearest to t in X1.
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(xy.begin(), xy.end(), std::make_pair(t, -kInf)) - xy.begin());
    std::size_t lo = pos > window / 2 ? pos - window / 2 : 0;
    std::size_t hi = std::min(xy.size(), lo + window);
    lo = hi - std::min(hi, window);
    while (lo > 0 && hi < xy.size() && t - xy[lo - 1].first < xy[hi].first - t) {
      --lo;
      --hi;
    }
    while (hi < xy.size() && lo < xy.size() && xy[hi].first - t < t - xy[lo].first) {
      ++lo;
      ++hi;
    }
    Moments moments;
    for (std::size_t i = lo; i < hi; ++i) moments.add(xy[i].second - x2_mean);
    if (moments.count < 100) throw BudgetExhausted("regression window captured fewer than 100 draws");
    CurvePoint p;
    p.t = t;
    p.estimate.value = {moments.mean()};
    p.estimate.std_error = moments.std_error();
    p.estimate.component_std_error = {p.estimate.std_error};
    p.estimate.sample_count = moments.count;
    p.estimate.mass = static_cast<double>(moments.count) / static_cast<double>(xy.size());
    p.window_width = xy[hi - 1].first - xy[lo].first;
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Distributional predicates

double symmetry_deviation(const Marginal& marginal, std::size_t grid_points) {
  const double mu = marginal.mean();
  const Interval s = marginal.truncated_support();
  const double reach = std::max(mu - s.lo, s.hi - mu);
  const double nudge = 1e-9 * reach;
  double peak = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    // Quantile-spaced offsets, plus a uniform sweep so narrow features are not skipped.
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(grid_points);
    const double q = std::abs(marginal.quantile(std::clamp(p, kTruncationQuantile, 1.0 - kTruncationQuantile)) - mu);
    const double u = reach * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    for (double x : {q, u}) {
      // Mirror-image one-sided values, so that jumps of a piecewise-constant density placed
      // symmetrically do not count as asymmetry.
      const double fp = marginal.pdf(mu + x + nudge);
      const double fm = marginal.pdf(mu - x - nudge);
      peak = std::max({peak, fp, fm});
      worst = std::max(worst, std::abs(fp - fm));
    }
  }
  return peak > 0.0 ? worst / peak : 0.0;
}

Interval conditional_support(const SourceModel& source, const BiasVector& b, double x2) {
  if (source.dimension() != 2) throw InvalidArgument("conditional support needs a 2D source");
  if (b.size() != 2) throw DimensionMismatch(2, b.size());
  if (b.is_zero()) throw InvalidArgument("conditional support needs a nonzero bias");
  const double b1 = b[0], b2 = b[1];
  const double bt = b1 * b1 + b2 * b2;

  if (source.is_gaussian()) {
    // (X1, X2) is jointly gaussian: condition and cut at the truncation quantiles.
    const Eigen::MatrixXd c = source.covariance();
    const Point mu = source.mean();
    Eigen::Vector2d r1(-b2, b1), r2(b1, b2);
    const double v1 = r1.dot(c * r1), v2 = r2.dot(c * r2), v12 = r1.dot(c * r2);
    const double m1 = -b2 * mu[0] + b1 * mu[1], m2 = b1 * mu[0] + b2 * mu[1];
    const double cond_mean = m1 + v12 / v2 * (x2 - m2);
    const double cond_var = std::max(v1 - v12 * v12 / v2, 1e-300);
    const double z = -boost::math::quantile(boost::math::normal(), kTruncationQuantile);
    return {cond_mean - z * std::sqrt(cond_var), cond_mean + z * std::sqrt(cond_var)};
  }
  // Line b^T m = x2, i.e. m = x2 b / bt + s (-b2, b1); clip to the support box.
  const std::vector<Interval> box = source.truncated_box();
  const double p[2] = {x2 * b1 / bt, x2 * b2 / bt};
  const double d[2] = {-b2, b1};
  // Slightly inflated box so that corners (degenerate intervals) are kept.
  std::vector<Interval> grown = box;
  for (auto& iv : grown) {
    const double pad = 1e-12 * std::max(1.0, iv.length());
    iv.lo -= pad;
    iv.hi += pad;
  }
  const auto range = clip_line(grown, p, d, 2);
  if (!range) throw InvalidArgument("x2 = " + std::to_string(x2) + " lies outside the support of X2");
  // X1 = b1 m2 - b2 m1 = bt * s along the line.
  Interval out{bt * range->lo, bt * range->hi};
  const double tol = 1e-9 * std::max(1.0, bt);
  if (out.length() < tol) {
    const double mid = 0.5 * (out.lo + out.hi);
    out = {std::abs(mid) < tol ? 0.0 : mid, std::abs(mid) < tol ? 0.0 : mid};
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// CSV loaders

namespace {

std::vector<std::vector<double>> read_csv(const std::string& path, const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open density file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("density file '" + path + "' is empty");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) {
      c.erase(std::remove_if(c.begin(), c.end(), [](unsigned char ch) { return std::isspace(ch); }), c.end());
      cols.push_back(c);
    }
  }
  if (cols != header) throw InvalidArgument("density file '" + path + "' has an unexpected header");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string c;
    std::vector<double> row;
    while (std::getline(ss, c, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
      } catch (const std::exception&) {
        throw InvalidArgument("non-numeric entry in '" + path + "'");
      }
    }
    if (row.size() != header.size()) throw InvalidArgument("wrong column count in '" + path + "'");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Marginal load_tabulated_1d(const std::string& path) {
  auto rows = read_csv(path, {"x", "density"});
  std::sort(rows.begin(), rows.end());
  std::vector<double> x, d;
  for (const auto& r : rows) {
    x.push_back(r[0]);
    d.push_back(r[1]);
  }
  return Marginal::tabulated(std::move(x), std::move(d));
}

SourceModel load_tabulated_2d(const std::string& path) {
  auto rows = read_csv(path, {"x1", "x2", "density"});
  std::sort(rows.begin(), rows.end());
  std::vector<double> x1, x2;
  for (const auto& r : rows) {
    if (x1.empty() || r[0] != x1.back()) x1.push_back(r[0]);
  }
  for (const auto& r : rows) {
    if (r[0] != x1.front()) break;
    x2.push_back(r[1]);
  }
  if (rows.size() != x1.size() * x2.size()) throw InvalidArgument("2D density file is not a full grid");
  std::vector<double> d(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i][1] != x2[i % x2.size()]) throw InvalidArgument("2D density file is not a full grid");
    d[i] = rows[i][2];
  }
  return SourceModel::tabulated_2d(std::move(x1), std::move(x2), std::move(d));
}

}  // namespace cheaptalk
