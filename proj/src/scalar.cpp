#include <algorithm>
#include <cmath>
#include <limits>

#include "cheaptalk/equilibrium.hpp"
#include "cheaptalk/errors.hpp"

namespace cheaptalk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Bins of a bounded support shorter than this fraction of its width make a solution degenerate.
constexpr double kDegenerateLength = 1e-12;

// The law of X or of -X. Shooting starts from the light tail, which is the left one after
// reflecting when the bias is positive.
struct LawView {
  const Marginal& law;
  bool flip = false;

  Interval support() const {
    const Interval s = law.support();
    return flip ? Interval{-s.hi, -s.lo} : s;
  }
  double mass(double a, double b) const {
    return flip ? law.interval_mass(-b, -a) : law.interval_mass(a, b);
  }
  double mean(double a, double b) const {
    return flip ? -law.interval_mean(-b, -a) : law.interval_mean(a, b);
  }
  double variance() const { return law.variance(); }
};

double safe_mean(const LawView& law, double a, double b) {
  if (!(b > a) || !(law.mass(a, b) > 0.0)) return kNaN;
  return law.mean(a, b);
}

// Smallest x > left with E[M | left < M < x] >= target; the caller guarantees that the
// conditional mean above `left` exceeds the target.
double right_end_for_mean(const LawView& law, double left, double target, const Interval& range) {
  double lo = left;
  double hi = range.hi;
  if (std::isinf(hi)) {
    const double scale = std::sqrt(law.variance());
    double step = scale;
    hi = std::max(left, target) + step;
    for (int i = 0; i < 200; ++i) {
      const double m = safe_mean(law, left, hi);
      if (m >= target) break;
      step *= 2.0;
      hi = std::max(left, target) + step;
    }
  }
  for (int i = 0; i < 400; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double m = safe_mean(law, left, mid);
    if (std::isnan(m) || m < target)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

enum class Verdict { too_small, too_large, complete };

struct Shot {
  Verdict verdict = Verdict::too_small;
  double residual = 0.0;
  std::vector<double> bounds;
  std::vector<double> levels;
};

Shot shoot(const LawView& law, double beta, std::size_t bins, double first_boundary) {
  const Interval range = law.support();
  Shot s;
  s.bounds.push_back(first_boundary);
  const double u1 = safe_mean(law, range.lo, first_boundary);
  if (std::isnan(u1)) return s;
  s.levels.push_back(u1);
  for (std::size_t k = 1; k < bins; ++k) {
    const double l = s.bounds.back();
    const double next = 2.0 * (l - beta) - s.levels.back();
    const double above = safe_mean(law, l, range.hi);
    if (!(next > l)) {
      s.verdict = Verdict::too_small;
      return s;
    }
    if (std::isnan(above)) {
      s.verdict = Verdict::too_large;
      return s;
    }
    s.levels.push_back(next);
    if (k + 1 == bins) {
      s.residual = next - above;
      s.verdict = s.residual > 0.0 ? Verdict::too_large : Verdict::complete;
      return s;
    }
    if (next >= above) {
      s.verdict = Verdict::too_large;
      return s;
    }
    s.bounds.push_back(right_end_for_mean(law, l, next, range));
  }
  return s;
}

std::optional<ScalarEquilibrium> try_solve(const Marginal& marginal, double beta, std::size_t bins) {
  ScalarEquilibrium eq;
  eq.beta = beta;
  if (bins == 1) {
    eq.codebook.levels = {marginal.mean()};
    eq.masses = {1.0};
    return eq;
  }
  const LawView law{marginal, beta > 0.0};
  const double b = law.flip ? -beta : beta;
  const Interval range = law.support();
  // Unbounded ends are cut where the remaining mass underflows.
  const double center = law.flip ? -marginal.mean() : marginal.mean();
  const double reach = 40.0 * std::sqrt(law.variance());
  double lo = std::isinf(range.lo) ? center - reach : range.lo;
  double hi = std::isinf(range.hi) ? center + reach : range.hi;
  for (int i = 0; i < 400; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (shoot(law, b, bins, mid).verdict == Verdict::too_large)
      hi = mid;
    else
      lo = mid;
  }
  // The last bin's centroid residual changes sign across the bracket; take the smaller side.
  const double scale = std::sqrt(law.variance());
  std::optional<Shot> best;
  for (double l1 : {lo, hi}) {
    Shot s = shoot(law, b, bins, l1);
    if (s.levels.size() != bins) continue;
    if (!best || std::abs(s.residual) < std::abs(best->residual)) best = std::move(s);
  }
  if (!best || std::abs(best->residual) > 1e-8 * scale) return std::nullopt;

  if (law.flip) {
    std::reverse(best->bounds.begin(), best->bounds.end());
    std::reverse(best->levels.begin(), best->levels.end());
    for (double& x : best->bounds) x = -x;
    for (double& x : best->levels) x = -x;
  }
  const Interval support = marginal.support();
  eq.codebook.thresholds = best->bounds;
  eq.codebook.levels = best->levels;
  eq.residual = std::abs(best->residual);
  double left = support.lo;
  for (std::size_t i = 0; i < bins; ++i) {
    const double right = i + 1 < bins ? best->bounds[i] : support.hi;
    eq.masses.push_back(marginal.interval_mass(left, right));
    left = right;
  }
  // Tail bins of unbounded laws may be extremely light but must keep positive mass.
  for (double m : eq.masses)
    if (!(m > 0.0)) return std::nullopt;
  if (std::isfinite(support.length())) {
    double prev = support.lo;
    for (std::size_t i = 0; i <= best->bounds.size(); ++i) {
      const double next = i < best->bounds.size() ? best->bounds[i] : support.hi;
      if (next - prev < kDegenerateLength * support.length()) return std::nullopt;
      prev = next;
    }
  }
  return eq;
}

}  // namespace

std::size_t ScalarCodebook::encode(double x) const {
  return static_cast<std::size_t>(std::lower_bound(thresholds.begin(), thresholds.end(), x) -
                                  thresholds.begin());
}

ActionSet ScalarEquilibrium::actions() const {
  std::vector<Point> pts;
  for (double y : codebook.levels) pts.push_back({y});
  return ActionSet(pts);
}

ScalarEquilibrium solve_scalar_biased(const Marginal& law, double beta, std::size_t bins) {
  if (bins == 0) throw InvalidArgument("number of bins must be positive");
  if (!std::isfinite(beta)) throw InvalidArgument("bias must be finite");
  if (auto eq = try_solve(law, beta, bins)) return *eq;
  std::size_t feasible = bins - 1;
  while (feasible > 1 && !try_solve(law, beta, feasible)) --feasible;
  throw Infeasible("no " + std::to_string(bins) + "-bin equilibrium exists; at most " +
                       std::to_string(feasible) + " bins are feasible",
                   feasible);
}

ScalarEquilibrium solve_scalar_biased(const SourceModel& source, double beta, std::size_t bins) {
  if (source.dimension() != 1) throw DimensionMismatch(1, source.dimension());
  return solve_scalar_biased(source.marginal(), beta, bins);
}

}  // namespace cheaptalk
