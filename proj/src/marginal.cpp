#include <algorithm>
#include <boost/math/distributions/laplace.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "cheaptalk/errors.hpp"
#include "cheaptalk/sources.hpp"

namespace cheaptalk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Mass of (za, zb) under the standard normal, accurate in both tails.
double std_normal_mass(double za, double zb) {
  if (za >= 0.0) return 0.5 * (std::erfc(za / std::numbers::sqrt2) - std::erfc(zb / std::numbers::sqrt2));
  if (zb <= 0.0) return 0.5 * (std::erfc(-zb / std::numbers::sqrt2) - std::erfc(-za / std::numbers::sqrt2));
  return 1.0 - 0.5 * std::erfc(-za / std::numbers::sqrt2) - 0.5 * std::erfc(zb / std::numbers::sqrt2);
}

// E[X | a < X < b] for a rate-1 exponential restricted to [0, inf), with 0 <= a < b.
double unit_exponential_interval_mean(double a, double b) {
  if (std::isinf(b)) return a + 1.0;
  const double d = b - a;
  return a + 1.0 - d / std::expm1(d);
}

double unit_exponential_interval_mass(double a, double b) {
  if (std::isinf(b)) return std::exp(-a);
  return std::exp(-a) * -std::expm1(-(b - a));
}

}  // namespace

Marginal Marginal::gaussian(double mean, double variance) {
  if (!(variance > 0.0) || !std::isfinite(mean) || !std::isfinite(variance))
    throw InvalidArgument("gaussian needs finite mean and positive variance");
  Marginal m;
  m.kind_ = Kind::gaussian;
  m.p0_ = mean;
  m.p1_ = variance;
  return m;
}

Marginal Marginal::uniform(double lo, double hi) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw InvalidArgument("uniform needs finite lo < hi");
  Marginal m;
  m.kind_ = Kind::uniform;
  m.p0_ = lo;
  m.p1_ = hi;
  return m;
}

Marginal Marginal::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidArgument("exponential needs rate > 0");
  Marginal m;
  m.kind_ = Kind::exponential;
  m.p0_ = rate;
  m.p1_ = 0.0;
  return m;
}

Marginal Marginal::laplace(double location, double scale) {
  if (!(scale > 0.0) || !std::isfinite(location) || !std::isfinite(scale))
    throw InvalidArgument("laplace needs finite location and scale > 0");
  Marginal m;
  m.kind_ = Kind::laplace;
  m.p0_ = location;
  m.p1_ = scale;
  return m;
}

Marginal Marginal::tabulated(std::vector<double> centers, std::vector<double> density) {
  if (centers.size() < 2 || centers.size() != density.size())
    throw InvalidArgument("tabulated density needs >= 2 grid points with one density each");
  const double h = centers[1] - centers[0];
  if (!(h > 0.0)) throw InvalidArgument("tabulated grid must be increasing");
  for (std::size_t i = 1; i < centers.size(); ++i) {
    if (std::abs(centers[i] - centers[0] - static_cast<double>(i) * h) > 1e-9 * std::max(1.0, std::abs(centers[i])))
      throw InvalidArgument("tabulated grid must be uniform");
  }
  double total = 0.0;
  for (double d : density) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("tabulated density must be nonnegative");
    total += d * h;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw InvalidArgument("tabulated density integrates to " + std::to_string(total) + ", not 1");
  Marginal m;
  m.kind_ = Kind::tabulated;
  m.p0_ = centers[0];
  m.p1_ = h;
  m.density_ = std::move(density);
  m.cell_cdf_.resize(m.density_.size());
  m.cell_moment_.resize(m.density_.size());
  double mass = 0.0;
  double moment = 0.0;
  for (std::size_t i = 0; i < m.density_.size(); ++i) {
    const double lo = m.p0_ + (static_cast<double>(i) - 0.5) * h;
    const double hi = lo + h;
    mass += m.density_[i] * h / total;
    moment += m.density_[i] / total * 0.5 * (hi * hi - lo * lo);
    m.cell_cdf_[i] = mass;
    m.cell_moment_[i] = moment;
    m.density_[i] /= total;
  }
  return m;
}

Interval Marginal::support() const {
  switch (kind_) {
    case Kind::gaussian:
    case Kind::laplace:
      return {-kInf, kInf};
    case Kind::uniform:
      return {p0_, p1_};
    case Kind::exponential:
      return {0.0, kInf};
    case Kind::tabulated:
      return {p0_ - 0.5 * p1_, p0_ + (static_cast<double>(density_.size()) - 0.5) * p1_};
  }
  return {};
}

Interval Marginal::truncated_support(double eps) const {
  Interval s = support();
  if (std::isinf(s.lo)) s.lo = quantile(eps);
  if (std::isinf(s.hi)) s.hi = quantile(1.0 - eps);
  return s;
}

double Marginal::pdf(double x) const {
  switch (kind_) {
    case Kind::gaussian: {
      const double sd = std::sqrt(p1_);
      return std_normal_pdf((x - p0_) / sd) / sd;
    }
    case Kind::uniform:
      return (x >= p0_ && x <= p1_) ? 1.0 / (p1_ - p0_) : 0.0;
    case Kind::exponential:
      return x >= 0.0 ? p0_ * std::exp(-p0_ * x) : 0.0;
    case Kind::laplace:
      return std::exp(-std::abs(x - p0_) / p1_) / (2.0 * p1_);
    case Kind::tabulated: {
      const Interval s = support();
      if (x < s.lo || x >= s.hi) return 0.0;
      const auto i = static_cast<std::size_t>((x - s.lo) / p1_);
      return density_[std::min(i, density_.size() - 1)];
    }
  }
  return 0.0;
}

double Marginal::cdf(double x) const {
  switch (kind_) {
    case Kind::gaussian:
      return 0.5 * std::erfc(-(x - p0_) / std::sqrt(2.0 * p1_));
    case Kind::uniform:
      return std::clamp((x - p0_) / (p1_ - p0_), 0.0, 1.0);
    case Kind::exponential:
      return x <= 0.0 ? 0.0 : -std::expm1(-p0_ * x);
    case Kind::laplace:
      return x < p0_ ? 0.5 * std::exp((x - p0_) / p1_) : 1.0 - 0.5 * std::exp(-(x - p0_) / p1_);
    case Kind::tabulated: {
      const Interval s = support();
      if (x <= s.lo) return 0.0;
      if (x >= s.hi) return 1.0;
      const auto i = std::min(static_cast<std::size_t>((x - s.lo) / p1_), density_.size() - 1);
      const double cell_lo = s.lo + static_cast<double>(i) * p1_;
      const double before = i == 0 ? 0.0 : cell_cdf_[i - 1];
      return before + density_[i] * (x - cell_lo);
    }
  }
  return 0.0;
}

double Marginal::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return support().lo;
    if (p == 1.0) return support().hi;
    throw InvalidArgument("quantile level must lie in [0, 1]");
  }
  switch (kind_) {
    case Kind::gaussian:
      return boost::math::quantile(boost::math::normal(p0_, std::sqrt(p1_)), p);
    case Kind::uniform:
      return p0_ + p * (p1_ - p0_);
    case Kind::exponential:
      return -std::log1p(-p) / p0_;
    case Kind::laplace:
      return boost::math::quantile(boost::math::laplace(p0_, p1_), p);
    case Kind::tabulated: {
      const auto it = std::lower_bound(cell_cdf_.begin(), cell_cdf_.end(), p);
      const auto i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
          it - cell_cdf_.begin(), static_cast<std::ptrdiff_t>(density_.size()) - 1));
      const double before = i == 0 ? 0.0 : cell_cdf_[i - 1];
      const double cell_lo = support().lo + static_cast<double>(i) * p1_;
      return density_[i] > 0.0 ? cell_lo + (p - before) / density_[i] : cell_lo;
    }
  }
  return 0.0;
}

double Marginal::mean() const {
  switch (kind_) {
    case Kind::gaussian:
    case Kind::laplace:
      return p0_;
    case Kind::uniform:
      return 0.5 * (p0_ + p1_);
    case Kind::exponential:
      return 1.0 / p0_;
    case Kind::tabulated:
      return cell_moment_.back();
  }
  return 0.0;
}

double Marginal::variance() const {
  switch (kind_) {
    case Kind::gaussian:
      return p1_;
    case Kind::laplace:
      return 2.0 * p1_ * p1_;
    case Kind::uniform:
      return (p1_ - p0_) * (p1_ - p0_) / 12.0;
    case Kind::exponential:
      return 1.0 / (p0_ * p0_);
    case Kind::tabulated: {
      const double mu = mean();
      double v = 0.0;
      const double lo0 = support().lo;
      for (std::size_t i = 0; i < density_.size(); ++i) {
        const double a = lo0 + static_cast<double>(i) * p1_ - mu;
        const double b = a + p1_;
        v += density_[i] * (b * b * b - a * a * a) / 3.0;
      }
      return v;
    }
  }
  return 0.0;
}

double Marginal::interval_mass(double a, double b) const {
  const Interval s = support();
  a = std::max(a, s.lo);
  b = std::min(b, s.hi);
  if (!(b > a)) return 0.0;
  switch (kind_) {
    case Kind::gaussian: {
      const double sd = std::sqrt(p1_);
      return std_normal_mass((a - p0_) / sd, (b - p0_) / sd);
    }
    case Kind::exponential:
      return unit_exponential_interval_mass(a * p0_, b * p0_);
    case Kind::laplace: {
      double mass = 0.0;
      if (b > p0_) {
        const double lo = std::max(a, p0_);
        mass += 0.5 * unit_exponential_interval_mass((lo - p0_) / p1_, (b - p0_) / p1_);
      }
      if (a < p0_) {
        const double hi = std::min(b, p0_);
        mass += 0.5 * unit_exponential_interval_mass((p0_ - hi) / p1_, (p0_ - a) / p1_);
      }
      return mass;
    }
    default:
      return cdf(b) - cdf(a);
  }
}

double Marginal::interval_mean(double a, double b) const {
  const Interval s = support();
  a = std::max(a, s.lo);
  b = std::min(b, s.hi);
  if (!(b > a)) throw InvalidArgument("interval_mean of an interval outside the support");
  switch (kind_) {
    case Kind::gaussian: {
      const double sd = std::sqrt(p1_);
      const double za = (a - p0_) / sd;
      const double zb = (b - p0_) / sd;
      const double mass = std_normal_mass(za, zb);
      if (!(mass > 0.0)) return 0.5 * (std::max(a, -1e300) + std::min(b, 1e300));
      const double pa = std::isinf(za) ? 0.0 : std_normal_pdf(za);
      const double pb = std::isinf(zb) ? 0.0 : std_normal_pdf(zb);
      return p0_ + sd * (pa - pb) / mass;
    }
    case Kind::uniform:
      return 0.5 * (a + b);
    case Kind::exponential:
      return unit_exponential_interval_mean(a * p0_, b * p0_) / p0_;
    case Kind::laplace: {
      double mass = 0.0;
      double moment = 0.0;
      if (b > p0_) {
        const double lo = (std::max(a, p0_) - p0_) / p1_;
        const double hi = (b - p0_) / p1_;
        const double w = 0.5 * unit_exponential_interval_mass(lo, hi);
        mass += w;
        moment += w * (p0_ + p1_ * unit_exponential_interval_mean(lo, hi));
      }
      if (a < p0_) {
        const double lo = (p0_ - std::min(b, p0_)) / p1_;
        const double hi = (p0_ - a) / p1_;
        const double w = 0.5 * unit_exponential_interval_mass(lo, hi);
        mass += w;
        moment += w * (p0_ - p1_ * unit_exponential_interval_mean(lo, hi));
      }
      return moment / mass;
    }
    case Kind::tabulated: {
      auto partial = [&](double x, double& mass, double& moment) {
        const Interval sup = support();
        if (x <= sup.lo) {
          mass = moment = 0.0;
          return;
        }
        if (x >= sup.hi) {
          mass = cell_cdf_.back();
          moment = cell_moment_.back();
          return;
        }
        const auto i = std::min(static_cast<std::size_t>((x - sup.lo) / p1_), density_.size() - 1);
        const double cell_lo = sup.lo + static_cast<double>(i) * p1_;
        mass = (i == 0 ? 0.0 : cell_cdf_[i - 1]) + density_[i] * (x - cell_lo);
        moment = (i == 0 ? 0.0 : cell_moment_[i - 1]) + density_[i] * 0.5 * (x * x - cell_lo * cell_lo);
      };
      double ma, mb, ga, gb;
      partial(a, ma, ga);
      partial(b, mb, gb);
      if (!(mb - ma > 0.0)) throw InvalidArgument("interval_mean of a zero-mass interval");
      return (gb - ga) / (mb - ma);
    }
  }
  return 0.0;
}

std::vector<double> Marginal::kinks() const {
  if (kind_ == Kind::laplace) return {p0_};
  return {};
}

std::optional<bool> Marginal::analytic_symmetric() const {
  switch (kind_) {
    case Kind::gaussian:
    case Kind::uniform:
    case Kind::laplace:
      return true;
    case Kind::exponential:
      return false;
    case Kind::tabulated:
      return std::nullopt;
  }
  return std::nullopt;
}

double Marginal::draw(Rng& rng) const {
  switch (kind_) {
    case Kind::gaussian:
      return p0_ + std::sqrt(p1_) * rng.normal();
    case Kind::uniform:
      return p0_ + (p1_ - p0_) * rng.uniform();
    case Kind::exponential:
      return rng.exponential() / p0_;
    case Kind::laplace: {
      const double u = rng.uniform();
      return u < 0.5 ? p0_ + p1_ * std::log(2.0 * u) : p0_ - p1_ * std::log(2.0 * (1.0 - u));
    }
    case Kind::tabulated:
      return quantile(rng.uniform());
  }
  return 0.0;
}

}  // namespace cheaptalk
