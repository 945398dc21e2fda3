#include "cheaptalk/equilibrium.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "cheaptalk/errors.hpp"
#include "cheaptalk/montecarlo.hpp"

namespace cheaptalk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Largest action set that is enumerated for pairwise and deviation checks.
constexpr std::uint64_t kMaxEnumerated = 8192;
// Largest number of bins in the pooled centroid test before messages are coarsened.
constexpr std::uint64_t kMaxCentroidBins = 8192;

double sup_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

EstimateWithError scalar_estimate(const Moments& m) {
  EstimateWithError e;
  e.value = {m.mean()};
  e.std_error = m.std_error();
  e.component_std_error = {e.std_error};
  e.sample_count = m.count;
  return e;
}

// Cells of an L-level uniform grid over the truncated support; the outer cells extend to the
// true support ends. Levels are exact cell centroids and thresholds the midpoints between them.
ScalarCodebook grid_codebook(const Marginal& law, std::size_t levels) {
  const Interval cut = law.truncated_support();
  const Interval full = law.support();
  const double h = cut.length() / static_cast<double>(levels);
  ScalarCodebook cb;
  for (std::size_t j = 0; j < levels; ++j) {
    const double lo = j == 0 ? full.lo : cut.lo + static_cast<double>(j) * h;
    const double hi = j + 1 == levels ? full.hi : cut.lo + static_cast<double>(j + 1) * h;
    if (!(law.interval_mass(lo, hi) > 0.0)) continue;
    cb.levels.push_back(law.interval_mean(lo, hi));
  }
  for (std::size_t j = 1; j < cb.levels.size(); ++j)
    cb.thresholds.push_back(0.5 * (cb.levels[j - 1] + cb.levels[j]));
  return cb;
}

std::size_t nearest_level(const std::vector<double>& levels, double target) {
  const auto it = std::lower_bound(levels.begin(), levels.end(), target);
  if (it == levels.begin()) return 0;
  if (it == levels.end()) return levels.size() - 1;
  const auto hi = static_cast<std::size_t>(it - levels.begin());
  return target - levels[hi - 1] <= levels[hi] - target ? hi - 1 : hi;
}

void check_dimensions(std::size_t n, const SourceModel& source, const BiasVector& b) {
  if (source.dimension() != n) throw DimensionMismatch(n, source.dimension());
  if (b.size() != n) throw DimensionMismatch(n, b.size());
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// EncoderPolicy

EncoderPolicy EncoderPolicy::quantizer(ActionSet actions) {
  if (actions.empty()) throw InvalidArgument("quantizer needs at least one action");
  EncoderPolicy p;
  p.kind_ = Kind::quantizer;
  p.actions_ = std::move(actions);
  return p;
}

EncoderPolicy EncoderPolicy::linear(LinearTransform transform, std::vector<ScalarCodebook> codebooks,
                                    std::vector<std::size_t> revealed, std::size_t grid_levels) {
  const std::size_t n = transform.dimension();
  if (codebooks.size() != n) throw DimensionMismatch(n, codebooks.size());
  for (const auto& cb : codebooks) {
    if (cb.levels.empty() || cb.thresholds.size() + 1 != cb.levels.size())
      throw InvalidArgument("malformed scalar codebook");
    if (!std::is_sorted(cb.levels.begin(), cb.levels.end()) ||
        !std::is_sorted(cb.thresholds.begin(), cb.thresholds.end()))
      throw InvalidArgument("codebook levels and thresholds must be increasing");
  }
  for (std::size_t k : revealed)
    if (k + 1 >= n) throw InvalidArgument("only the first n-1 transformed coordinates can be revealed");
  EncoderPolicy p;
  p.kind_ = codebooks.back().size() > 1 ? Kind::linear_plus_quantizer : Kind::linear_reveal;
  p.radix_.resize(n);
  std::uint64_t place = 1;
  for (std::size_t k = 0; k < n; ++k) {
    p.radix_[k] = place;
    const auto size = static_cast<std::uint64_t>(codebooks[k].size());
    if (place > (std::uint64_t{1} << 62) / size)
      throw InvalidArgument("policy has too many messages to index");
    place *= size;
  }
  p.transform_ = std::move(transform);
  p.codebooks_ = std::move(codebooks);
  p.revealed_ = std::move(revealed);
  p.grid_levels_ = grid_levels;
  return p;
}

std::size_t EncoderPolicy::dimension() const {
  return kind_ == Kind::quantizer ? actions_.dimension() : transform_.dimension();
}

std::uint64_t EncoderPolicy::message_count() const {
  if (kind_ == Kind::quantizer) return actions_.size();
  return radix_.back() * codebooks_.back().size();
}

std::uint64_t EncoderPolicy::encode(std::span<const double> m, const BiasVector& b) const {
  if (kind_ == Kind::quantizer) return assign_action(m, actions_, b);
  const std::size_t n = dimension();
  std::uint64_t msg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double x = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      x += transform_.forward(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * m[j];
    msg += radix_[k] * codebooks_[k].encode(x);
  }
  return msg;
}

void EncoderPolicy::decode(std::uint64_t message, std::span<double> out) const {
  const std::size_t n = dimension();
  if (kind_ == Kind::quantizer) {
    const auto u = actions_[static_cast<std::size_t>(message)];
    std::copy(u.begin(), u.end(), out.begin());
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>((message / radix_[k]) % codebooks_[k].size());
    const double y = codebooks_[k].levels[idx];
    for (std::size_t i = 0; i < n; ++i)
      out[i] += transform_.inverse(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * y;
  }
}

Point EncoderPolicy::decode(std::uint64_t message) const {
  Point u(dimension());
  decode(message, u);
  return u;
}

ActionSet EncoderPolicy::enumerate_actions() const {
  if (kind_ == Kind::quantizer) return actions_;
  const std::uint64_t count = message_count();
  if (count > (std::uint64_t{1} << 22)) throw InvalidArgument("too many actions to enumerate");
  const std::size_t n = dimension();
  std::vector<double> flat(static_cast<std::size_t>(count) * n);
  for (std::uint64_t msg = 0; msg < count; ++msg)
    decode(msg, std::span<double>(flat.data() + msg * n, n));
  return ActionSet(n, std::move(flat));
}

// ---------------------------------------------------------------------------------------------
// Best-response iteration

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
  if (max_iterations == 0) throw InvalidArgument("max_iterations must be positive");
  if (budget.samples == 0) throw InvalidArgument("sample budget must be positive");
}

ActionSet best_response_step(const ActionSet& actions, const SourceModel& source,
                             const BiasVector& b, const Budget& budget, double damping) {
  if (actions.empty()) throw InvalidArgument("action set is empty");
  const std::size_t n = actions.dimension();
  check_dimensions(n, source, b);
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
  const std::size_t bins = actions.size();
  std::vector<double> centroid(bins * n);

  EstimationMethod method = budget.method;
  if (method == EstimationMethod::automatic)
    method = n <= 3 ? EstimationMethod::quadrature : EstimationMethod::monte_carlo;

  if (n == 1 && method == EstimationMethod::quadrature) {
    // Bins are intervals between consecutive sorted actions, shifted by the bias.
    std::vector<std::size_t> order(bins);
    for (std::size_t i = 0; i < bins; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return actions[x][0] < actions[y][0]; });
    const Marginal& law = source.marginal();
    for (std::size_t j = 0; j < bins; ++j) {
      const std::size_t k = order[j];
      const double lo = j == 0 ? -kInf : 0.5 * (actions[order[j - 1]][0] + actions[k][0]) + b[0];
      const double hi = j + 1 == bins ? kInf : 0.5 * (actions[k][0] + actions[order[j + 1]][0]) + b[0];
      const double mass = hi > lo ? law.interval_mass(lo, hi) : 0.0;
      if (!(mass >= kMinRegionMass)) throw BinDeath(k, mass);
      centroid[k] = law.interval_mean(lo, hi);
    }
  } else {
    const std::vector<double> shift(actions.flat().begin(), actions.flat().end());
    auto encode = [&](std::span<const double> m) { return assign_action(m, actions, b); };
    BinStats stats;
    if (method == EstimationMethod::quadrature) {
      if (n > 3) throw InvalidArgument("grid quadrature is limited to n <= 3");
      const std::size_t cells = budget.quadrature_cells ? budget.quadrature_cells : (n == 2 ? 512 : 64);
      stats = quadrature_bin_stats(source, bins, shift, cells, budget.refine_depth, encode);
    } else {
      stats = mc_bin_stats(source, budget, bins, shift, encode);
    }
    const double total = stats.total_weight();
    for (std::size_t k = 0; k < bins; ++k) {
      const double mass = total > 0.0 ? stats.weight[k] / total : 0.0;
      if (!(mass >= kMinRegionMass)) throw BinDeath(k, mass);
      const auto c = stats.mean(k);
      std::copy(c.begin(), c.end(), centroid.begin() + static_cast<std::ptrdiff_t>(k * n));
    }
  }

  std::vector<double> next(actions.flat().begin(), actions.flat().end());
  for (std::size_t i = 0; i < next.size(); ++i) next[i] += damping * (centroid[i] - next[i]);
  return ActionSet(n, std::move(next));
}

namespace {

ActionSet initial_actions(const SourceModel& source, const BiasVector& b, std::size_t bins,
                          const SolverConfig& config, std::size_t restart) {
  const std::size_t n = source.dimension();
  const Point mu = source.mean();
  const std::size_t count = 20'000;
  const std::vector<double> draws = sample(source, count, config.budget.seed ^ 0x1a17ULL);
  std::vector<double> flat(bins * n);

  if (config.init == InitScheme::random) {
    Rng rng(config.budget.seed, 0x7a3dULL + restart);
    for (std::size_t k = 0; k < bins; ++k) {
      const auto r = static_cast<std::size_t>(rng.uniform() * static_cast<double>(count)) % count;
      std::copy_n(draws.begin() + static_cast<std::ptrdiff_t>(r * n), n,
                  flat.begin() + static_cast<std::ptrdiff_t>(k * n));
    }
  } else {
    Eigen::VectorXd d(static_cast<Eigen::Index>(n));
    if (!b.is_zero()) {
      for (std::size_t i = 0; i < n; ++i) d[static_cast<Eigen::Index>(i)] = b[i];
      d.normalize();
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(source.covariance());
      d = eig.eigenvectors().col(static_cast<Eigen::Index>(n) - 1);
    }
    std::vector<double> proj(count);
    double center = 0.0;
    for (std::size_t i = 0; i < n; ++i) center += d[static_cast<Eigen::Index>(i)] * mu[i];
    for (std::size_t r = 0; r < count; ++r) {
      double p = 0.0;
      for (std::size_t i = 0; i < n; ++i) p += d[static_cast<Eigen::Index>(i)] * draws[r * n + i];
      proj[r] = p;
    }
    std::sort(proj.begin(), proj.end());
    for (std::size_t k = 0; k < bins; ++k) {
      const double level = bins == 1 ? center
                                     : proj[static_cast<std::size_t>((static_cast<double>(k) + 0.5) /
                                                                     static_cast<double>(bins) *
                                                                     static_cast<double>(count))];
      for (std::size_t i = 0; i < n; ++i)
        flat[k * n + i] = mu[i] + (level - center) * d[static_cast<Eigen::Index>(i)];
    }
  }
  if (restart > 0) {
    Rng rng(config.budget.seed, 0x6a17ULL + restart);
    const double spread = 0.1 * std::sqrt(source.covariance().diagonal().maxCoeff());
    for (double& v : flat) v += spread * rng.normal();
  }
  return ActionSet(n, std::move(flat));
}

}  // namespace

FixedPointResult solve_fixed_point(const SourceModel& source, const BiasVector& b, std::size_t bins,
                                   const SolverConfig& config) {
  config.validate();
  if (bins == 0) throw InvalidArgument("number of bins must be positive");
  check_dimensions(source.dimension(), source, b);

  for (std::size_t restart = 0;; ++restart) {
    FixedPointResult result;
    result.restarts = restart;
    result.final_damping = config.damping;
    ActionSet actions = initial_actions(source, b, bins, config, restart);
    std::deque<ActionSet> history;
    try {
      for (std::size_t it = 1; it <= config.max_iterations; ++it) {
        ActionSet next = best_response_step(actions, source, b, config.budget, result.final_damping);
        const double move = sup_distance(next.flat(), actions.flat());
        result.movement.push_back(move);
        result.iterations = it;
        if (move < config.tolerance) {
          result.actions = std::move(next);
          result.converged = true;
          return result;
        }
        // An iterate returning close to an earlier one signals a cycle; halve the step once.
        if (result.final_damping > 0.5) {
          for (std::size_t lag = 1; lag < history.size(); ++lag) {
            const ActionSet& past = history[history.size() - 1 - lag];
            if (sup_distance(next.flat(), past.flat()) < 0.1 * move) {
              result.final_damping = 0.5;
              break;
            }
          }
        }
        history.push_back(actions);
        if (history.size() > 8) history.pop_front();
        actions = std::move(next);
      }
      result.actions = std::move(actions);
      return result;
    } catch (const BinDeath&) {
      if (restart >= config.max_restarts) throw;
    }
  }
}

// ---------------------------------------------------------------------------------------------
// Reveal plus quantize

EncoderPolicy construct_reveal_plus_quantize(const SourceModel& source, const BiasVector& b,
                                             std::size_t last_bins, std::size_t grid_levels) {
  const std::size_t n = source.dimension();
  check_dimensions(n, source, b);
  if (n < 2) throw InvalidArgument("reveal-plus-quantize needs n >= 2");
  if (b.is_zero()) throw InvalidArgument("reveal-plus-quantize needs a nonzero bias");
  if (!source.is_iid()) throw InvalidArgument("reveal-plus-quantize needs an iid source");
  if (last_bins == 0) throw InvalidArgument("number of bins must be positive");
  if (grid_levels < 2) throw InvalidArgument("grid needs at least two levels");

  const auto coords = b.coords();
  const bool equal = std::all_of(coords.begin(), coords.end(), [&](double c) { return c == coords[0]; });
  const bool antisymmetric = n == 2 && coords[0] == -coords[1];
  const bool single_axis = std::count(coords.begin(), coords.end(), 0.0) == static_cast<std::ptrdiff_t>(n - 1);

  if (!source.is_gaussian()) {
    const Marginal& law = source.marginal();
    const auto flag = law.analytic_symmetric();
    const bool symmetric = flag ? *flag : symmetry_deviation(law) < kSymmetryThreshold;
    if (n != 2)
      throw InvalidArgument("non-gaussian sources are supported for n = 2 only");
    if (!(antisymmetric || single_axis || (equal && symmetric)))
      throw InvalidArgument(
          "no linear equilibrium construction for this source and bias (needs a gaussian source, "
          "a single biased axis, b1 = -b2, or equal bias with a symmetric marginal)");
    if (last_bins > 1 && !single_axis)
      throw InvalidArgument("quantizing the biased coordinate of a non-gaussian source is only "
                            "supported when the bias lies on one axis");
  }

  LinearTransform t = equal ? helmert_transform(b) : bias_aligning_transform(b);
  const double beta = t.transformed_bias[static_cast<Eigen::Index>(n) - 1];
  std::vector<ScalarCodebook> books;
  std::vector<std::size_t> revealed;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    Eigen::VectorXd row = t.forward.row(static_cast<Eigen::Index>(k)).transpose();
    books.push_back(grid_codebook(source.projected_marginal(std::span<const double>(row.data(), n)), grid_levels));
    revealed.push_back(k);
  }
  Eigen::VectorXd last = t.forward.row(static_cast<Eigen::Index>(n) - 1).transpose();
  if (last_bins == 1) {
    const Point mu = source.mean();
    double level = 0.0;
    for (std::size_t i = 0; i < n; ++i) level += last[static_cast<Eigen::Index>(i)] * mu[i];
    books.push_back(ScalarCodebook{{}, {level}});
  } else {
    const Marginal law = source.projected_marginal(std::span<const double>(last.data(), n));
    books.push_back(solve_scalar_biased(law, beta, last_bins).codebook);
  }
  return EncoderPolicy::linear(std::move(t), std::move(books), std::move(revealed), grid_levels);
}

// ---------------------------------------------------------------------------------------------
// Verification

namespace {

// Coarse bin of a message for the pooled centroid test. Coarsening groups neighbouring grid
// cells; by the tower property the centroid condition must still hold on each group.
struct BinMap {
  std::size_t bins = 0;
  bool coarsened = false;
  std::vector<std::uint64_t> radix, size, groups, coarse_radix;

  std::size_t operator()(std::uint64_t msg) const {
    if (!coarsened) return static_cast<std::size_t>(msg);
    std::uint64_t out = 0;
    for (std::size_t k = 0; k < radix.size(); ++k) {
      const std::uint64_t idx = (msg / radix[k]) % size[k];
      out += coarse_radix[k] * (idx * groups[k] / size[k]);
    }
    return static_cast<std::size_t>(out);
  }
};

BinMap make_bin_map(const EncoderPolicy& policy) {
  BinMap map;
  const std::uint64_t count = policy.message_count();
  if (policy.kind() == EncoderPolicy::Kind::quantizer || count <= kMaxCentroidBins) {
    map.bins = static_cast<std::size_t>(count);
    return map;
  }
  map.coarsened = true;
  const auto& books = policy.codebooks();
  std::uint64_t fixed = 1;
  std::size_t free_axes = 0;
  for (std::size_t k = 0; k < books.size(); ++k) {
    const bool grid = std::find(policy.revealed().begin(), policy.revealed().end(), k) != policy.revealed().end();
    if (grid)
      ++free_axes;
    else
      fixed *= books[k].size();
  }
  const double room = static_cast<double>(kMaxCentroidBins) / static_cast<double>(fixed);
  const auto per_axis = static_cast<std::uint64_t>(
      std::max(1.0, std::floor(std::pow(room, 1.0 / static_cast<double>(std::max<std::size_t>(1, free_axes))) + 1e-9)));
  std::uint64_t place = 1;
  std::uint64_t radix = 1;
  for (std::size_t k = 0; k < books.size(); ++k) {
    const bool grid = std::find(policy.revealed().begin(), policy.revealed().end(), k) != policy.revealed().end();
    const std::uint64_t size = books[k].size();
    const std::uint64_t groups = grid ? std::min(per_axis, size) : size;
    map.radix.push_back(radix);
    map.size.push_back(size);
    map.groups.push_back(groups);
    map.coarse_radix.push_back(place);
    radix *= size;
    place *= groups;
  }
  map.bins = static_cast<std::size_t>(place);
  return map;
}

struct PassAccumulator {
  BinStats bins;
  Moments encoder, decoder, gap;
  std::vector<double> action;

  void merge(const PassAccumulator& o) {
    bins.merge(o.bins);
    encoder.merge(o.encoder);
    decoder.merge(o.decoder);
    gap.merge(o.gap);
  }
};

PassAccumulator centroid_pass(const EncoderPolicy& policy, const SourceModel& source,
                              const BiasVector& b, const Budget& budget, const BinMap& map) {
  const std::size_t n = source.dimension();
  const double per_dim = 1.0 / static_cast<double>(n);
  return fold_chunks<PassAccumulator>(
      source, budget.samples, budget.seed,
      [&] { return PassAccumulator{BinStats(map.bins, n, {}), {}, {}, {}, std::vector<double>(2 * n)}; },
      [&](PassAccumulator& acc, std::span<const double> m, std::size_t) {
        const std::uint64_t msg = policy.encode(m, b);
        std::span<double> u(acc.action.data(), n);
        std::span<double> d(acc.action.data() + n, n);
        policy.decode(msg, u);
        for (std::size_t i = 0; i < n; ++i) d[i] = m[i] - u[i];
        acc.bins.add(map(msg), d);
        const double je = encoder_cost(m, u, b);
        const double jd = decoder_cost(m, u);
        acc.encoder.add(je * per_dim);
        acc.decoder.add(jd * per_dim);
        acc.gap.add(je - jd);
      });
}

Distortions finish_distortions(const PassAccumulator& acc, const BiasVector& b) {
  Distortions d;
  d.encoder = scalar_estimate(acc.encoder);
  d.decoder = scalar_estimate(acc.decoder);
  d.gap = scalar_estimate(acc.gap);
  d.bias_norm_sq = b.norm_sq();
  d.identity_holds = std::abs(d.gap.value[0] - d.bias_norm_sq) <=
                     3.0 * d.gap.std_error + 1e-12 * std::max(1.0, d.bias_norm_sq);
  return d;
}

CentroidCheck finish_centroids(const BinStats& stats, bool coarsened) {
  CentroidCheck c;
  c.coarsened = coarsened;
  const double total = stats.total_weight();
  const std::size_t n = stats.n;
  double variance = 0.0;
  for (std::size_t k = 0; k < stats.bins; ++k) {
    if (stats.count[k] == 0) continue;
    if (stats.count[k] < 2) {
      ++c.bins_skipped;
      continue;
    }
    ++c.bins_checked;
    const auto r = stats.residual(k);
    const auto cov = stats.covariance(k);
    double r2 = 0.0, trace = 0.0, frob = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      r2 += r[i] * r[i];
      trace += cov[i * n + i];
      for (std::size_t j = 0; j < n; ++j) frob += cov[i * n + j] * cov[i * n + j];
    }
    c.excess += stats.weight[k] / total * r2 - trace / total;
    variance += 2.0 * frob;
    if (std::sqrt(r2) > c.max_residual) {
      c.max_residual = std::sqrt(r2);
      c.max_residual_std_error = std::sqrt(trace / static_cast<double>(stats.count[k]));
    }
  }
  c.std_error = std::sqrt(variance) / total;
  c.pass = c.excess <= 3.0 * c.std_error + 1e-12;
  return c;
}

}  // namespace

EquilibriumCertificate verify_equilibrium(const EncoderPolicy& policy, const SourceModel& source,
                                          const BiasVector& b, const VerifyOptions& options) {
  const std::size_t n = policy.dimension();
  check_dimensions(n, source, b);
  if (options.budget.samples < 1000 || options.deviation_samples < 100)
    throw BudgetExhausted("verification needs at least 1000 draws and 100 deviation draws");

  EquilibriumCertificate cert;
  cert.grid_levels = policy.grid_levels();
  cert.slack_tolerance = options.slack_tolerance;
  const std::uint64_t messages = policy.message_count();
  const bool enumerable = messages <= kMaxEnumerated;
  ActionSet all;
  if (enumerable) all = policy.enumerate_actions();

  // Pairwise geometric condition.
  if (enumerable) {
    cert.min_pairwise_geo_slack = min_pairwise_geo_slack(all, b);
    cert.pairs_checked = static_cast<std::size_t>(messages * (messages - 1) / 2);
  } else {
    cert.pairs_sampled = true;
    cert.min_pairwise_geo_slack = kInf;
    Rng rng(options.budget.seed, 0x5ac7ULL);
    const auto& books = policy.codebooks();
    std::uint64_t last_radix = messages / books.back().size();
    for (std::size_t p = 0; p < options.sampled_pairs; ++p) {
      const auto a = static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(messages)) % messages;
      std::uint64_t c;
      if (p % 2 == 0 && books.back().size() > 1) {
        // Same revealed cells, different last-coordinate bin: the pairs the bias can separate.
        const std::uint64_t base = a % last_radix;
        const auto j = static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(books.back().size())) %
                       books.back().size();
        c = base + j * last_radix;
      } else {
        c = static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(messages)) % messages;
      }
      if (a == c) continue;
      cert.min_pairwise_geo_slack =
          std::min(cert.min_pairwise_geo_slack, geo_slack(policy.decode(a), policy.decode(c), b));
      ++cert.pairs_checked;
    }
  }
  cert.slack_pass = cert.min_pairwise_geo_slack >= -options.slack_tolerance;

  // Centroid conditions and distortions from one pass over the draws.
  const BinMap map = make_bin_map(policy);
  const PassAccumulator acc = centroid_pass(policy, source, b, options.budget, map);
  cert.centroid = finish_centroids(acc.bins, map.coarsened);
  cert.distortions = finish_distortions(acc, b);

  // Encoder deviations: the best report against the decoder's fixed interpretation.
  const std::vector<double> draws =
      sample(source, options.deviation_samples, options.budget.seed ^ 0xdea1ULL);
  std::vector<double> gains(options.deviation_samples);
  Eigen::VectorXd b_t;
  if (!enumerable) {
    Eigen::VectorXd bv(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) bv[static_cast<Eigen::Index>(i)] = b[i];
    b_t = policy.transform().forward * bv;
  }
  const auto rows = static_cast<std::int64_t>(options.deviation_samples);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    std::span<const double> m(draws.data() + static_cast<std::size_t>(r) * n, n);
    const Point u = policy.decode(policy.encode(m, b));
    const double assigned = encoder_cost(m, u, b);
    double best = kInf;
    if (enumerable) {
      for (std::size_t k = 0; k < all.size(); ++k) best = std::min(best, encoder_cost(m, all[k], b));
    } else {
      // Costs separate across transformed coordinates, so the best report is found per axis.
      const auto& t = policy.transform();
      best = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        double x = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          x += t.forward(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * m[j];
        const double target = x - b_t[static_cast<Eigen::Index>(k)];
        const auto& levels = policy.codebooks()[k].levels;
        const double diff = target - levels[nearest_level(levels, target)];
        best += diff * diff;
      }
      best /= t.scale;
    }
    gains[static_cast<std::size_t>(r)] = assigned - best;
  }
  Moments gain;
  for (double g : gains) gain.add(g);
  cert.deviation_gain = scalar_estimate(gain);
  cert.deviation_pass = gain.mean() <= 3.0 * gain.std_error() + 1e-12;
  return cert;
}

Distortions expected_distortions(const EncoderPolicy& policy, const SourceModel& source,
                                 const BiasVector& b, const Budget& budget) {
  check_dimensions(policy.dimension(), source, b);
  if (budget.samples < 2) throw BudgetExhausted("distortion estimates need at least two draws");
  BinMap single;
  single.bins = 1;
  single.coarsened = true;  // every message maps to bin 0
  return finish_distortions(centroid_pass(policy, source, b, budget, single), b);
}

// ---------------------------------------------------------------------------------------------
// Linear equilibria in two dimensions

LinearEquilibriumReport verify_linear_equilibrium(const SourceModel& source, const BiasVector& b,
                                                  const Budget& budget, std::size_t curve_points) {
  check_dimensions(2, source, b);
  if (b.is_zero()) throw InvalidArgument("linear equilibrium check needs a nonzero bias");
  if (curve_points < 2) throw InvalidArgument("curve needs at least two grid points");
  LinearEquilibriumReport report;
  const double b1 = b[0], b2 = b[1];
  const double b_tilde = b1 * b1 + b2 * b2;

  // (a) flat conditional mean of the biased coordinate.
  const std::vector<double> grid = default_curve_grid(source, b, curve_points);
  report.curve = conditional_mean_curve(source, b, grid, budget);
  std::vector<double> significant(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& e = report.curve[i].estimate;
    const double v = e.value[0];
    const double z = e.std_error > 0.0 ? std::abs(v) / e.std_error : (v == 0.0 ? 0.0 : kInf);
    report.max_abs_z = std::max(report.max_abs_z, z);
    if (z > 3.0) significant[i] = v;
  }
  report.constant_curve = report.max_abs_z <= 3.0;

  // (b) coverage of the conditional support by the revealed coordinate.
  const double w[2] = {-b2, b1};
  const Interval reach = source.projected_marginal(std::span<const double>(w, 2)).truncated_support();
  std::vector<double> x2s;
  {
    const std::vector<double> draws = sample(source, 20'000, budget.seed ^ 0xc0feULL);
    for (std::size_t r = 0; r < 20'000; ++r) x2s.push_back(b1 * draws[2 * r] + b2 * draws[2 * r + 1]);
    std::sort(x2s.begin(), x2s.end());
  }
  report.coverage = 1.0;
  for (double q : {0.25, 0.5, 0.75}) {
    const double kappa = x2s[static_cast<std::size_t>(q * static_cast<double>(x2s.size() - 1))];
    const Interval s = conditional_support(source, b, kappa);
    if (!(s.length() > 0.0)) continue;
    const double overlap = std::max(0.0, std::min(s.hi, reach.hi) - std::max(s.lo, reach.lo));
    report.coverage = std::min(report.coverage, overlap / s.length());
  }
  report.covers_support = report.coverage >= 1.0 - 1e-6;

  // (c) the encoder reports its own X1 against the decoder's reading of the curve.
  const std::size_t reports = 201;
  const double lo = grid.front(), hi = grid.back();
  report.report_resolution = (hi - lo) / static_cast<double>(reports - 1);
  std::vector<double> z(reports), shift(reports);
  for (std::size_t j = 0; j < reports; ++j) {
    z[j] = lo + static_cast<double>(j) * report.report_resolution;
    const auto it = std::upper_bound(grid.begin(), grid.end(), z[j]);
    const std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - grid.begin(), 1), grid.size() - 1);
    const double f = (z[j] - grid[i - 1]) / (grid[i] - grid[i - 1]);
    shift[j] = (1.0 - f) * significant[i - 1] + f * significant[i];
  }
  const Point mu = source.mean();
  const double x2_mean = b1 * mu[0] + b2 * mu[1];
  const std::vector<double> draws = sample(source, 20'000, budget.seed ^ 0xdec0ULL);
  std::size_t used = 0, moved = 0;
  for (std::size_t r = 0; r < 20'000; ++r) {
    const double m1 = draws[2 * r], m2 = draws[2 * r + 1];
    const double x1 = b1 * m2 - b2 * m1;
    const double x2 = b1 * m1 + b2 * m2;
    if (x1 < lo || x1 > hi) continue;
    ++used;
    double best = kInf, best_z = x1;
    for (std::size_t j = 0; j < reports; ++j) {
      const double e1 = x1 - z[j];
      const double e2 = x2 - (x2_mean + shift[j]) - b_tilde;
      const double cost = e1 * e1 + e2 * e2;
      if (cost < best) {
        best = cost;
        best_z = z[j];
      }
    }
    const double gap = std::abs(best_z - x1);
    report.max_report_gap = std::max(report.max_report_gap, gap);
    if (gap > report.report_resolution * (1.0 + 1e-9)) ++moved;
  }
  report.deviation_fraction = used ? static_cast<double>(moved) / static_cast<double>(used) : 0.0;
  report.no_deviation = moved == 0;
  return report;
}

}  // namespace cheaptalk
