#include "cheaptalk/ratedist.hpp"

#include <algorithm>
#include <cmath>

#include "cheaptalk/equilibrium.hpp"
#include "cheaptalk/errors.hpp"
#include "cheaptalk/montecarlo.hpp"
#include "cheaptalk/transforms.hpp"

namespace cheaptalk {

double team_rate_distortion(double variance, double distortion) {
  if (!(variance > 0.0)) throw InvalidArgument("variance must be positive");
  if (!(distortion > 0.0)) throw InvalidArgument("distortion must be positive");
  return std::max(0.0, 0.5 * std::log2(variance / distortion));
}

RDTuple achievable_tuple(double team_rate, double team_distortion, double bias,
                         std::optional<double> variance) {
  if (!(team_rate >= 0.0) || !(team_distortion > 0.0) || !std::isfinite(bias))
    throw InvalidArgument("team pair needs R >= 0 and D > 0");
  if (variance) {
    const double needed = team_rate_distortion(*variance, team_distortion);
    if (team_rate < needed - 1e-12 * std::max(1.0, needed))
      throw InvalidArgument("team pair lies below the rate-distortion function");
  }
  return {team_rate, team_distortion + bias * bias, team_distortion};
}

std::optional<double> game_rate_bound(double variance, double bias, double encoder_distortion,
                                      double decoder_distortion) {
  if (!(variance > 0.0)) throw InvalidArgument("variance must be positive");
  if (!(encoder_distortion > 0.0) || !(decoder_distortion > 0.0))
    throw InvalidArgument("distortions must be positive");
  const double effective = std::min(decoder_distortion, encoder_distortion - bias * bias);
  if (!(effective > 0.0)) return std::nullopt;
  if (effective > variance) return 0.0;
  return 0.5 * std::log2(variance / effective);
}

namespace {

struct RowAccumulator {
  Moments decoder, encoder, gap;
  std::vector<double> scratch;

  void merge(const RowAccumulator& o) {
    decoder.merge(o.decoder);
    encoder.merge(o.encoder);
    gap.merge(o.gap);
  }
};

EstimateWithError estimate(const Moments& m) {
  EstimateWithError e;
  e.value = {m.mean()};
  e.std_error = m.std_error();
  e.component_std_error = {e.std_error};
  e.sample_count = m.count;
  return e;
}

}  // namespace

std::vector<AsymptoticRow> asymptotic_experiment(double variance, double bias, unsigned rate_bits,
                                                 std::span<const std::size_t> dimensions,
                                                 std::size_t samples, std::uint64_t seed) {
  if (!(variance > 0.0)) throw InvalidArgument("variance must be positive");
  if (rate_bits == 0 || rate_bits > 16) throw InvalidArgument("rate must be 1..16 bits per dimension");
  if (samples < 2) throw BudgetExhausted("asymptotic experiment needs at least two draws");
  const Marginal law = Marginal::gaussian(0.0, variance);
  const ScalarEquilibrium lloyd = solve_scalar_biased(law, 0.0, std::size_t{1} << rate_bits);
  // Distortion of the scalar quantizer: var - sum p_i y_i^2 for centroid levels of a zero-mean law.
  double quantizer = variance;
  for (std::size_t i = 0; i < lloyd.masses.size(); ++i)
    quantizer -= lloyd.masses[i] * lloyd.codebook.levels[i] * lloyd.codebook.levels[i];

  std::vector<AsymptoticRow> rows;
  for (std::size_t n : dimensions) {
    if (n < 2) throw InvalidArgument("dimensions must be at least 2");
    const LinearTransform h = helmert_transform(n);
    const SourceModel source = SourceModel::iid_gaussian(n, 0.0, variance);
    const double per_dim = 1.0 / static_cast<double>(n);
    RowAccumulator acc = fold_chunks<RowAccumulator>(
        source, samples, seed + n,
        [&] { return RowAccumulator{{}, {}, {}, std::vector<double>(2 * n)}; },
        [&](RowAccumulator& a, std::span<const double> m, std::size_t) {
          double* y = a.scratch.data();
          double* u = a.scratch.data() + n;
          for (std::size_t k = 0; k < n; ++k) {
            double x = 0.0;
            for (std::size_t j = 0; j < n; ++j)
              x += h.forward(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * m[j];
            y[k] = k + 1 < n ? lloyd.codebook.levels[lloyd.codebook.encode(x)] : 0.0;
          }
          double jd = 0.0, je = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            u[i] = 0.0;
            for (std::size_t k = 0; k < n; ++k)
              u[i] += h.inverse(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * y[k];
            const double d = m[i] - u[i];
            jd += d * d;
            je += (d - bias) * (d - bias);
          }
          a.decoder.add(jd * per_dim);
          a.encoder.add(je * per_dim);
          a.gap.add((je - jd) * per_dim);
        });
    AsymptoticRow row;
    row.n = n;
    row.rate = static_cast<double>(rate_bits);
    row.decoder = estimate(acc.decoder);
    row.encoder = estimate(acc.encoder);
    row.gap = estimate(acc.gap);
    row.quantizer_distortion = quantizer;
    row.decoder_exact = (static_cast<double>(n - 1) * quantizer + variance) / static_cast<double>(n);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cheaptalk
