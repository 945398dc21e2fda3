#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cheaptalk/sources.hpp"

namespace cheaptalk {

// Rate in bits per dimension with encoder and decoder distortions per dimension.
struct RDTuple {
  double rate = 0.0;
  double encoder_distortion = 0.0;
  double decoder_distortion = 0.0;
};

// Gaussian rate-distortion function max(0, log2(var / D) / 2).
double team_rate_distortion(double variance, double distortion);

// Game tuple reached from a team-achievable pair by the same code: (R, D + b^2, D).
RDTuple achievable_tuple(double team_rate, double team_distortion, double bias,
                         std::optional<double> variance = {});

// Upper bound on the rate of an equilibrium code meeting (De, Dd); empty when no equilibrium
// code can meet them (min(Dd, De - b^2) <= 0).
std::optional<double> game_rate_bound(double variance, double bias, double encoder_distortion,
                                      double decoder_distortion);

struct AsymptoticRow {
  std::size_t n = 0;
  double rate = 0.0;
  EstimateWithError decoder;  // J^d / n
  EstimateWithError encoder;  // J^e / n
  EstimateWithError gap;      // J^e / n - J^d / n
  double decoder_exact = 0.0;
  double quantizer_distortion = 0.0;
};

// Gaussian source of dimension n: Helmert-decouple, quantize the n-1 unbiased coordinates with a
// 2^R-level Lloyd-Max quantizer and send nothing about the biased one. `bias` is the common
// per-coordinate entry of b = (bias, ..., bias).
std::vector<AsymptoticRow> asymptotic_experiment(double variance, double bias, unsigned rate_bits,
                                                 std::span<const std::size_t> dimensions,
                                                 std::size_t samples, std::uint64_t seed);

}  // namespace cheaptalk
