#pragma once

// Chunked Monte Carlo and quadrature kernels.
//
// Draws are generated in fixed-size chunks, each from its own substream keyed by
// (seed, chunk index). Every chunk owns an accumulator and the caller merges them in chunk
// order, so results are bit-identical for any number of OpenMP threads. The serial variants
// run the identical chunk loop without the pragma and are what the tests compare against.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "cheaptalk/sources.hpp"

namespace cheaptalk {

inline constexpr std::size_t kChunkRows = 4096;

enum class Execution { parallel, serial };

inline std::size_t chunk_count(std::size_t rows) { return (rows + kChunkRows - 1) / kChunkRows; }

// Fills `out` with the draws of chunk `chunk` (rows * n values).
void draw_chunk(const SourceModel& source, std::uint64_t seed, std::size_t chunk,
                std::size_t rows, std::span<double> out);

// Chunks processed between two merges; bounds the number of live accumulators.
inline constexpr std::size_t kChunkBatch = 64;

// Runs visit(acc, row, global_row_index) over `count` draws with one accumulator per chunk, and
// folds the accumulators into a single result in chunk order.
template <class Acc, class MakeAcc, class Visit>
Acc fold_chunks(const SourceModel& source, std::size_t count, std::uint64_t seed,
                MakeAcc make_acc, Visit visit, Execution execution = Execution::parallel) {
  const std::size_t n = source.dimension();
  const std::size_t chunks = chunk_count(count);
  Acc total = make_acc();
  std::vector<Acc> partial;

  for (std::size_t batch = 0; batch < chunks; batch += kChunkBatch) {
    const std::size_t width = std::min(kChunkBatch, chunks - batch);
    partial.clear();
    for (std::size_t c = 0; c < width; ++c) partial.push_back(make_acc());

    const auto body = [&](std::size_t offset) {
      const std::size_t c = batch + offset;
      const std::size_t first = c * kChunkRows;
      const std::size_t rows = std::min(kChunkRows, count - first);
      std::vector<double> buffer(rows * n);
      draw_chunk(source, seed, c, rows, buffer);
      for (std::size_t r = 0; r < rows; ++r)
        visit(partial[offset], std::span<const double>(buffer.data() + r * n, n), first + r);
    };

    const auto w = static_cast<std::int64_t>(width);
    if (execution == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
      for (std::int64_t c = 0; c < w; ++c) body(static_cast<std::size_t>(c));
    } else {
      for (std::int64_t c = 0; c < w; ++c) body(static_cast<std::size_t>(c));
    }
    for (auto& acc : partial) total.merge(acc);
  }
  return total;
}

template <class Acc>
Acc merge_in_order(std::vector<Acc>& partial) {
  Acc out = std::move(partial.front());
  for (std::size_t c = 1; c < partial.size(); ++c) out.merge(partial[c]);
  return out;
}

// Running sums of a scalar quantity.
struct Moments {
  double weight = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double x, double w = 1.0) {
    weight += w;
    sum += w * x;
    sum_sq += w * x * x;
    ++count;
  }
  void merge(const Moments& o) {
    weight += o.weight;
    sum += o.sum;
    sum_sq += o.sum_sq;
    count += o.count;
  }
  double mean() const { return weight > 0.0 ? sum / weight : 0.0; }
  double variance() const {
    if (count < 2 || weight <= 0.0) return 0.0;
    const double m = mean();
    const double v = sum_sq / weight - m * m;
    return std::max(0.0, v) * static_cast<double>(count) / static_cast<double>(count - 1);
  }
  double std_error() const {
    return count < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(count));
  }
};

// Per-bin weighted moments of (m - shift_k), with shift_k a reference point per bin (usually
// the bin's current action) so that residuals are accumulated without cancellation.
struct BinStats {
  std::size_t bins = 0;
  std::size_t n = 0;
  std::vector<double> shift;   // bins * n
  std::vector<double> weight;  // bins
  std::vector<std::size_t> count;
  std::vector<double> first;   // bins * n
  std::vector<double> second;  // bins * n * n

  BinStats() = default;
  BinStats(std::size_t bins_, std::size_t n_, std::vector<double> shift_)
      : bins(bins_),
        n(n_),
        shift(std::move(shift_)),
        weight(bins_, 0.0),
        count(bins_, 0),
        first(bins_ * n_, 0.0),
        second(bins_ * n_ * n_, 0.0) {
    if (shift.empty()) shift.assign(bins * n, 0.0);
  }

  void add(std::size_t bin, std::span<const double> m, double w = 1.0) {
    weight[bin] += w;
    ++count[bin];
    double* f = first.data() + bin * n;
    double* s = second.data() + bin * n * n;
    const double* c = shift.data() + bin * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double di = m[i] - c[i];
      f[i] += w * di;
      for (std::size_t j = 0; j < n; ++j) s[i * n + j] += w * di * (m[j] - c[j]);
    }
  }

  void merge(const BinStats& o) {
    for (std::size_t k = 0; k < bins; ++k) {
      weight[k] += o.weight[k];
      count[k] += o.count[k];
    }
    for (std::size_t i = 0; i < first.size(); ++i) first[i] += o.first[i];
    for (std::size_t i = 0; i < second.size(); ++i) second[i] += o.second[i];
  }

  double total_weight() const {
    double s = 0.0;
    for (double w : weight) s += w;
    return s;
  }
  // E[m - shift | bin]
  std::vector<double> residual(std::size_t bin) const {
    std::vector<double> r(n, 0.0);
    if (weight[bin] <= 0.0) return r;
    for (std::size_t i = 0; i < n; ++i) r[i] = first[bin * n + i] / weight[bin];
    return r;
  }
  std::vector<double> mean(std::size_t bin) const {
    auto r = residual(bin);
    for (std::size_t i = 0; i < n; ++i) r[i] += shift[bin * n + i];
    return r;
  }
  // Within-bin covariance (unbiased for unit weights).
  std::vector<double> covariance(std::size_t bin) const {
    std::vector<double> cov(n * n, 0.0);
    if (weight[bin] <= 0.0) return cov;
    const auto r = residual(bin);
    const double w = weight[bin];
    const double correction =
        count[bin] > 1 ? static_cast<double>(count[bin]) / static_cast<double>(count[bin] - 1)
                       : 1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        cov[i * n + j] = (second[bin * n * n + i * n + j] / w - r[i] * r[j]) * correction;
    return cov;
  }
};

// Bin statistics of an encoder over Monte Carlo draws. encode(m) returns a bin in [0, bins).
template <class Encode>
BinStats mc_bin_stats(const SourceModel& source, const Budget& budget, std::size_t bins,
                      const std::vector<double>& shift, Encode encode,
                      Execution execution = Execution::parallel) {
  const std::size_t n = source.dimension();
  return fold_chunks<BinStats>(
      source, budget.samples, budget.seed, [&] { return BinStats(bins, n, shift); },
      [&](BinStats& acc, std::span<const double> m, std::size_t) { acc.add(encode(m), m); },
      execution);
}

// Serial reference: materialise every draw, then accumulate raw sums row by row.
template <class Encode>
BinStats reference_bin_stats(const SourceModel& source, const Budget& budget, std::size_t bins,
                             const std::vector<double>& shift, Encode encode) {
  const std::size_t n = source.dimension();
  const std::vector<double> draws = sample(source, budget.samples, budget.seed);
  BinStats acc(bins, n, shift);
  for (std::size_t r = 0; r < budget.samples; ++r) {
    std::span<const double> m(draws.data() + r * n, n);
    acc.add(encode(m), m);
  }
  return acc;
}

// Visits leaf cells [first_cell, last_cell) of an adaptive tensor grid over `box` (flat index,
// first axis fastest). A cell whose corners all encode to the same bin is accepted whole (bins
// are convex); mixed cells are split up to `depth` times and then assigned by their midpoint.
// visit(bin, centroid, mass) with the cell's probability and centroid.
template <class Encode, class Visit>
void visit_quadrature_cells(const SourceModel& source, const std::vector<Interval>& box,
                            std::size_t cells_per_axis, int depth, Encode encode, Visit visit,
                            std::size_t first_cell, std::size_t last_cell) {
  const std::size_t n = box.size();
  const std::size_t corners = std::size_t{1} << n;
  const bool iid = source.is_iid();
  const Interval support = iid ? source.marginal().support() : Interval{};
  std::vector<double> width(n);
  for (std::size_t i = 0; i < n; ++i)
    width[i] = box[i].length() / static_cast<double>(cells_per_axis);

  auto recurse = [&](auto&& self, const std::vector<double>& cell_lo,
                     const std::vector<double>& cell_w, int level) -> void {
    std::vector<double> p(n);
    std::size_t first_bin = 0;
    bool uniform = true;
    for (std::size_t k = 0; k < corners && uniform; ++k) {
      for (std::size_t i = 0; i < n; ++i) p[i] = cell_lo[i] + (((k >> i) & 1U) ? cell_w[i] : 0.0);
      const std::size_t bin = encode(std::span<const double>(p));
      if (k == 0)
        first_bin = bin;
      else
        uniform = bin == first_bin;
    }
    if (uniform || level >= depth) {
      // Outer cells of an iid source reach to the true support, so no mass is truncated.
      std::vector<double> lo(cell_lo), hi(n);
      for (std::size_t i = 0; i < n; ++i) {
        hi[i] = cell_lo[i] + cell_w[i];
        if (!iid) continue;
        const double slack = 1e-12 * box[i].length();
        if (cell_lo[i] <= box[i].lo + slack) lo[i] = support.lo;
        if (hi[i] >= box[i].hi - slack) hi[i] = support.hi;
      }
      const double w = source.cell_mass(lo, hi, p);
      if (!(w > 0.0)) return;
      std::size_t bin = first_bin;
      if (!uniform) {
        std::vector<double> mid(n);
        for (std::size_t i = 0; i < n; ++i) mid[i] = cell_lo[i] + 0.5 * cell_w[i];
        bin = encode(std::span<const double>(mid));
      }
      visit(bin, std::span<const double>(p), w);
      return;
    }
    std::vector<double> half(n), sub_lo(n);
    for (std::size_t i = 0; i < n; ++i) half[i] = 0.5 * cell_w[i];
    for (std::size_t k = 0; k < corners; ++k) {
      for (std::size_t i = 0; i < n; ++i) sub_lo[i] = cell_lo[i] + (((k >> i) & 1U) ? half[i] : 0.0);
      self(self, sub_lo, half, level + 1);
    }
  };

  std::vector<double> lo(n);
  for (std::size_t flat = first_cell; flat < last_cell; ++flat) {
    std::size_t rest = flat;
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = box[i].lo + static_cast<double>(rest % cells_per_axis) * width[i];
      rest /= cells_per_axis;
    }
    recurse(recurse, lo, width, 0);
  }
}

// Quadrature bin statistics over the truncated support box. Blocks of cells are processed in
// parallel, one accumulator per block, merged in order.
template <class Encode>
BinStats quadrature_bin_stats(const SourceModel& source, std::size_t bins,
                              const std::vector<double>& shift, std::size_t cells_per_axis,
                              int depth, Encode encode,
                              Execution execution = Execution::parallel) {
  const std::size_t n = source.dimension();
  const std::vector<Interval> box = source.truncated_box();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= cells_per_axis;
  const std::size_t block = n == 1 ? total : total / cells_per_axis;
  const std::size_t blocks = (total + block - 1) / block;
  std::vector<BinStats> partial(blocks, BinStats(bins, n, shift));

  const auto body = [&](std::size_t b) {
    BinStats& acc = partial[b];
    visit_quadrature_cells(
        source, box, cells_per_axis, depth, encode,
        [&](std::size_t bin, std::span<const double> m, double w) { acc.add(bin, m, w); },
        b * block, std::min(total, (b + 1) * block));
  };

  const auto count = static_cast<std::int64_t>(blocks);
  if (execution == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t b = 0; b < count; ++b) body(static_cast<std::size_t>(b));
  } else {
    for (std::int64_t b = 0; b < count; ++b) body(static_cast<std::size_t>(b));
  }
  return merge_in_order(partial);
}

}  // namespace cheaptalk
