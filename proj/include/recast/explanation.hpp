#pragma once

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <set>
#include <span>
#include <vector>

#include "recast/backend.hpp"
#include "recast/text.hpp"

namespace recast {

struct Thresholds {
  double attn_cutoff = 0.2;
  double alt_toxicity_max = 0.4;
  std::size_t knn = 10;
  std::size_t mlm_topk = 20;

  // Throws kInvalidArgument when a field is outside its admissible range.
  void validate() const;
};

// Sorted token indices flagged for one text under one explanation method.
using FlagSet = std::vector<std::size_t>;

// Indices whose weight is strictly greater than the cutoff.
FlagSet flag_tokens(std::span<const double> attention, double cutoff);

// |X n Y| / min(|X|, |Y|) over two sorted, duplicate-free ranges; 0 when
// either is empty.
template <typename Range>
double overlap_sorted(const Range& x, const Range& y) {
  const auto nx = static_cast<std::size_t>(std::distance(std::begin(x), std::end(x)));
  const auto ny = static_cast<std::size_t>(std::distance(std::begin(y), std::end(y)));
  if (nx == 0 || ny == 0) return 0.0;
  std::size_t common = 0;
  auto a = std::begin(x);
  auto b = std::begin(y);
  while (a != std::end(x) && b != std::end(y)) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++common;
      ++a;
      ++b;
    }
  }
  return static_cast<double>(common) / static_cast<double>(std::min(nx, ny));
}

template <typename T>
double overlap(const std::set<T>& x, const std::set<T>& y) {
  return overlap_sorted(x, y);
}

inline double overlap(const FlagSet& x, const FlagSet& y) {
  return overlap_sorted(x, y);
}

struct CalibrationResult {
  double source_cutoff = 0.0;
  double source_percentile = 0.0;
  double mapped_cutoff = 0.0;
};

// Maps a cutoff on the source score distribution to the target distribution
// at the same empirical percentile, using the nearest-rank quantile.
CalibrationResult calibrate_cutoff(std::span<const double> source_samples,
                                   std::span<const double> target_samples,
                                   double source_cutoff);

// Score of the span's raw substring taken as standalone text.
double score_span(const Document& doc, Span span, const Backend& backend);

}  // namespace recast
