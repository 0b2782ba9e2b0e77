#include "recast/explanation.hpp"

#include <cmath>
#include <string>

#include "recast/error.hpp"

namespace recast {

void Thresholds::validate() const {
  if (!(attn_cutoff > 0.0 && attn_cutoff < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "attn_cutoff must lie in (0, 1)");
  }
  if (!(alt_toxicity_max > 0.0 && alt_toxicity_max < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "alt_toxicity_max must lie in (0, 1)");
  }
  if (knn < 1) throw Error(ErrorCode::kInvalidArgument, "knn must be >= 1");
  if (mlm_topk < 1) {
    throw Error(ErrorCode::kInvalidArgument, "mlm_topk must be >= 1");
  }
}

FlagSet flag_tokens(std::span<const double> attention, double cutoff) {
  FlagSet flags;
  for (std::size_t i = 0; i < attention.size(); ++i) {
    if (attention[i] > cutoff) flags.push_back(i);
  }
  return flags;
}

CalibrationResult calibrate_cutoff(std::span<const double> source_samples,
                                   std::span<const double> target_samples,
                                   double source_cutoff) {
  if (source_samples.empty() || target_samples.empty()) {
    throw Error(ErrorCode::kEmptyDistribution, "calibration needs samples");
  }
  const auto finite = [](std::span<const double> xs) {
    for (double x : xs) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  if (!finite(source_samples) || !finite(target_samples)) {
    throw Error(ErrorCode::kInvalidArgument, "samples must be finite");
  }

  const std::size_t n_source = source_samples.size();
  const std::size_t n_target = target_samples.size();
  std::size_t at_or_below = 0;
  for (double x : source_samples) {
    if (x <= source_cutoff) ++at_or_below;
  }

  // rank = max(0, ceil(p * n_target) - 1) with p = at_or_below / n_source,
  // evaluated in integers.
  const std::size_t ceil_rank = (at_or_below * n_target + n_source - 1) / n_source;
  const std::size_t rank = ceil_rank == 0 ? 0 : ceil_rank - 1;

  std::vector<double> sorted(target_samples.begin(), target_samples.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank),
                   sorted.end());

  CalibrationResult result;
  result.source_cutoff = source_cutoff;
  result.source_percentile =
      static_cast<double>(at_or_below) / static_cast<double>(n_source);
  result.mapped_cutoff = sorted[rank];
  return result;
}

double score_span(const Document& doc, Span span, const Backend& backend) {
  return backend.score(doc.span_text(span));
}

}  // namespace recast
