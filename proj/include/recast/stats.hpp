#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "recast/text.hpp"

namespace recast {

struct PairedSample {
  double x = 0.0;
  double y = 0.0;
};

struct KendallResult {
  double tau = 0.0;
  std::uint64_t concordant = 0;
  std::uint64_t discordant = 0;
  std::uint64_t ties_x = 0;     // pairs tied in x only
  std::uint64_t ties_y = 0;     // pairs tied in y only
  std::uint64_t ties_both = 0;  // excluded from every term
  double z = 0.0;
  double p_value = 1.0;  // two-sided, asymptotic normal approximation
};

// Tau-b in O(n log n). Throws kInvalidArgument for fewer than two samples or
// non-finite values, kUndefinedCorrelation when x or y is constant.
KendallResult kendall_tau_b(std::span<const PairedSample> samples);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Wald interval p +/- z sqrt(p(1-p)/n), clamped to [0, 1].
Interval binomial_ci(std::uint64_t successes, std::uint64_t trials,
                     double z = 1.96);

// Normal-approximation halfwidth z * s / sqrt(n) for a sample mean; 0 for
// fewer than two values.
double mean_ci_halfwidth(std::span<const double> values, double z = 1.96);

using TokenScorer = std::function<std::vector<double>(const Document&)>;

struct ExplainerReport {
  double mean_overlap = 0.0;
  double overlap_ci_halfwidth = 0.0;
  double cutoff_a = 0.0;
  double cutoff_b = 0.0;
  std::size_t texts = 0;
  std::size_t compared = 0;  // texts flagged by at least one method
  std::vector<double> per_text_overlap;  // compared texts only
  std::chrono::duration<double, std::milli> mean_latency_a{0};
  std::chrono::duration<double, std::milli> mean_latency_b{0};
};

ExplainerReport compare_explainers(const std::vector<std::string>& corpus,
                                   const TokenScorer& method_a,
                                   const TokenScorer& method_b,
                                   double cutoff_a);

struct LabelRow {
  std::string id;
  double original_label = 0.0;
  double edit_label = 0.0;
  std::string condition;
};

// Delimiter-separated `id, original_label, edit_label, condition` rows;
// comma or tab, optional header row.
std::vector<LabelRow> parse_labels(std::string_view content);

struct ConditionReport {
  std::string condition;
  std::size_t n = 0;
  bool tau_defined = false;
  KendallResult kendall;
  std::uint64_t original_toxic = 0;
  std::uint64_t edit_toxic = 0;
  Interval original_ci;
  Interval edit_ci;
};

struct LabelsReport {
  double toxic_threshold = 4.0;
  double z = 1.96;
  std::vector<ConditionReport> conditions;  // sorted by name

  std::string to_text() const;
  std::string to_json() const;
};

LabelsReport analyze_labels(const std::vector<LabelRow>& rows,
                            double toxic_threshold = 4.0, double z = 1.96);

}  // namespace recast
