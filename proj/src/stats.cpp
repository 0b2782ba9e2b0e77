#include "recast/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "recast/error.hpp"
#include "recast/explanation.hpp"

namespace recast {
namespace {

struct TieSums {
  std::uint64_t pairs = 0;  // sum t(t-1)/2
  double cubic = 0.0;       // sum t(t-1)(t-2)
  double variance = 0.0;    // sum t(t-1)(2t+5)
};

void add_run(TieSums& sums, std::uint64_t t) {
  if (t < 2) return;
  const double td = static_cast<double>(t);
  sums.pairs += t * (t - 1) / 2;
  sums.cubic += td * (td - 1) * (td - 2);
  sums.variance += td * (td - 1) * (2 * td + 5);
}

template <typename Equal>
TieSums tie_sums(const std::vector<PairedSample>& sorted, Equal equal) {
  TieSums sums;
  std::uint64_t run = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (equal(sorted[i - 1], sorted[i])) {
      ++run;
    } else {
      add_run(sums, run);
      run = 1;
    }
  }
  add_run(sums, run);
  return sums;
}

// Stable merge sort on y; returns the number of strict inversions.
std::uint64_t sort_by_y_counting_swaps(std::vector<PairedSample>& v) {
  std::vector<PairedSample> buffer(v.size());
  std::uint64_t swaps = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo;
      std::size_t j = mid;
      std::size_t k = lo;
      while (i < mid && j < hi) {
        if (v[j].y < v[i].y) {
          swaps += mid - i;
          buffer[k++] = v[j++];
        } else {
          buffer[k++] = v[i++];
        }
      }
      while (i < mid) buffer[k++] = v[i++];
      while (j < hi) buffer[k++] = v[j++];
    }
    v.swap(buffer);
  }
  return swaps;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r' || s.front() == '"')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_double(std::string_view text, double& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

KendallResult kendall_tau_b(std::span<const PairedSample> samples) {
  const std::size_t n = samples.size();
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument, "tau-b needs at least 2 samples");
  }
  for (const auto& s : samples) {
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) {
      throw Error(ErrorCode::kInvalidArgument, "samples must be finite");
    }
  }

  std::vector<PairedSample> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end(), [](const PairedSample& a, const PairedSample& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  const TieSums x_ties =
      tie_sums(v, [](const auto& a, const auto& b) { return a.x == b.x; });
  const TieSums joint_ties = tie_sums(
      v, [](const auto& a, const auto& b) { return a.x == b.x && a.y == b.y; });
  const std::uint64_t discordant = sort_by_y_counting_swaps(v);
  const TieSums y_ties =
      tie_sums(v, [](const auto& a, const auto& b) { return a.y == b.y; });

  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  if (x_ties.pairs == total || y_ties.pairs == total) {
    throw Error(ErrorCode::kUndefinedCorrelation,
                "all pairs are tied in x or in y");
  }

  KendallResult r;
  r.ties_both = joint_ties.pairs;
  r.ties_x = x_ties.pairs - joint_ties.pairs;
  r.ties_y = y_ties.pairs - joint_ties.pairs;
  r.discordant = discordant;
  r.concordant =
      total - x_ties.pairs - y_ties.pairs + joint_ties.pairs - discordant;

  const double difference =
      static_cast<double>(r.concordant) - static_cast<double>(r.discordant);
  r.tau = difference /
          std::sqrt(static_cast<double>(total - x_ties.pairs)) /
          std::sqrt(static_cast<double>(total - y_ties.pairs));
  r.tau = std::clamp(r.tau, -1.0, 1.0);

  // Null variance of C - D with tie corrections.
  const double nd = static_cast<double>(n);
  const double m = nd * (nd - 1);
  double variance = (m * (2 * nd + 5) - x_ties.variance - y_ties.variance) / 18 +
                    2.0 * static_cast<double>(x_ties.pairs) *
                        static_cast<double>(y_ties.pairs) / m;
  if (n > 2) variance += x_ties.cubic * y_ties.cubic / (9 * m * (nd - 2));
  if (variance > 0) {
    r.z = difference / std::sqrt(variance);
    r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  }
  return r;
}

Interval binomial_ci(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) throw Error(ErrorCode::kEmptySample, "no trials");
  if (successes > trials) {
    throw Error(ErrorCode::kInvalidArgument, "successes exceed trials");
  }
  if (!std::isfinite(z) || z < 0) {
    throw Error(ErrorCode::kInvalidArgument, "z must be finite and >= 0");
  }
  const double p = static_cast<double>(successes) / static_cast<double>(trials);
  const double halfwidth =
      z * std::sqrt(p * (1 - p) / static_cast<double>(trials));
  return {std::max(0.0, p - halfwidth), std::min(1.0, p + halfwidth)};
}

double mean_ci_halfwidth(std::span<const double> values, double z) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return z * sd / std::sqrt(static_cast<double>(n));
}

ExplainerReport compare_explainers(const std::vector<std::string>& corpus,
                                   const TokenScorer& method_a,
                                   const TokenScorer& method_b,
                                   double cutoff_a) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptySample, "empty corpus");
  std::vector<Document> docs;
  docs.reserve(corpus.size());
  for (const auto& text : corpus) docs.push_back(tokenize(text));

  using Clock = std::chrono::steady_clock;
  const auto run = [&docs](const TokenScorer& method, auto& latency) {
    std::vector<std::vector<double>> scores;
    scores.reserve(docs.size());
    Clock::duration elapsed{0};
    for (const auto& doc : docs) {
      const auto start = Clock::now();
      scores.push_back(method(doc));
      elapsed += Clock::now() - start;
      if (scores.back().size() != doc.size()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "scorer returned the wrong number of token scores");
      }
    }
    latency = std::chrono::duration<double, std::milli>(elapsed) /
              static_cast<double>(docs.size());
    return scores;
  };

  ExplainerReport report;
  report.texts = docs.size();
  const auto scores_a = run(method_a, report.mean_latency_a);
  const auto scores_b = run(method_b, report.mean_latency_b);

  std::vector<double> pooled_a;
  std::vector<double> pooled_b;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    pooled_a.insert(pooled_a.end(), scores_a[i].begin(), scores_a[i].end());
    pooled_b.insert(pooled_b.end(), scores_b[i].begin(), scores_b[i].end());
  }
  report.cutoff_a = cutoff_a;
  report.cutoff_b = calibrate_cutoff(pooled_a, pooled_b, cutoff_a).mapped_cutoff;

  for (std::size_t i = 0; i < docs.size(); ++i) {
    const FlagSet a = flag_tokens(scores_a[i], report.cutoff_a);
    const FlagSet b = flag_tokens(scores_b[i], report.cutoff_b);
    if (a.empty() && b.empty()) continue;
    report.per_text_overlap.push_back(overlap(a, b));
  }
  report.compared = report.per_text_overlap.size();
  if (report.compared > 0) {
    double sum = 0.0;
    for (double o : report.per_text_overlap) sum += o;
    report.mean_overlap = sum / static_cast<double>(report.compared);
    report.overlap_ci_halfwidth = mean_ci_halfwidth(report.per_text_overlap);
  }
  return report;
}

std::vector<LabelRow> parse_labels(std::string_view content) {
  std::vector<LabelRow> rows;
  char delimiter = 0;
  std::size_t line_no = 0;
  bool first_row = true;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    const std::string_view line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    if (delimiter == 0) {
      delimiter = line.find('\t') != std::string_view::npos ? '\t' : ',';
    }

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t cut = line.find(delimiter, start);
      fields.push_back(trim(line.substr(start, cut - start)));
      if (cut == std::string_view::npos) break;
      start = cut + 1;
    }
    if (fields.size() != 4) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                         ": expected 4 fields, got " +
                                         std::to_string(fields.size()));
    }
    LabelRow row;
    row.id = std::string(fields[0]);
    row.condition = std::string(fields[3]);
    const bool numeric = parse_double(fields[1], row.original_label) &&
                         parse_double(fields[2], row.edit_label);
    if (!numeric) {
      if (first_row) {
        first_row = false;
        continue;
      }
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(line_no) + ": labels must be numeric");
    }
    first_row = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

LabelsReport analyze_labels(const std::vector<LabelRow>& rows,
                            double toxic_threshold, double z) {
  std::map<std::string, std::vector<const LabelRow*>> groups;
  for (const auto& row : rows) groups[row.condition].push_back(&row);

  LabelsReport report;
  report.toxic_threshold = toxic_threshold;
  report.z = z;
  for (const auto& [condition, members] : groups) {
    ConditionReport c;
    c.condition = condition;
    c.n = members.size();
    std::vector<PairedSample> pairs;
    pairs.reserve(members.size());
    for (const LabelRow* row : members) {
      pairs.push_back({row->original_label, row->edit_label});
      if (row->original_label >= toxic_threshold) ++c.original_toxic;
      if (row->edit_label >= toxic_threshold) ++c.edit_toxic;
    }
    if (pairs.size() >= 2) {
      try {
        c.kendall = kendall_tau_b(pairs);
        c.tau_defined = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUndefinedCorrelation) throw;
      }
    }
    c.original_ci = binomial_ci(c.original_toxic, c.n, z);
    c.edit_ci = binomial_ci(c.edit_toxic, c.n, z);
    report.conditions.push_back(std::move(c));
  }
  return report;
}

std::string LabelsReport::to_text() const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "toxic label threshold >= " << toxic_threshold << ", z = " << z
      << "\n";
  for (const auto& c : conditions) {
    out << "\n[" << c.condition << "] n = " << c.n << "\n";
    if (c.tau_defined) {
      out << "  kendall tau-b (original, edit) = " << c.kendall.tau
          << "  z = " << c.kendall.z << "  p = " << c.kendall.p_value
          << "  (C=" << c.kendall.concordant << " D=" << c.kendall.discordant
          << " Tx=" << c.kendall.ties_x << " Ty=" << c.kendall.ties_y
          << " Txy=" << c.kendall.ties_both << ")\n";
    } else {
      out << "  kendall tau-b undefined\n";
    }
    const double n = static_cast<double>(c.n);
    out << "  toxic original: " << c.original_toxic << "/" << c.n << " = "
        << static_cast<double>(c.original_toxic) / n << "  ["
        << c.original_ci.low << ", " << c.original_ci.high << "]\n";
    out << "  toxic edit:     " << c.edit_toxic << "/" << c.n << " = "
        << static_cast<double>(c.edit_toxic) / n << "  [" << c.edit_ci.low
        << ", " << c.edit_ci.high << "]\n";
  }
  return out.str();
}

std::string LabelsReport::to_json() const {
  nlohmann::json doc;
  doc["toxic_threshold"] = toxic_threshold;
  doc["z"] = z;
  doc["conditions"] = nlohmann::json::array();
  for (const auto& c : conditions) {
    nlohmann::json entry;
    entry["condition"] = c.condition;
    entry["n"] = c.n;
    if (c.tau_defined) {
      entry["kendall"] = {{"tau", c.kendall.tau},
                          {"z", c.kendall.z},
                          {"p_value", c.kendall.p_value},
                          {"concordant", c.kendall.concordant},
                          {"discordant", c.kendall.discordant},
                          {"ties_x", c.kendall.ties_x},
                          {"ties_y", c.kendall.ties_y},
                          {"ties_both", c.kendall.ties_both}};
    } else {
      entry["kendall"] = nullptr;
    }
    entry["original_toxic"] = {{"count", c.original_toxic},
                               {"low", c.original_ci.low},
                               {"high", c.original_ci.high}};
    entry["edit_toxic"] = {{"count", c.edit_toxic},
                           {"low", c.edit_ci.low},
                           {"high", c.edit_ci.high}};
    doc["conditions"].push_back(std::move(entry));
  }
  return doc.dump(2);
}

}  // namespace recast
