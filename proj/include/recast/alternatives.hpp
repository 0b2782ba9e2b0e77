#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "recast/backend.hpp"
#include "recast/explanation.hpp"
#include "recast/text.hpp"

namespace recast {

inline constexpr std::size_t kMaxSpanTokens = 5;

enum class CandidateSource { kEmbedding, kMaskedLm, kBoth, kDeletion };

std::string_view candidate_source_name(CandidateSource source) noexcept;

struct Candidate {
  std::string replacement;  // empty for deletion
  double individual_toxicity = 0.0;
  double resulting_toxicity = 0.0;
  CandidateSource source = CandidateSource::kEmbedding;
};

struct SuggestionSet {
  Span span;
  double original_toxicity = 0.0;
  std::vector<Candidate> candidates;  // ascending resulting_toxicity
};

// Repeated alternative queries against one document, sharing the original
// score, the attention profile and the backend's edit scorer. Not for
// concurrent use; `doc` and `backend` must outlive the session.
class AlternativesSession {
 public:
  AlternativesSession(const Document& doc, const Backend& backend,
                      const Thresholds& thresholds);
  ~AlternativesSession();
  AlternativesSession(const AlternativesSession&) = delete;
  AlternativesSession& operator=(const AlternativesSession&) = delete;

  const Document& document() const noexcept { return doc_; }
  double original_toxicity() const noexcept { return original_; }
  const std::vector<double>& attention() const;

  SuggestionSet word(std::size_t token_index) const;
  SuggestionSet span(Span span) const;
  bool is_highlighted(std::size_t token_index) const;

 private:
  // Neighbour lists and standalone scores depend only on their argument.
  const std::vector<std::string>& neighbors(const std::string& word) const;
  double standalone_score(const std::string& text) const;

  const Document& doc_;
  const Backend& backend_;
  Thresholds thresholds_;
  double original_;
  std::unique_ptr<EditScorer> edits_;
  mutable std::optional<std::vector<double>> attention_;
  mutable std::unordered_map<std::string, std::vector<std::string>> neighbors_;
  mutable std::unordered_map<std::string, double> standalone_;
};

// Embedding neighbours, masked-LM fills and a deletion for one token, kept
// only when the replacement alone scores below alt_toxicity_max and the
// edited text scores strictly below the original.
SuggestionSet generate_alternatives(const Document& doc, std::size_t token_index,
                                    const Backend& backend,
                                    const Thresholds& thresholds);

// Joint replacements for 2..5 contiguous tokens; a single-token span is
// delegated to generate_alternatives. Throws kSpanTooLong past 5 tokens.
SuggestionSet generate_span_alternatives(const Document& doc, Span span,
                                         const Backend& backend,
                                         const Thresholds& thresholds);

bool is_highlighted(const Document& doc, std::size_t token_index,
                    const Backend& backend, const Thresholds& thresholds);

// As above with a precomputed attention profile for the document.
bool is_highlighted(const Document& doc, std::size_t token_index,
                    std::span<const double> attention, const Backend& backend,
                    const Thresholds& thresholds);

}  // namespace recast
