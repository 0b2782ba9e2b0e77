#include "recast/alternatives.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <string>

#include "recast/error.hpp"

namespace recast {
namespace {

struct PoolEntry {
  std::string replacement;
  bool from_embedding = false;
  bool from_masked_lm = false;
  bool deletion = false;
};

// Pool keyed by case-folded text; the first surface form seen is kept.
class CandidatePool {
 public:
  void add(const std::string& replacement, CandidateSource source) {
    std::string key = fold_case(replacement);
    auto [it, inserted] = entries_.try_emplace(key);
    if (inserted) it->second.replacement = replacement;
    switch (source) {
      case CandidateSource::kEmbedding: it->second.from_embedding = true; break;
      case CandidateSource::kMaskedLm: it->second.from_masked_lm = true; break;
      case CandidateSource::kDeletion: it->second.deletion = true; break;
      case CandidateSource::kBoth:
        it->second.from_embedding = true;
        it->second.from_masked_lm = true;
        break;
    }
  }

  const std::map<std::string, PoolEntry>& entries() const { return entries_; }

 private:
  std::map<std::string, PoolEntry> entries_;
};

CandidateSource source_of(const PoolEntry& e) {
  if (e.deletion) return CandidateSource::kDeletion;
  if (e.from_embedding && e.from_masked_lm) return CandidateSource::kBoth;
  return e.from_embedding ? CandidateSource::kEmbedding
                          : CandidateSource::kMaskedLm;
}

std::string folded_span_words(const Document& doc, Span span) {
  std::string out;
  for (std::size_t i = span.start_token; i < span.end_token; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += fold_case(doc[i].text);
  }
  return out;
}

template <typename StandaloneScore>
SuggestionSet filter_and_rank(const Document& doc, Span span,
                              const CandidatePool& pool,
                              const Thresholds& thresholds, double original_toxicity,
                              const EditScorer& edits,
                              const StandaloneScore& standalone_score) {
  SuggestionSet result;
  result.span = span;
  result.original_toxicity = original_toxicity;
  const std::string original = folded_span_words(doc, span);

  for (const auto& [key, entry] : pool.entries()) {
    if (!entry.deletion && key == original) continue;
    const double individual = standalone_score(entry.replacement);
    if (!(individual < thresholds.alt_toxicity_max)) continue;
    // Edits that would push the text past the input limit are not offered.
    if (replacement_size(doc, span, entry.replacement) > kMaxInputBytes) continue;
    const double resulting = edits.score(span, entry.replacement);
    if (!(resulting < original_toxicity)) continue;
    result.candidates.push_back(
        Candidate{entry.replacement, individual, resulting, source_of(entry)});
  }
  std::sort(result.candidates.begin(), result.candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.resulting_toxicity != b.resulting_toxicity) {
                return a.resulting_toxicity < b.resulting_toxicity;
              }
              return a.replacement < b.replacement;
            });
  return result;
}

}  // namespace

std::string_view candidate_source_name(CandidateSource source) noexcept {
  switch (source) {
    case CandidateSource::kEmbedding: return "embedding";
    case CandidateSource::kMaskedLm: return "masked_lm";
    case CandidateSource::kBoth: return "both";
    case CandidateSource::kDeletion: return "deletion";
  }
  return "unknown";
}

AlternativesSession::AlternativesSession(const Document& doc,
                                         const Backend& backend,
                                         const Thresholds& thresholds)
    : doc_(doc),
      backend_(backend),
      thresholds_(thresholds),
      original_(backend.score(doc.raw())),
      edits_(backend.edit_scorer(doc)) {}

AlternativesSession::~AlternativesSession() = default;

const std::vector<double>& AlternativesSession::attention() const {
  if (!attention_) {
    attention_ = backend_.token_attention(doc_);
    if (attention_->size() != doc_.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "attention profile length does not match token count");
    }
  }
  return *attention_;
}

const std::vector<std::string>& AlternativesSession::neighbors(
    const std::string& word) const {
  auto it = neighbors_.find(word);
  if (it == neighbors_.end()) {
    it = neighbors_.emplace(word, backend_.nearest_neighbors(word, thresholds_.knn)).first;
  }
  return it->second;
}

double AlternativesSession::standalone_score(const std::string& text) const {
  auto it = standalone_.find(text);
  if (it == standalone_.end()) it = standalone_.emplace(text, backend_.score(text)).first;
  return it->second;
}

SuggestionSet AlternativesSession::word(std::size_t token_index) const {
  const Span span{token_index, token_index + 1};
  validate_span(doc_, span);
  const std::string& word = doc_[token_index].text;

  CandidatePool pool;
  for (const auto& neighbor : neighbors(word)) {
    pool.add(neighbor, CandidateSource::kEmbedding);
  }
  for (const auto& fill : backend_.mask_fill(doc_, span, thresholds_.mlm_topk)) {
    pool.add(fill.replacement, CandidateSource::kMaskedLm);
  }
  pool.add("", CandidateSource::kDeletion);
  return filter_and_rank(doc_, span, pool, thresholds_, original_, *edits_,
                         [this](const std::string& text) { return standalone_score(text); });
}

SuggestionSet AlternativesSession::span(Span span) const {
  validate_span(doc_, span);
  if (span.size() == 1) return word(span.start_token);
  if (span.size() > kMaxSpanTokens) {
    throw Error(ErrorCode::kSpanTooLong,
                "span covers " + std::to_string(span.size()) +
                    " tokens, limit is " + std::to_string(kMaxSpanTokens));
  }

  CandidatePool pool;
  for (const auto& fill : backend_.mask_fill(doc_, span, thresholds_.mlm_topk)) {
    pool.add(fill.replacement, CandidateSource::kMaskedLm);
  }
  std::vector<std::vector<std::string>> pools;
  pools.reserve(span.size());
  for (std::size_t i = span.start_token; i < span.end_token; ++i) {
    pools.push_back(neighbors(doc_[i].text));
  }
  for (const auto& fill :
       backend_.rank_tuples(doc_, span, pools, thresholds_.mlm_topk)) {
    pool.add(fill.replacement, CandidateSource::kEmbedding);
  }
  return filter_and_rank(doc_, span, pool, thresholds_, original_, *edits_,
                         [this](const std::string& text) { return standalone_score(text); });
}

bool AlternativesSession::is_highlighted(std::size_t token_index) const {
  validate_span(doc_, Span{token_index, token_index + 1});
  if (!(attention()[token_index] > thresholds_.attn_cutoff)) return false;
  return !word(token_index).candidates.empty();
}

SuggestionSet generate_alternatives(const Document& doc, std::size_t token_index,
                                    const Backend& backend,
                                    const Thresholds& thresholds) {
  validate_span(doc, Span{token_index, token_index + 1});
  return AlternativesSession(doc, backend, thresholds).word(token_index);
}

SuggestionSet generate_span_alternatives(const Document& doc, Span span,
                                         const Backend& backend,
                                         const Thresholds& thresholds) {
  validate_span(doc, span);
  return AlternativesSession(doc, backend, thresholds).span(span);
}

bool is_highlighted(const Document& doc, std::size_t token_index,
                    std::span<const double> attention, const Backend& backend,
                    const Thresholds& thresholds) {
  validate_span(doc, Span{token_index, token_index + 1});
  if (attention.size() != doc.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "attention profile length does not match token count");
  }
  if (!(attention[token_index] > thresholds.attn_cutoff)) return false;
  return !generate_alternatives(doc, token_index, backend, thresholds)
              .candidates.empty();
}

bool is_highlighted(const Document& doc, std::size_t token_index,
                    const Backend& backend, const Thresholds& thresholds) {
  validate_span(doc, Span{token_index, token_index + 1});
  return AlternativesSession(doc, backend, thresholds).is_highlighted(token_index);
}

}  // namespace recast
