#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "recast/text.hpp"

namespace recast {

struct MaskFill {
  std::string replacement;  // space-joined for multi-token spans
  double probability = 0.0;
};

// Scores replacements of a span in one fixed document, as if the edited text
// were passed to Backend::score(). Throws what apply_replacement() and
// tokenize() would.
class EditScorer {
 public:
  virtual ~EditScorer() = default;
  virtual double score(Span span, std::string_view replacement) const = 0;
};

// The pluggable model contract. Implementations must be deterministic and
// safe to call concurrently once constructed.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;

  // Toxicity probability in [0, 1].
  virtual double score(std::string_view text) const = 0;

  // One weight in [0, 1] per word token.
  virtual std::vector<double> token_attention(const Document& doc) const = 0;

  // Up to k vocabulary words closest to `word`, never `word` itself.
  virtual std::vector<std::string> nearest_neighbors(std::string_view word,
                                                     std::size_t k) const = 0;

  // Up to k replacements for the masked span, probability descending.
  virtual std::vector<MaskFill> mask_fill(const Document& doc, Span span,
                                          std::size_t k) const = 0;

  // Ranks the cartesian product of per-position word pools under the
  // model's joint distribution for the masked span; pools.size() must equal
  // span.size(). Returns up to k tuples, probability descending.
  virtual std::vector<MaskFill> rank_tuples(
      const Document& doc, Span span,
      const std::vector<std::vector<std::string>>& pools,
      std::size_t k) const = 0;

  // Scorer for edits of one document, which must outlive it. The default
  // splices and calls score(); overrides must return bit-identical results.
  virtual std::unique_ptr<EditScorer> edit_scorer(const Document& doc) const;

  // One-off edit_scorer(doc)->score(span, replacement).
  double score_edit(const Document& doc, Span span,
                    std::string_view replacement) const;

  // Named sizes of whatever the backend loaded, reported by /api/health.
  virtual std::map<std::string, std::size_t> vocab_sizes() const { return {}; }
};

inline constexpr double kDefaultBias = -4.0;

double logistic(double x) noexcept;

// Case-folded word weights behind a logistic scorer.
class Lexicon {
 public:
  explicit Lexicon(double bias = kDefaultBias) : bias_(bias) {}

  // `word<TAB>weight` per line, `#` starts a comment line. Weights must be
  // finite and non-negative.
  static Lexicon load(std::istream& in, double bias = kDefaultBias);
  static Lexicon load_file(const std::string& path, double bias = kDefaultBias);

  void set(std::string_view word, double weight);
  double weight(std::string_view word) const;
  // The stored (folded word, weight) entry, or nullptr.
  const std::pair<const std::string, double>* find(std::string_view word) const;
  double bias() const noexcept { return bias_; }
  std::size_t size() const noexcept { return weights_.size(); }

 private:
  double bias_;
  std::unordered_map<std::string, double> weights_;
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  // Text vector format: `word v1 ... vd` per line, whitespace separated.
  static EmbeddingTable load(std::istream& in);
  static EmbeddingTable load_file(const std::string& path);

  // Throws kInvalidArgument on dimension mismatch, zero vectors, non-finite
  // components, or a duplicate (case-folded) word.
  void add(std::string_view word, std::vector<float> vector);

  std::vector<std::string> nearest_neighbors(std::string_view word,
                                             std::size_t k) const;
  double cosine(std::string_view a, std::string_view b) const;
  bool contains(std::string_view word) const;
  std::size_t size() const noexcept { return words_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }

 private:
  std::size_t dimension_ = 0;
  std::vector<std::string> words_;   // stored surface form
  std::vector<std::string> folded_;  // lookup key
  std::vector<float> unit_;          // row-major, L2-normalised
  std::unordered_map<std::string, std::size_t> index_;
};

// Add-one smoothed bigram model standing in for a masked language model.
class NgramModel {
 public:
  static constexpr std::string_view kBegin = "<s>";
  static constexpr std::string_view kEnd = "</s>";
  static constexpr std::size_t kTuplePoolSize = 20;

  NgramModel() = default;

  // Sentences end at line breaks and at . ! ?; words are tokenize()d and
  // case-folded. `extra_vocabulary` adds zero-count candidate words.
  static NgramModel train(std::string_view corpus,
                          const std::vector<std::string>& extra_vocabulary = {});
  static NgramModel load_file(const std::string& path);

  double unigram_probability(std::string_view word) const;
  double bigram_probability(std::string_view prev, std::string_view next) const;

  std::size_t count(std::string_view word) const;
  std::size_t count(std::string_view prev, std::string_view next) const;

  // Vocabulary size used for smoothing: word types plus the end marker.
  std::size_t smoothing_size() const noexcept { return vocabulary_.size() + 1; }
  std::size_t total_tokens() const noexcept { return total_; }
  std::size_t lines() const noexcept { return lines_; }
  const std::vector<std::string>& vocabulary() const noexcept {
    return vocabulary_;
  }

  std::vector<MaskFill> mask_fill(const Document& doc, Span span,
                                  std::size_t k) const;
  std::vector<MaskFill> rank_tuples(
      const Document& doc, Span span,
      const std::vector<std::vector<std::string>>& pools, std::size_t k) const;

 private:
  struct Context {
    std::string left;
    std::string right;
  };
  Context context(const Document& doc, Span span) const;

  std::vector<MaskFill> fill_single(const Context& ctx, std::size_t k) const;
  void index_vocabulary();

  std::vector<std::string> vocabulary_;  // sorted, excludes markers
  std::unordered_map<std::string, std::size_t> unigrams_;
  std::unordered_map<std::string, std::unordered_map<std::string, std::size_t>>
      bigrams_;
  // Derived from the counts by index_vocabulary().
  std::unordered_map<std::string, std::size_t> vocabulary_index_;
  std::vector<std::size_t> vocabulary_counts_;
  std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::size_t>>>
      predecessors_;
  std::size_t total_ = 0;
  std::size_t lines_ = 0;
};

// Deterministic desk-scale backend: lexicon logistic scorer, embedding k-NN
// and bigram mask filling.
class ReferenceBackend final : public Backend {
 public:
  ReferenceBackend(Lexicon lexicon, EmbeddingTable embeddings,
                   NgramModel language_model);

  static std::shared_ptr<ReferenceBackend> load(const std::string& lexicon_path,
                                                const std::string& embeddings_path,
                                                const std::string& corpus_path);

  std::string name() const override { return "reference"; }
  double score(std::string_view text) const override;
  std::vector<double> token_attention(const Document& doc) const override;
  std::vector<std::string> nearest_neighbors(std::string_view word,
                                             std::size_t k) const override;
  std::vector<MaskFill> mask_fill(const Document& doc, Span span,
                                  std::size_t k) const override;
  std::vector<MaskFill> rank_tuples(
      const Document& doc, Span span,
      const std::vector<std::vector<std::string>>& pools,
      std::size_t k) const override;
  std::unique_ptr<EditScorer> edit_scorer(const Document& doc) const override;
  std::map<std::string, std::size_t> vocab_sizes() const override;

  // The logit is summed per distinct lexicon word in word order, so it
  // depends only on word counts and edits can be scored from count deltas.
  double score(const Document& doc) const;

  const Lexicon& lexicon() const noexcept { return lexicon_; }
  const EmbeddingTable& embeddings() const noexcept { return embeddings_; }
  const NgramModel& language_model() const noexcept { return language_model_; }

 private:
  Lexicon lexicon_;
  EmbeddingTable embeddings_;
  NgramModel language_model_;
};

}  // namespace recast
