#include "recast/backend.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_set>

#include "recast/error.hpp"

namespace recast {
namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
           c == '\v';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) fields.push_back(s.substr(start, i - start));
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return in;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + what);
}

bool is_sentence_end(char c) { return c == '.' || c == '!' || c == '?'; }

bool has_sentence_end(std::string_view s) {
  return std::any_of(s.begin(), s.end(), is_sentence_end);
}

}  // namespace

double logistic(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

class SpliceEditScorer final : public EditScorer {
 public:
  SpliceEditScorer(const Backend& backend, const Document& doc)
      : backend_(backend), doc_(doc) {}
  double score(Span span, std::string_view replacement) const override {
    return backend_.score(apply_replacement(doc_, span, replacement).raw());
  }

 private:
  const Backend& backend_;
  const Document& doc_;
};

}  // namespace

std::unique_ptr<EditScorer> Backend::edit_scorer(const Document& doc) const {
  return std::make_unique<SpliceEditScorer>(*this, doc);
}

double Backend::score_edit(const Document& doc, Span span,
                           std::string_view replacement) const {
  return edit_scorer(doc)->score(span, replacement);
}

// ---------------------------------------------------------------- Lexicon

Lexicon Lexicon::load(std::istream& in, double bias) {
  Lexicon lexicon(bias);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos) {
      parse_error(line_no, "expected word<TAB>weight");
    }
    const std::string_view word = trim(view.substr(0, tab));
    const std::string_view value = trim(view.substr(tab + 1));
    double weight = 0.0;
    if (word.empty() || !parse_number(value, weight)) {
      parse_error(line_no, "expected word<TAB>weight");
    }
    if (lexicon.weights_.count(fold_case(word)) != 0) {
      parse_error(line_no, "duplicate entry '" + std::string(word) + "'");
    }
    try {
      lexicon.set(word, weight);
    } catch (const Error& e) {
      parse_error(line_no, e.what());
    }
  }
  return lexicon;
}

Lexicon Lexicon::load_file(const std::string& path, double bias) {
  auto in = open_or_throw(path);
  try {
    return load(in, bias);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void Lexicon::set(std::string_view word, double weight) {
  if (!std::isfinite(weight) || weight < 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "weight for '" + std::string(word) +
                    "' must be finite and non-negative");
  }
  weights_[fold_case(word)] = weight;
}

double Lexicon::weight(std::string_view word) const {
  const auto* entry = find(word);
  return entry == nullptr ? 0.0 : entry->second;
}

const std::pair<const std::string, double>* Lexicon::find(
    std::string_view word) const {
  const auto it = weights_.find(fold_case(word));
  return it == weights_.end() ? nullptr : &*it;
}

// --------------------------------------------------------- EmbeddingTable

EmbeddingTable EmbeddingTable::load(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<float> vec;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_whitespace(view);
    if (fields.size() < 2) parse_error(line_no, "expected word and vector");
    vec.clear();
    for (std::size_t i = 1; i < fields.size(); ++i) {
      float v = 0.0f;
      if (!parse_number(fields[i], v)) {
        parse_error(line_no, "bad component '" + std::string(fields[i]) + "'");
      }
      vec.push_back(v);
    }
    try {
      table.add(fields[0], vec);
    } catch (const Error& e) {
      parse_error(line_no, e.what());
    }
  }
  return table;
}

EmbeddingTable EmbeddingTable::load_file(const std::string& path) {
  auto in = open_or_throw(path);
  try {
    return load(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void EmbeddingTable::add(std::string_view word, std::vector<float> vector) {
  if (vector.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty vector");
  }
  if (dimension_ != 0 && vector.size() != dimension_) {
    throw Error(ErrorCode::kInvalidArgument,
                "dimension " + std::to_string(vector.size()) + ", expected " +
                    std::to_string(dimension_));
  }
  double norm = 0.0;
  for (float v : vector) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite component");
    }
    norm += static_cast<double>(v) * v;
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "zero-magnitude vector for '" + std::string(word) + "'");
  }
  std::string key = fold_case(word);
  if (index_.count(key) != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "duplicate word '" + std::string(word) + "'");
  }
  dimension_ = vector.size();
  index_.emplace(key, words_.size());
  words_.emplace_back(word);
  folded_.push_back(std::move(key));
  for (float v : vector) unit_.push_back(static_cast<float>(v / norm));
}

bool EmbeddingTable::contains(std::string_view word) const {
  return index_.count(fold_case(word)) != 0;
}

double EmbeddingTable::cosine(std::string_view a, std::string_view b) const {
  const auto ia = index_.find(fold_case(a));
  const auto ib = index_.find(fold_case(b));
  if (ia == index_.end() || ib == index_.end()) return 0.0;
  const float* va = &unit_[ia->second * dimension_];
  const float* vb = &unit_[ib->second * dimension_];
  double dot = 0.0;
  for (std::size_t d = 0; d < dimension_; ++d) {
    dot += static_cast<double>(va[d]) * vb[d];
  }
  return dot;
}

std::vector<std::string> EmbeddingTable::nearest_neighbors(
    std::string_view word, std::size_t k) const {
  const auto it = index_.find(fold_case(word));
  if (it == index_.end() || k == 0) return {};
  const std::size_t query = it->second;
  const float* q = &unit_[query * dimension_];

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (i == query) continue;
    const float* v = &unit_[i * dimension_];
    double dot = 0.0;
    for (std::size_t d = 0; d < dimension_; ++d) {
      dot += static_cast<double>(q[d]) * v[d];
    }
    scored.emplace_back(dot, i);
  }
  const auto better = [this](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return folded_[a.second] < folded_[b.second];
  };
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + take, scored.end(),
                    better);
  std::vector<std::string> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(words_[scored[i].second]);
  return out;
}

// ------------------------------------------------------------- NgramModel

NgramModel NgramModel::train(std::string_view corpus,
                             const std::vector<std::string>& extra_vocabulary) {
  NgramModel model;
  const std::string begin(kBegin);
  const std::string end(kEnd);
  std::unordered_set<std::string> types;

  const auto add_sentence = [&](std::string_view sentence) {
    const auto words = word_views(sentence);
    if (words.empty()) return;
    std::string prev = begin;
    ++model.unigrams_[begin];
    for (std::string_view w : words) {
      std::string word = fold_case(w);
      ++model.unigrams_[word];
      ++model.bigrams_[prev][word];
      ++model.total_;
      types.insert(word);
      prev = std::move(word);
    }
    ++model.unigrams_[end];
    ++model.bigrams_[prev][end];
  };

  std::size_t pos = 0;
  while (pos < corpus.size()) {
    std::size_t eol = corpus.find('\n', pos);
    if (eol == std::string_view::npos) eol = corpus.size();
    const std::string_view line = corpus.substr(pos, eol - pos);
    if (!trim(line).empty()) ++model.lines_;
    std::size_t start = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (is_sentence_end(line[i])) {
        add_sentence(line.substr(start, i - start));
        start = i + 1;
      }
    }
    add_sentence(line.substr(start));
    pos = eol + 1;
  }

  for (const auto& w : extra_vocabulary) {
    if (!w.empty()) types.insert(fold_case(w));
  }
  model.vocabulary_.assign(types.begin(), types.end());
  std::sort(model.vocabulary_.begin(), model.vocabulary_.end());
  model.index_vocabulary();
  return model;
}

void NgramModel::index_vocabulary() {
  vocabulary_index_.clear();
  vocabulary_counts_.assign(vocabulary_.size(), 0);
  predecessors_.clear();
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    vocabulary_index_.emplace(vocabulary_[i], i);
    vocabulary_counts_[i] = count(vocabulary_[i]);
  }
  for (const auto& [prev, row] : bigrams_) {
    const auto it = vocabulary_index_.find(prev);
    if (it == vocabulary_index_.end()) continue;
    for (const auto& [next, n] : row) predecessors_[next].emplace_back(it->second, n);
  }
}

NgramModel NgramModel::load_file(const std::string& path) {
  auto in = open_or_throw(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return train(buffer.str());
}

std::size_t NgramModel::count(std::string_view word) const {
  const auto it = unigrams_.find(std::string(word));
  return it == unigrams_.end() ? 0 : it->second;
}

std::size_t NgramModel::count(std::string_view prev,
                              std::string_view next) const {
  const auto it = bigrams_.find(std::string(prev));
  if (it == bigrams_.end()) return 0;
  const auto jt = it->second.find(std::string(next));
  return jt == it->second.end() ? 0 : jt->second;
}

double NgramModel::unigram_probability(std::string_view word) const {
  return (static_cast<double>(count(word)) + 1.0) /
         static_cast<double>(total_ + smoothing_size());
}

double NgramModel::bigram_probability(std::string_view prev,
                                      std::string_view next) const {
  return (static_cast<double>(count(prev, next)) + 1.0) /
         static_cast<double>(count(prev) + smoothing_size());
}

NgramModel::Context NgramModel::context(const Document& doc, Span span) const {
  validate_span(doc, span);
  const std::string_view raw = doc.raw();
  Context ctx{std::string(kBegin), std::string(kEnd)};
  if (span.start_token > 0) {
    const Token& prev = doc[span.start_token - 1];
    const auto gap = raw.substr(prev.byte_end,
                                doc[span.start_token].byte_start - prev.byte_end);
    if (!has_sentence_end(gap)) ctx.left = fold_case(prev.text);
  }
  if (span.end_token < doc.size()) {
    const Token& next = doc[span.end_token];
    const std::size_t last_end = doc[span.end_token - 1].byte_end;
    const auto gap = raw.substr(last_end, next.byte_start - last_end);
    if (!has_sentence_end(gap)) ctx.right = fold_case(next.text);
  }
  return ctx;
}

std::vector<MaskFill> NgramModel::fill_single(const Context& ctx,
                                              std::size_t k) const {
  // Same arithmetic as bigram_probability(left, c) * bigram_probability(c,
  // right), with the sparse counts gathered once instead of per candidate.
  const std::size_t v = vocabulary_.size();
  std::vector<std::size_t> from_left(v, 0);
  if (const auto row = bigrams_.find(ctx.left); row != bigrams_.end()) {
    for (const auto& [next, n] : row->second) {
      if (const auto it = vocabulary_index_.find(next); it != vocabulary_index_.end()) {
        from_left[it->second] = n;
      }
    }
  }
  std::vector<std::size_t> to_right(v, 0);
  if (const auto column = predecessors_.find(ctx.right); column != predecessors_.end()) {
    for (const auto& [i, n] : column->second) to_right[i] = n;
  }
  const auto left_total = static_cast<double>(count(ctx.left) + smoothing_size());

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(v);
  double total = 0.0;
  for (std::size_t i = 0; i < v; ++i) {
    const double s =
        ((static_cast<double>(from_left[i]) + 1.0) / left_total) *
        ((static_cast<double>(to_right[i]) + 1.0) /
         static_cast<double>(vocabulary_counts_[i] + smoothing_size()));
    total += s;
    scored.emplace_back(s, i);
  }
  const std::size_t take = std::min(k, scored.size());
  // vocabulary_ is sorted, so index order is lexicographic order.
  std::partial_sort(scored.begin(), scored.begin() + take, scored.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<MaskFill> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({vocabulary_[scored[i].second], scored[i].first / total});
  }
  return out;
}

std::vector<MaskFill> NgramModel::mask_fill(const Document& doc, Span span,
                                            std::size_t k) const {
  const Context ctx = context(doc, span);
  if (k == 0 || vocabulary_.empty()) return {};
  const std::size_t n = span.size();
  if (n == 1) return fill_single(ctx, k);

  // Per-position pools: left context for the first slot, unigram prior for
  // the rest, right context folded into the last slot.
  std::vector<std::vector<std::string>> pools(n);
  std::vector<std::pair<double, std::size_t>> scored(vocabulary_.size());
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
      const std::string& w = vocabulary_[i];
      double s = j == 0 ? bigram_probability(ctx.left, w)
                        : unigram_probability(w);
      if (j + 1 == n) s *= bigram_probability(w, ctx.right);
      scored[i] = {s, i};
    }
    const std::size_t take = std::min(kTuplePoolSize, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + take, scored.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    for (std::size_t i = 0; i < take; ++i) {
      pools[j].push_back(vocabulary_[scored[i].second]);
    }
  }
  return rank_tuples(doc, span, pools, k);
}

std::vector<MaskFill> NgramModel::rank_tuples(
    const Document& doc, Span span,
    const std::vector<std::vector<std::string>>& pools, std::size_t k) const {
  const Context ctx = context(doc, span);
  const std::size_t n = span.size();
  if (pools.size() != n) {
    throw Error(ErrorCode::kInvalidArgument,
                "expected " + std::to_string(n) + " pools, got " +
                    std::to_string(pools.size()));
  }
  // Deduplicated, case-folded pools; empty words are not fillers.
  std::vector<std::vector<std::string>> slots(n);
  std::vector<std::vector<std::string_view>> surface(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::unordered_set<std::string> seen;
    for (const auto& w : pools[j]) {
      if (w.empty()) continue;
      std::string folded = fold_case(w);
      if (seen.insert(folded).second) {
        slots[j].push_back(std::move(folded));
        surface[j].push_back(w);
      }
    }
    if (slots[j].empty()) return {};
  }
  if (k == 0) return {};

  // first[a], step[j][a * m_{j+1} + b], last[b]
  std::vector<double> first(slots[0].size());
  for (std::size_t a = 0; a < slots[0].size(); ++a) {
    first[a] = bigram_probability(ctx.left, slots[0][a]);
  }
  std::vector<std::vector<double>> step(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const auto& from = slots[j];
    const auto& to = slots[j + 1];
    step[j].resize(from.size() * to.size());
    for (std::size_t a = 0; a < from.size(); ++a) {
      for (std::size_t b = 0; b < to.size(); ++b) {
        step[j][a * to.size() + b] = bigram_probability(from[a], to[b]);
      }
    }
  }
  std::vector<double> last(slots[n - 1].size());
  for (std::size_t b = 0; b < slots[n - 1].size(); ++b) {
    last[b] = bigram_probability(slots[n - 1][b], ctx.right);
  }

  const auto join = [&](const std::vector<std::size_t>& pick) {
    std::string text(surface[0][pick[0]]);
    for (std::size_t j = 1; j < n; ++j) {
      text.append(" ").append(surface[j][pick[j]]);
    }
    return text;
  };

  // The heap top is the weakest of the best k seen so far.
  using Entry = std::pair<double, std::string>;
  const auto ranks_before = [](const Entry& a, const Entry& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(ranks_before)> heap(
      ranks_before);

  std::vector<std::size_t> pick(n, 0);
  double total = 0.0;
  while (true) {
    double s = first[pick[0]];
    for (std::size_t j = 0; j + 1 < n; ++j) {
      s *= step[j][pick[j] * slots[j + 1].size() + pick[j + 1]];
    }
    s *= last[pick[n - 1]];
    total += s;
    if (heap.size() < k) {
      heap.emplace(s, join(pick));
    } else if (s >= heap.top().first) {
      Entry entry{s, join(pick)};
      if (ranks_before(entry, heap.top())) {
        heap.pop();
        heap.push(std::move(entry));
      }
    }
    std::size_t j = n;
    while (j > 0 && ++pick[j - 1] == slots[j - 1].size()) {
      pick[j - 1] = 0;
      --j;
    }
    if (j == 0) break;
  }

  std::vector<MaskFill> out(heap.size());
  for (std::size_t i = out.size(); i > 0; --i) {
    out[i - 1] = {heap.top().second, heap.top().first / total};
    heap.pop();
  }
  return out;
}

// ------------------------------------------------------- ReferenceBackend

ReferenceBackend::ReferenceBackend(Lexicon lexicon, EmbeddingTable embeddings,
                                   NgramModel language_model)
    : lexicon_(std::move(lexicon)),
      embeddings_(std::move(embeddings)),
      language_model_(std::move(language_model)) {}

std::shared_ptr<ReferenceBackend> ReferenceBackend::load(
    const std::string& lexicon_path, const std::string& embeddings_path,
    const std::string& corpus_path) {
  Lexicon lexicon = Lexicon::load_file(lexicon_path);
  EmbeddingTable embeddings = EmbeddingTable::load_file(embeddings_path);
  NgramModel language_model = NgramModel::load_file(corpus_path);
  return std::make_shared<ReferenceBackend>(
      std::move(lexicon), std::move(embeddings), std::move(language_model));
}

double ReferenceBackend::score(std::string_view text) const {
  return score(tokenize(text));
}

namespace {

using LexiconEntry = std::pair<const std::string, double>;

struct Term {
  const LexiconEntry* entry;
  std::int64_t count;
};

bool term_before(const Term& a, const Term& b) {
  return a.entry->first < b.entry->first;
}

std::vector<const LexiconEntry*> lexicon_entries(const Lexicon& lexicon,
                                                 const Document& doc) {
  std::vector<const LexiconEntry*> entries;
  entries.reserve(doc.size());
  for (const Token& t : doc.tokens()) entries.push_back(lexicon.find(t.text));
  return entries;
}

// One term per distinct entry, sorted by word; nullptr entries are skipped.
std::vector<Term> collect_terms(const std::vector<const LexiconEntry*>& entries) {
  std::vector<Term> terms;
  std::unordered_map<const LexiconEntry*, std::size_t> slot;
  for (const LexiconEntry* entry : entries) {
    if (entry == nullptr) continue;
    const auto [it, inserted] = slot.try_emplace(entry, terms.size());
    if (inserted) {
      terms.push_back({entry, 1});
    } else {
      ++terms[it->second].count;
    }
  }
  std::sort(terms.begin(), terms.end(), term_before);
  return terms;
}

double logit_of(double bias, const std::vector<Term>& sorted_terms) {
  double logit = bias;
  for (const Term& t : sorted_terms) {
    if (t.count != 0) logit += static_cast<double>(t.count) * t.entry->second;
  }
  return logit;
}

class LexiconEditScorer final : public EditScorer {
 public:
  LexiconEditScorer(const Lexicon& lexicon, const Document& doc)
      : lexicon_(lexicon),
        doc_(doc),
        token_entry_(lexicon_entries(lexicon, doc)),
        terms_(collect_terms(token_entry_)) {}

  double score(Span span, std::string_view replacement) const override {
    const std::size_t size = replacement_size(doc_, span, replacement);
    if (size > kMaxInputBytes) {
      throw Error(ErrorCode::kInputTooLarge,
                  "input is " + std::to_string(size) + " bytes, limit is " +
                      std::to_string(kMaxInputBytes));
    }
    if (!is_valid_utf8(replacement)) {
      throw Error(ErrorCode::kInvalidUtf8, "input is not valid UTF-8");
    }
    std::vector<Term> terms = terms_;
    const auto adjust = [&terms](const LexiconEntry* entry, std::int64_t delta) {
      const Term probe{entry, 0};
      auto it = std::lower_bound(terms.begin(), terms.end(), probe, term_before);
      if (it == terms.end() || it->entry != entry) it = terms.insert(it, probe);
      it->count += delta;
    };
    for (std::size_t i = span.start_token; i < span.end_token; ++i) {
      if (token_entry_[i] != nullptr) adjust(token_entry_[i], -1);
    }
    for (std::string_view w : word_views(replacement)) {
      if (const LexiconEntry* entry = lexicon_.find(w)) adjust(entry, +1);
    }
    return logistic(logit_of(lexicon_.bias(), terms));
  }

 private:
  const Lexicon& lexicon_;
  const Document& doc_;
  std::vector<const LexiconEntry*> token_entry_;
  std::vector<Term> terms_;
};

}  // namespace

double ReferenceBackend::score(const Document& doc) const {
  return logistic(
      logit_of(lexicon_.bias(), collect_terms(lexicon_entries(lexicon_, doc))));
}

std::unique_ptr<EditScorer> ReferenceBackend::edit_scorer(const Document& doc) const {
  return std::make_unique<LexiconEditScorer>(lexicon_, doc);
}

std::vector<double> ReferenceBackend::token_attention(const Document& doc) const {
  std::vector<double> weights;
  weights.reserve(doc.size());
  double peak = 0.0;
  for (const Token& t : doc.tokens()) {
    weights.push_back(lexicon_.weight(t.text));
    peak = std::max(peak, weights.back());
  }
  if (peak > 0.0) {
    for (double& w : weights) w /= peak;
  }
  return weights;
}

std::vector<std::string> ReferenceBackend::nearest_neighbors(
    std::string_view word, std::size_t k) const {
  return embeddings_.nearest_neighbors(word, k);
}

std::vector<MaskFill> ReferenceBackend::mask_fill(const Document& doc, Span span,
                                                  std::size_t k) const {
  return language_model_.mask_fill(doc, span, k);
}

std::vector<MaskFill> ReferenceBackend::rank_tuples(
    const Document& doc, Span span,
    const std::vector<std::vector<std::string>>& pools, std::size_t k) const {
  return language_model_.rank_tuples(doc, span, pools, k);
}

std::map<std::string, std::size_t> ReferenceBackend::vocab_sizes() const {
  return {{"lexicon", lexicon_.size()},
          {"embeddings", embeddings_.size()},
          {"corpus_lines", language_model_.lines()},
          {"corpus_types", language_model_.vocabulary().size()}};
}

}  // namespace recast
