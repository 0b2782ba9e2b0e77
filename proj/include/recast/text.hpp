#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace recast {

inline constexpr std::size_t kMaxInputBytes = 10'000;

struct Token {
  std::string text;
  std::size_t byte_start = 0;  // inclusive
  std::size_t byte_end = 0;    // exclusive
  std::size_t index = 0;

  bool operator==(const Token&) const = default;
};

// Half-open range of token indices.
struct Span {
  std::size_t start_token = 0;
  std::size_t end_token = 0;

  std::size_t size() const noexcept {
    return end_token > start_token ? end_token - start_token : 0;
  }
  bool operator==(const Span&) const = default;
};

// Immutable tokenized view of a text. Construct through tokenize().
class Document {
 public:
  Document() = default;

  const std::string& raw() const noexcept { return raw_; }
  const std::vector<Token>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }

  // Raw bytes covered by the span, from the first token's start to the last
  // token's end (inner punctuation and whitespace included).
  std::string_view span_text(Span span) const;

 private:
  friend Document tokenize(std::string_view text);

  std::string raw_;
  std::vector<Token> tokens_;
};

// Word tokens are maximal runs of ASCII alphanumerics, apostrophes and
// non-ASCII bytes, with leading/trailing apostrophes trimmed. Throws
// kInputTooLarge above kMaxInputBytes and kInvalidUtf8 on malformed input.
Document tokenize(std::string_view text);

// Throws kSpanOutOfBounds unless 0 <= start < end <= doc.size().
void validate_span(const Document& doc, Span span);

// Substitutes the span's byte range with `replacement`. An empty replacement
// deletes the range and collapses the space run left at the splice point.
Document apply_replacement(const Document& doc, Span span,
                           std::string_view replacement);

// Byte length of the text apply_replacement() would build.
std::size_t replacement_size(const Document& doc, Span span,
                             std::string_view replacement);

bool is_valid_utf8(std::string_view text) noexcept;

// The word runs tokenize() would produce, without its size or encoding checks.
std::vector<std::string_view> word_views(std::string_view text);

// ASCII case folding; non-ASCII bytes pass through.
std::string fold_case(std::string_view word);

}  // namespace recast
