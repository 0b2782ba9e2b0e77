#include "recast/text.hpp"

#include <string>

#include "recast/error.hpp"

namespace recast {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c == '\'' || c >= 0x80;
}

}  // namespace

bool is_valid_utf8(std::string_view text) noexcept {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    unsigned min_cp = 0;
    unsigned cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
      min_cp = 0x80;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
      min_cp = 0x800;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
      min_cp = 0x10000;
    } else {
      return false;
    }
    if (i + extra >= n) return false;
    for (std::size_t j = 1; j <= extra; ++j) {
      const auto cc = static_cast<unsigned char>(text[i + j]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

std::string fold_case(std::string_view word) {
  std::string out(word);
  for (auto& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

std::string_view Document::span_text(Span span) const {
  validate_span(*this, span);
  const std::size_t begin = tokens_[span.start_token].byte_start;
  const std::size_t end = tokens_[span.end_token - 1].byte_end;
  return std::string_view(raw_).substr(begin, end - begin);
}

std::vector<std::string_view> word_views(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t end = i;
    while (start < end && text[start] == '\'') ++start;
    while (end > start && text[end - 1] == '\'') --end;
    if (start != end) words.push_back(text.substr(start, end - start));
  }
  return words;
}

Document tokenize(std::string_view text) {
  if (text.size() > kMaxInputBytes) {
    throw Error(ErrorCode::kInputTooLarge,
                "input is " + std::to_string(text.size()) +
                    " bytes, limit is " + std::to_string(kMaxInputBytes));
  }
  if (!is_valid_utf8(text)) {
    throw Error(ErrorCode::kInvalidUtf8, "input is not valid UTF-8");
  }

  Document doc;
  doc.raw_ = std::string(text);
  for (std::string_view word : word_views(text)) {
    const auto start = static_cast<std::size_t>(word.data() - text.data());
    doc.tokens_.push_back(
        Token{std::string(word), start, start + word.size(), doc.tokens_.size()});
  }
  return doc;
}

void validate_span(const Document& doc, Span span) {
  if (span.start_token >= span.end_token || span.end_token > doc.size()) {
    throw Error(ErrorCode::kSpanOutOfBounds,
                "span [" + std::to_string(span.start_token) + ", " +
                    std::to_string(span.end_token) + ") is invalid for " +
                    std::to_string(doc.size()) + " tokens");
  }
}

namespace {

// The pieces apply_replacement() concatenates, in order.
struct Splice {
  std::string_view prefix;
  std::string_view separator;
  std::string_view replacement;
  std::string_view suffix;

  std::size_t size() const noexcept {
    return prefix.size() + separator.size() + replacement.size() + suffix.size();
  }
};

Splice splice(const Document& doc, Span span, std::string_view replacement) {
  validate_span(doc, span);
  const std::string_view raw = doc.raw();
  Splice out;
  out.prefix = raw.substr(0, doc[span.start_token].byte_start);
  out.suffix = raw.substr(doc[span.end_token - 1].byte_end);
  out.replacement = replacement;
  if (!replacement.empty()) return out;

  // Deletion: the spaces on either side of the removed range merge into one,
  // or disappear entirely at either edge of the text.
  std::size_t left_spaces = 0;
  while (left_spaces < out.prefix.size() &&
         out.prefix[out.prefix.size() - 1 - left_spaces] == ' ') {
    ++left_spaces;
  }
  std::size_t right_spaces = 0;
  while (right_spaces < out.suffix.size() && out.suffix[right_spaces] == ' ') {
    ++right_spaces;
  }
  out.prefix.remove_suffix(left_spaces);
  out.suffix.remove_prefix(right_spaces);
  if (left_spaces + right_spaces > 0 && !out.prefix.empty() && !out.suffix.empty()) {
    out.separator = " ";
  }
  return out;
}

}  // namespace

Document apply_replacement(const Document& doc, Span span,
                           std::string_view replacement) {
  const Splice parts = splice(doc, span, replacement);
  std::string edited;
  edited.reserve(parts.size());
  edited.append(parts.prefix)
      .append(parts.separator)
      .append(parts.replacement)
      .append(parts.suffix);
  return tokenize(edited);
}

std::size_t replacement_size(const Document& doc, Span span,
                             std::string_view replacement) {
  return splice(doc, span, replacement).size();
}

}  // namespace recast
