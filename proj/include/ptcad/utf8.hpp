#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ptcad::utf8 {

/// Decodes one scalar value starting at `pos` and advances `pos`.
/// Malformed input yields U+FFFD and advances by one byte.
char32_t decode(std::string_view text, std::size_t& pos);

void append(std::string& out, char32_t cp);
std::string encode(char32_t cp);

bool is_valid(std::string_view text);

/// Byte offset of the first malformed sequence, or npos.
std::size_t first_invalid(std::string_view text);

std::u32string to_u32(std::string_view text);
std::string from_u32(std::u32string_view text);

// ASCII whitespace only; Arabic text in the target corpora uses plain spaces.
inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

/// Byte range of one whitespace-delimited word.
struct WordRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string_view view(std::string_view text) const {
    return text.substr(begin, end - begin);
  }
};

std::vector<WordRange> split_words(std::string_view text);
std::vector<std::string_view> words(std::string_view text);

std::string_view trim_right(std::string_view text);

}  // namespace ptcad::utf8
