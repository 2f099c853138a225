#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ptcad::arabic {

// Canonical combining marks.
inline constexpr char32_t kFathatan = 0x064B;
inline constexpr char32_t kDammatan = 0x064C;
inline constexpr char32_t kKasratan = 0x064D;
inline constexpr char32_t kFatha = 0x064E;
inline constexpr char32_t kDamma = 0x064F;
inline constexpr char32_t kKasra = 0x0650;
inline constexpr char32_t kShadda = 0x0651;
inline constexpr char32_t kSukun = 0x0652;
inline constexpr char32_t kTatweel = 0x0640;

/// Label class assigned to one letter. The numeric value is the label id.
enum class Diacritic : std::uint8_t {
  kNone = 0,
  kFatha,
  kDamma,
  kKasra,
  kFathatan,
  kDammatan,
  kKasratan,
  kSukun,
  kShadda,
  kShaddaFatha,
  kShaddaDamma,
  kShaddaKasra,
  kShaddaFathatan,
  kShaddaDammatan,
  kShaddaKasratan,
};

inline constexpr std::size_t kDiacriticCount = 15;

struct DiacriticInfo {
  Diacritic id;
  std::string_view name;
  // Canonical order: SHADDA first for combined classes. Unused slots are 0.
  std::array<char32_t, 2> marks;
  std::size_t mark_count;
};

const std::array<DiacriticInfo, kDiacriticCount>& diacritic_table();
const DiacriticInfo& info(Diacritic d);
std::string_view name(Diacritic d);
/// Arabic mark name used in instruction-style samples; NONE maps to the
/// elongation gloss.
std::string_view gloss(Diacritic d);
inline int id(Diacritic d) { return static_cast<int>(d); }
/// Throws InvalidValue when `id` is outside [0,14].
Diacritic diacritic_from_id(int id);
/// Inverse of name(); throws InvalidValue for unknown names.
Diacritic diacritic_from_name(std::string_view name);

enum class CharKind { kArabicLetter, kDiacriticMark, kOther };

CharKind classify_char(char32_t c);
inline bool is_arabic_letter(char32_t c) {
  return classify_char(c) == CharKind::kArabicLetter;
}
inline bool is_diacritic_mark(char32_t c) {
  return classify_char(c) == CharKind::kDiacriticMark;
}
/// Arabic-block combining marks outside the eight supported ones
/// (superscript alef, maddah, Quranic annotations).
bool is_unsupported_mark(char32_t c);

struct AlignedLetter {
  char32_t letter;
  Diacritic diacritic;
  friend bool operator==(const AlignedLetter&, const AlignedLetter&) = default;
};

/// A word decomposed into its Arabic letters and their classes. Codepoints
/// that are neither letters nor marks (punctuation, tatweel) are not kept.
struct AlignedWord {
  std::vector<AlignedLetter> letters;
  std::vector<Diacritic> classes() const;
  friend bool operator==(const AlignedWord&, const AlignedWord&) = default;
};

std::string strip_diacritics(std::string_view text);

/// Key used for vocabulary lookup: marks and tatweel removed.
std::string normalize_token(std::string_view text);

std::size_t count_arabic_letters(std::string_view word);

/// Throws EmptyWord, MarkBeforeLetter or UnsupportedMarkCluster.
AlignedWord align(std::string_view word);

/// Letter followed by its canonical marks, for each letter.
std::string apply(const AlignedWord& aligned);

/// Re-diacritizes `word` with one class per Arabic letter. Existing marks are
/// dropped; all non-letter codepoints are kept in place. The caller guarantees
/// classes.size() == count_arabic_letters(word).
std::string apply_to_word(std::string_view word, std::span<const Diacritic> classes);

/// Canonical mark ordering for every word of `text`, whitespace preserved.
/// Words without Arabic letters are copied unchanged.
std::string canonicalize(std::string_view text);

/// Letters that may stay bare in a word still counted as diacritized.
struct ExceptionLetterRule {
  /// `letters` are the word's Arabic letters in order.
  static bool may_be_bare(std::span<const char32_t> letters, std::size_t index);
};

/// Throws EmptyWord when `word` has no Arabic letter.
bool is_word_diacritized(std::string_view word);

double diacritization_ratio(std::string_view sentence);

}  // namespace ptcad::arabic
