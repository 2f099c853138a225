#include "ptcad/arabic.hpp"

#include <algorithm>

#include "ptcad/error.hpp"
#include "ptcad/utf8.hpp"

namespace ptcad::arabic {

namespace {

constexpr std::array<DiacriticInfo, kDiacriticCount> kTable = {{
    {Diacritic::kNone, "NONE", {0, 0}, 0},
    {Diacritic::kFatha, "FATHA", {kFatha, 0}, 1},
    {Diacritic::kDamma, "DAMMA", {kDamma, 0}, 1},
    {Diacritic::kKasra, "KASRA", {kKasra, 0}, 1},
    {Diacritic::kFathatan, "FATHATAN", {kFathatan, 0}, 1},
    {Diacritic::kDammatan, "DAMMATAN", {kDammatan, 0}, 1},
    {Diacritic::kKasratan, "KASRATAN", {kKasratan, 0}, 1},
    {Diacritic::kSukun, "SUKUN", {kSukun, 0}, 1},
    {Diacritic::kShadda, "SHADDA", {kShadda, 0}, 1},
    {Diacritic::kShaddaFatha, "SHADDA_FATHA", {kShadda, kFatha}, 2},
    {Diacritic::kShaddaDamma, "SHADDA_DAMMA", {kShadda, kDamma}, 2},
    {Diacritic::kShaddaKasra, "SHADDA_KASRA", {kShadda, kKasra}, 2},
    {Diacritic::kShaddaFathatan, "SHADDA_FATHATAN", {kShadda, kFathatan}, 2},
    {Diacritic::kShaddaDammatan, "SHADDA_DAMMATAN", {kShadda, kDammatan}, 2},
    {Diacritic::kShaddaKasratan, "SHADDA_KASRATAN", {kShadda, kKasratan}, 2},
}};

Diacritic single_mark_class(char32_t mark) {
  switch (mark) {
    case kFatha: return Diacritic::kFatha;
    case kDamma: return Diacritic::kDamma;
    case kKasra: return Diacritic::kKasra;
    case kFathatan: return Diacritic::kFathatan;
    case kDammatan: return Diacritic::kDammatan;
    case kKasratan: return Diacritic::kKasratan;
    case kSukun: return Diacritic::kSukun;
    default: return Diacritic::kShadda;
  }
}

Diacritic cluster_class(const std::vector<char32_t>& marks, std::string_view word) {
  if (marks.empty()) return Diacritic::kNone;
  if (marks.size() == 1) return single_mark_class(marks[0]);
  if (marks.size() == 2) {
    const bool first_shadda = marks[0] == kShadda;
    const bool second_shadda = marks[1] == kShadda;
    if (first_shadda != second_shadda) {
      const char32_t vowel = first_shadda ? marks[1] : marks[0];
      switch (vowel) {
        case kFatha: return Diacritic::kShaddaFatha;
        case kDamma: return Diacritic::kShaddaDamma;
        case kKasra: return Diacritic::kShaddaKasra;
        case kFathatan: return Diacritic::kShaddaFathatan;
        case kDammatan: return Diacritic::kShaddaDammatan;
        case kKasratan: return Diacritic::kShaddaKasratan;
        default: break;
      }
    }
  }
  throw Error(ErrorCode::kUnsupportedMarkCluster,
              "unsupported mark cluster in word '" + std::string(word) + "'");
}

constexpr char32_t kAlefMaqsura = 0x0649;
constexpr char32_t kYehHamza = 0x0626;
constexpr char32_t kWaw = 0x0648;
constexpr char32_t kAlef = 0x0627;
constexpr char32_t kYeh = 0x064A;
constexpr char32_t kAlefHamzaBelow = 0x0625;
constexpr char32_t kWawHamza = 0x0624;
constexpr char32_t kLam = 0x0644;

bool is_bare_single(char32_t c) {
  switch (c) {
    case kAlefMaqsura:
    case kYehHamza:
    case kWaw:
    case kAlef:
    case kYeh:
    case kAlefHamzaBelow:
    case kWawHamza:
      return true;
    default:
      return false;
  }
}

bool is_long_vowel_letter(char32_t c) {
  return c == kWaw || c == kAlef || c == kAlefMaqsura || c == kYeh;
}

}  // namespace

const std::array<DiacriticInfo, kDiacriticCount>& diacritic_table() { return kTable; }

const DiacriticInfo& info(Diacritic d) { return kTable[static_cast<std::size_t>(d)]; }

std::string_view name(Diacritic d) { return info(d).name; }

std::string_view gloss(Diacritic d) {
  static constexpr std::array<std::string_view, kDiacriticCount> kGlosses = {
      "تطويل",    "فتحة",     "ضمة",      "كسرة",        "فتحتان",
      "ضمتان",    "كسرتان",   "سكون",     "شدة",         "شدة فتحة",
      "شدة ضمة", "شدة كسرة", "شدة فتحتان", "شدة ضمتان", "شدة كسرتان",
  };
  return kGlosses[static_cast<std::size_t>(d)];
}

Diacritic diacritic_from_id(int id) {
  if (id < 0 || id >= static_cast<int>(kDiacriticCount)) {
    throw Error(ErrorCode::kInvalidValue, "diacritic id out of range: " + std::to_string(id));
  }
  return static_cast<Diacritic>(id);
}

Diacritic diacritic_from_name(std::string_view n) {
  for (const auto& entry : kTable) {
    if (entry.name == n) return entry.id;
  }
  throw Error(ErrorCode::kInvalidValue, "unknown diacritic name: " + std::string(n));
}

CharKind classify_char(char32_t c) {
  if (c >= 0x064B && c <= 0x0652) return CharKind::kDiacriticMark;
  if ((c >= 0x0621 && c <= 0x063A) || (c >= 0x0641 && c <= 0x064A) ||
      (c >= 0x066E && c <= 0x066F) || (c >= 0x0671 && c <= 0x06D3) || c == 0x06D5 ||
      (c >= 0x06EE && c <= 0x06EF) || (c >= 0x06FA && c <= 0x06FC) || c == 0x06FF) {
    return CharKind::kArabicLetter;
  }
  return CharKind::kOther;
}

bool is_unsupported_mark(char32_t c) {
  return (c >= 0x0610 && c <= 0x061A) || (c >= 0x0653 && c <= 0x065F) || c == 0x0670 ||
         (c >= 0x06D6 && c <= 0x06DC) || (c >= 0x06DF && c <= 0x06E4) ||
         (c >= 0x06E7 && c <= 0x06E8) || (c >= 0x06EA && c <= 0x06ED);
}

std::vector<Diacritic> AlignedWord::classes() const {
  std::vector<Diacritic> out;
  out.reserve(letters.size());
  for (const auto& l : letters) out.push_back(l.diacritic);
  return out;
}

std::string strip_diacritics(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t c = utf8::decode(text, pos);
    if (!is_diacritic_mark(c)) out.append(text.substr(start, pos - start));
  }
  return out;
}

std::string normalize_token(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t c = utf8::decode(text, pos);
    if (!is_diacritic_mark(c) && c != kTatweel) out.append(text.substr(start, pos - start));
  }
  return out;
}

std::size_t count_arabic_letters(std::string_view word) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos < word.size()) {
    if (is_arabic_letter(utf8::decode(word, pos))) ++n;
  }
  return n;
}

AlignedWord align(std::string_view word) {
  AlignedWord out;
  std::vector<char32_t> marks;
  // True while marks may still attach to the last letter.
  bool attachable = false;
  auto flush = [&] {
    if (attachable) out.letters.back().diacritic = cluster_class(marks, word);
    marks.clear();
  };
  std::size_t pos = 0;
  while (pos < word.size()) {
    const char32_t c = utf8::decode(word, pos);
    if (c == kTatweel) continue;
    switch (classify_char(c)) {
      case CharKind::kArabicLetter:
        flush();
        out.letters.push_back({c, Diacritic::kNone});
        attachable = true;
        break;
      case CharKind::kDiacriticMark:
        if (!attachable) {
          throw Error(ErrorCode::kMarkBeforeLetter,
                      "mark without a preceding letter in '" + std::string(word) + "'");
        }
        if (marks.size() == 2) {
          throw Error(ErrorCode::kUnsupportedMarkCluster,
                      "three or more marks on one letter in '" + std::string(word) + "'");
        }
        marks.push_back(c);
        break;
      case CharKind::kOther:
        if (is_unsupported_mark(c)) {
          throw Error(ErrorCode::kUnsupportedMarkCluster,
                      "unsupported combining mark in '" + std::string(word) + "'");
        }
        flush();
        attachable = false;
        break;
    }
  }
  flush();
  if (out.letters.empty()) {
    throw Error(ErrorCode::kEmptyWord, "no Arabic letter in '" + std::string(word) + "'");
  }
  return out;
}

std::string apply(const AlignedWord& aligned) {
  std::string out;
  for (const auto& l : aligned.letters) {
    utf8::append(out, l.letter);
    const auto& i = info(l.diacritic);
    for (std::size_t k = 0; k < i.mark_count; ++k) utf8::append(out, i.marks[k]);
  }
  return out;
}

std::string apply_to_word(std::string_view word, std::span<const Diacritic> classes) {
  std::string out;
  out.reserve(word.size() * 2);
  std::size_t next = 0;
  std::size_t pos = 0;
  while (pos < word.size()) {
    const std::size_t start = pos;
    const char32_t c = utf8::decode(word, pos);
    if (is_diacritic_mark(c)) continue;
    out.append(word.substr(start, pos - start));
    if (is_arabic_letter(c) && next < classes.size()) {
      const auto& i = info(classes[next++]);
      for (std::size_t k = 0; k < i.mark_count; ++k) utf8::append(out, i.marks[k]);
    }
  }
  return out;
}

std::string canonicalize(std::string_view text) {
  std::string out;
  std::size_t cursor = 0;
  for (const auto& r : utf8::split_words(text)) {
    out.append(text.substr(cursor, r.begin - cursor));
    const std::string_view w = r.view(text);
    if (count_arabic_letters(w) == 0) {
      out.append(w);
    } else {
      const auto classes = align(w).classes();
      out += apply_to_word(w, classes);
    }
    cursor = r.end;
  }
  out.append(text.substr(cursor));
  return out;
}

bool ExceptionLetterRule::may_be_bare(std::span<const char32_t> letters, std::size_t index) {
  const char32_t c = letters[index];
  if (is_bare_single(c)) return true;
  // Definite article at word start.
  if (index <= 1 && letters.size() >= 2 && letters[0] == kAlef && letters[1] == kLam) return true;
  // Letter followed by a word-final long vowel.
  const std::size_t n = letters.size();
  if (n >= 2 && index == n - 2 && is_long_vowel_letter(letters[n - 1])) return true;
  return false;
}

bool is_word_diacritized(std::string_view word) {
  // Lenient scan: a letter counts as marked when any supported mark follows it.
  std::vector<char32_t> letters;
  std::vector<bool> marked;
  std::size_t pos = 0;
  while (pos < word.size()) {
    const char32_t c = utf8::decode(word, pos);
    if (c == kTatweel) continue;
    const CharKind kind = classify_char(c);
    if (kind == CharKind::kArabicLetter) {
      letters.push_back(c);
      marked.push_back(false);
    } else if (kind == CharKind::kDiacriticMark && !marked.empty()) {
      marked.back() = true;
    }
  }
  if (letters.empty()) {
    throw Error(ErrorCode::kEmptyWord, "no Arabic letter in '" + std::string(word) + "'");
  }
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (!marked[i] && !ExceptionLetterRule::may_be_bare(letters, i)) return false;
  }
  return true;
}

double diacritization_ratio(std::string_view sentence) {
  std::size_t total = 0;
  std::size_t diacritized = 0;
  for (const auto w : utf8::words(sentence)) {
    if (count_arabic_letters(w) == 0) continue;
    ++total;
    if (is_word_diacritized(w)) ++diacritized;
  }
  if (total == 0) return 1.0;
  return static_cast<double>(diacritized) / static_cast<double>(total);
}

}  // namespace ptcad::arabic
