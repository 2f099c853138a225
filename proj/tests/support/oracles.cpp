#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "ptcad/utf8.hpp"

namespace ptcad::oracle {

namespace {

constexpr char32_t kShadda = 0x0651;

// Single-mark classes 1..7 in label order.
constexpr char32_t kSingle[] = {0x064E, 0x064F, 0x0650, 0x064B, 0x064C, 0x064D, 0x0652};
// Vowels that may follow shadda, classes 9..14 in label order.
constexpr char32_t kWithShadda[] = {0x064E, 0x064F, 0x0650, 0x064B, 0x064C, 0x064D};

bool is_mark(char32_t c) { return c >= 0x064B && c <= 0x0652; }

char32_t random_letter(Rng& rng) {
  // 0621..063A and 0641..064A: 26 + 10 letters.
  const auto k = rng.below(36);
  return k < 26 ? static_cast<char32_t>(0x0621 + k) : static_cast<char32_t>(0x0641 + (k - 26));
}

std::vector<std::u32string> split_on_spaces(std::u32string_view s) {
  std::vector<std::u32string> out;
  std::u32string cur;
  for (char32_t c : s) {
    if (c == U' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<int> classes_u32(const std::u32string& word) {
  std::vector<int> out;
  std::u32string marks;
  bool open = false;
  for (char32_t c : word) {
    if (is_mark(c)) {
      marks.push_back(c);
      continue;
    }
    if (open) out.push_back(class_of_marks(marks));
    marks.clear();
    open = true;
  }
  if (open) out.push_back(class_of_marks(marks));
  return out;
}

}  // namespace

int class_of_marks(std::u32string marks) {
  if (marks.empty()) return 0;
  if (marks.size() == 1) {
    if (marks[0] == kShadda) return 8;
    for (int i = 0; i < 7; ++i) {
      if (kSingle[i] == marks[0]) return 1 + i;
    }
    return -1;
  }
  if (marks.size() == 2) {
    if (marks[1] == kShadda) std::swap(marks[0], marks[1]);
    if (marks[0] != kShadda) return -1;
    for (int i = 0; i < 6; ++i) {
      if (kWithShadda[i] == marks[1]) return 9 + i;
    }
  }
  return -1;
}

std::u32string marks_of_class(int id) {
  if (id == 0) return {};
  if (id >= 1 && id <= 7) return {kSingle[id - 1]};
  if (id == 8) return {kShadda};
  return {kShadda, kWithShadda[id - 9]};
}

std::vector<int> letter_classes(std::string_view word) { return classes_u32(utf8::to_u32(word)); }

GeneratedWord random_word(Rng& rng, bool shuffle_marks) {
  GeneratedWord w;
  std::u32string text;
  std::u32string canonical;
  const auto length = 1 + rng.below(8);
  for (std::uint64_t i = 0; i < length; ++i) {
    const char32_t letter = random_letter(rng);
    const int cls = static_cast<int>(rng.below(15));
    std::u32string marks = marks_of_class(cls);
    text.push_back(letter);
    canonical.push_back(letter);
    canonical += marks;
    if (shuffle_marks && marks.size() == 2 && rng.below(2) == 0) std::swap(marks[0], marks[1]);
    text += marks;
    w.classes.push_back(cls);
  }
  w.text = utf8::from_u32(text);
  w.canonical = utf8::from_u32(canonical);
  return w;
}

std::string random_sentence(Rng& rng, std::size_t max_words, std::vector<GeneratedWord>* words) {
  const auto n = 1 + rng.below(max_words);
  std::string out;
  for (std::uint64_t i = 0; i < n; ++i) {
    auto w = random_word(rng, false);
    if (i > 0) out += ' ';
    out += w.text;
    if (words != nullptr) words->push_back(std::move(w));
  }
  return out;
}

std::string perturb_classes(Rng& rng, std::string_view sentence, double flip) {
  std::u32string out;
  for (const auto& word : split_on_spaces(utf8::to_u32(sentence))) {
    if (!out.empty()) out.push_back(U' ');
    const auto classes = classes_u32(word);
    std::size_t k = 0;
    for (char32_t c : word) {
      if (is_mark(c)) continue;
      out.push_back(c);
      int cls = classes[k++];
      if (rng.uniform() < flip) cls = static_cast<int>(rng.below(15));
      out += marks_of_class(cls);
    }
  }
  return utf8::from_u32(out);
}

PooledCounts brute_force_counts(std::string_view gold, std::string_view pred, bool with_case_ending,
                                bool include_no_diacritic) {
  const auto g_words = split_on_spaces(utf8::to_u32(gold));
  const auto p_words = split_on_spaces(utf8::to_u32(pred));
  PooledCounts c;
  for (std::size_t w = 0; w < g_words.size(); ++w) {
    const auto g = classes_u32(g_words[w]);
    const auto p = classes_u32(p_words[w]);
    if (g.empty()) continue;
    ++c.words;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const bool last = i == g.size() - 1;
      if (last && !with_case_ending) continue;
      if (g[i] == 0 && !include_no_diacritic) continue;
      ++c.positions;
      if (g[i] != p[i]) ++wrong;
    }
    c.position_errors += wrong;
    if (wrong > 0) ++c.word_errors;
  }
  return c;
}

double cross_entropy(const std::vector<double>& logits, int label) {
  long double z = 0.0L;
  for (double v : logits) z += std::exp(static_cast<long double>(v));
  return static_cast<double>(std::log(z) - static_cast<long double>(logits[static_cast<std::size_t>(label)]));
}

}  // namespace ptcad::oracle
