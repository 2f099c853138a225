// Independent reference implementations used as test oracles. They work on
// raw codepoints and their own mark tables rather than the library's
// alignment code.
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ptcad/random.hpp"

namespace ptcad::oracle {

/// Class id for a set of marks, or -1 when the set is not a valid class.
int class_of_marks(std::u32string marks);

/// Marks in canonical order (shadda first) for a class id.
std::u32string marks_of_class(int id);

/// Class id per base codepoint of a word made only of letters and marks.
std::vector<int> letter_classes(std::string_view word);

struct GeneratedWord {
  std::string text;       // marks possibly in non-canonical order
  std::string canonical;  // same word with canonical mark order
  std::vector<int> classes;
};

/// A word of 1..8 basic Arabic letters with random classes. When
/// `shuffle_marks` is set, two-mark clusters may appear vowel first.
GeneratedWord random_word(Rng& rng, bool shuffle_marks);

/// Space-joined random words.
std::string random_sentence(Rng& rng, std::size_t max_words, std::vector<GeneratedWord>* words = nullptr);

/// Same base text, every class independently replaced with probability `flip`.
std::string perturb_classes(Rng& rng, std::string_view sentence, double flip);

struct PooledCounts {
  std::size_t positions = 0;
  std::size_t position_errors = 0;
  std::size_t words = 0;
  std::size_t word_errors = 0;
};

/// Position-by-position counter over letters-and-marks sentences.
PooledCounts brute_force_counts(std::string_view gold, std::string_view pred, bool with_case_ending,
                                bool include_no_diacritic);

/// -log softmax(logits)[label], computed in long double.
double cross_entropy(const std::vector<double>& logits, int label);

}  // namespace ptcad::oracle
