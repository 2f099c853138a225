#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ptcad/arabic.hpp"
#include "ptcad/vocabulary.hpp"

namespace ptcad::encoding {

/// Label value for positions excluded from the loss.
inline constexpr std::int32_t kIgnore = -100;
inline constexpr int kDefaultMaxLength = 512;

/// Where one source word landed in the token stream.
struct WordSpan {
  std::size_t word_index = 0;
  std::int32_t token_pos = 0;   // the word token itself
  std::int32_t mask_begin = 0;  // first MASK after it
  std::int32_t mask_count = 0;  // == count_arabic_letters(word)
  friend bool operator==(const WordSpan&, const WordSpan&) = default;
};

struct EncodedSample {
  std::vector<std::int32_t> tokens;
  std::vector<std::int32_t> labels;
  std::vector<WordSpan> spans;

  std::size_t length() const { return tokens.size(); }
  std::size_t mask_count() const;
};

/// Token cost of one word in the mask-inserted stream: 1 + letter count.
std::size_t word_cost(std::string_view word);

/// Length of the framed, mask-inserted encoding of `sentence`.
std::size_t encoded_length(std::string_view sentence);

/// Position of each token within its word span: 0 for word tokens and
/// framing, k for the k-th MASK after a word.
std::vector<std::int32_t> letter_slots(const EncodedSample& sample);

/// CLS, then per word its token followed by one MASK per Arabic letter, then
/// SEP. Labels are all kIgnore. Throws EmptySentence or TooLong.
EncodedSample encode_for_inference(std::string_view sentence, const Vocabulary& vocab,
                                   int max_length = kDefaultMaxLength);

/// Same stream as encode_for_inference on the stripped sentence; MASK labels
/// carry the gold diacritic ids. Throws AlignmentFailure, EmptySentence or TooLong.
EncodedSample encode_for_training(std::string_view diacritized, const Vocabulary& vocab,
                                  int max_length = kDefaultMaxLength);

/// Gold classes at MASK positions, in span order.
std::vector<arabic::Diacritic> mask_labels(const EncodedSample& sample);

/// Applies one class per MASK to the words of `sentence`; whitespace and
/// non-Arabic tokens are preserved. Throws SpanMismatch.
std::string decode(std::string_view sentence, std::span<const arabic::Diacritic> predicted,
                   std::span<const WordSpan> spans);

}  // namespace ptcad::encoding
