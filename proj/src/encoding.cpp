#include "ptcad/encoding.hpp"

#include "ptcad/error.hpp"
#include "ptcad/utf8.hpp"

namespace ptcad::encoding {

std::size_t EncodedSample::mask_count() const {
  std::size_t n = 0;
  for (const auto& s : spans) n += static_cast<std::size_t>(s.mask_count);
  return n;
}

std::size_t word_cost(std::string_view word) { return 1 + arabic::count_arabic_letters(word); }

std::size_t encoded_length(std::string_view sentence) {
  std::size_t n = 2;
  for (const auto w : utf8::words(sentence)) n += word_cost(w);
  return n;
}

std::vector<std::int32_t> letter_slots(const EncodedSample& sample) {
  std::vector<std::int32_t> slots(sample.tokens.size(), 0);
  for (const auto& s : sample.spans) {
    for (std::int32_t k = 0; k < s.mask_count; ++k) {
      slots[static_cast<std::size_t>(s.mask_begin + k)] = k + 1;
    }
  }
  return slots;
}

namespace {

EncodedSample encode_words(std::string_view sentence, const Vocabulary& vocab, int max_length) {
  const auto words = utf8::words(sentence);
  if (words.empty()) throw Error(ErrorCode::kEmptySentence, "sentence has no words");
  const std::size_t total = encoded_length(sentence);
  if (total > static_cast<std::size_t>(max_length)) {
    throw Error(ErrorCode::kTooLong, "encoded length " + std::to_string(total) +
                                         " exceeds maximum " + std::to_string(max_length));
  }
  EncodedSample out;
  out.tokens.reserve(total);
  out.tokens.push_back(Vocabulary::kCls);
  for (std::size_t i = 0; i < words.size(); ++i) {
    WordSpan span;
    span.word_index = i;
    span.token_pos = static_cast<std::int32_t>(out.tokens.size());
    out.tokens.push_back(vocab.id(arabic::normalize_token(words[i])));
    span.mask_begin = static_cast<std::int32_t>(out.tokens.size());
    span.mask_count = static_cast<std::int32_t>(arabic::count_arabic_letters(words[i]));
    out.tokens.insert(out.tokens.end(), static_cast<std::size_t>(span.mask_count),
                      Vocabulary::kMask);
    out.spans.push_back(span);
  }
  out.tokens.push_back(Vocabulary::kSep);
  out.labels.assign(out.tokens.size(), kIgnore);
  return out;
}

}  // namespace

EncodedSample encode_for_inference(std::string_view sentence, const Vocabulary& vocab,
                                   int max_length) {
  return encode_words(arabic::strip_diacritics(sentence), vocab, max_length);
}

EncodedSample encode_for_training(std::string_view diacritized, const Vocabulary& vocab,
                                  int max_length) {
  EncodedSample out = encode_words(arabic::strip_diacritics(diacritized), vocab, max_length);
  const auto words = utf8::words(diacritized);
  if (words.size() != out.spans.size()) {
    throw Error(ErrorCode::kAlignmentFailure, "word made only of marks");
  }
  for (const auto& span : out.spans) {
    if (span.mask_count == 0) continue;
    const std::string_view w = words[span.word_index];
    std::vector<arabic::Diacritic> classes;
    try {
      classes = arabic::align(w).classes();
    } catch (const Error& e) {
      throw Error(ErrorCode::kAlignmentFailure,
                  "word " + std::to_string(span.word_index) + ": " + e.what());
    }
    for (std::int32_t k = 0; k < span.mask_count; ++k) {
      out.labels[static_cast<std::size_t>(span.mask_begin + k)] =
          arabic::id(classes[static_cast<std::size_t>(k)]);
    }
  }
  return out;
}

std::vector<arabic::Diacritic> mask_labels(const EncodedSample& sample) {
  std::vector<arabic::Diacritic> out;
  out.reserve(sample.mask_count());
  for (const auto& span : sample.spans) {
    for (std::int32_t k = 0; k < span.mask_count; ++k) {
      const std::int32_t l = sample.labels[static_cast<std::size_t>(span.mask_begin + k)];
      out.push_back(l == kIgnore ? arabic::Diacritic::kNone : arabic::diacritic_from_id(l));
    }
  }
  return out;
}

std::string decode(std::string_view sentence, std::span<const arabic::Diacritic> predicted,
                   std::span<const WordSpan> spans) {
  const auto ranges = utf8::split_words(sentence);
  if (spans.size() != ranges.size()) {
    throw Error(ErrorCode::kSpanMismatch, std::to_string(spans.size()) + " spans for " +
                                              std::to_string(ranges.size()) + " words");
  }
  std::size_t expected = 0;
  for (const auto& s : spans) expected += static_cast<std::size_t>(s.mask_count);
  if (expected != predicted.size()) {
    throw Error(ErrorCode::kSpanMismatch, std::to_string(predicted.size()) +
                                              " labels for " + std::to_string(expected) +
                                              " masks");
  }
  std::string out;
  out.reserve(sentence.size() * 2);
  std::size_t cursor = 0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto& span = spans[i];
    const std::string_view w = ranges[i].view(sentence);
    const auto letters = arabic::count_arabic_letters(w);
    if (span.word_index != i || letters != static_cast<std::size_t>(span.mask_count)) {
      throw Error(ErrorCode::kSpanMismatch,
                  "word " + std::to_string(i) + " has " + std::to_string(letters) +
                      " letters but span carries " + std::to_string(span.mask_count));
    }
    out.append(sentence.substr(cursor, ranges[i].begin - cursor));
    if (letters == 0) {
      out.append(w);
    } else {
      out += arabic::apply_to_word(w, predicted.subspan(next, letters));
    }
    next += letters;
    cursor = ranges[i].end;
  }
  out.append(sentence.substr(cursor));
  return out;
}

}  // namespace ptcad::encoding
