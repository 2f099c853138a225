#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ptcad/arabic.hpp"
#include "ptcad/encoding.hpp"
#include "ptcad/error.hpp"
#include "ptcad/vocabulary.hpp"

namespace ptcad::encoding {
namespace {

using arabic::Diacritic;

const Vocabulary& vocab() {
  static const Vocabulary v = [] {
    VocabularyBuilder b;
    b.add_text("ذات مآثر ذات مآثر");
    return b.build(1);
  }();
  return v;
}

TEST(EncodeForInference, FigureExample) {
  const auto s = encode_for_inference("ذات مآثر", vocab());
  const auto M = Vocabulary::kMask;
  const auto a = vocab().id("ذات");
  const auto b = vocab().id("مآثر");
  EXPECT_EQ(s.tokens, (std::vector<std::int32_t>{Vocabulary::kCls, a, M, M, M, b, M, M, M, M,
                                                 Vocabulary::kSep}));
  for (auto l : s.labels) EXPECT_EQ(l, kIgnore);
  ASSERT_EQ(s.spans.size(), 2u);
  EXPECT_EQ(s.spans[0], (WordSpan{0, 1, 2, 3}));
  EXPECT_EQ(s.spans[1], (WordSpan{1, 5, 6, 4}));
  EXPECT_EQ(letter_slots(s), (std::vector<std::int32_t>{0, 0, 1, 2, 3, 0, 1, 2, 3, 4, 0}));
}

TEST(EncodeForInference, NonArabicTokenHasNoMasks) {
  const auto s = encode_for_inference("123", vocab());
  EXPECT_EQ(s.tokens, (std::vector<std::int32_t>{Vocabulary::kCls, Vocabulary::kUnk,
                                                 Vocabulary::kSep}));
  EXPECT_EQ(s.spans[0].mask_count, 0);
}

TEST(EncodeForInference, Errors) {
  try {
    encode_for_inference("ذات مآثر", vocab(), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooLong);
  }
  EXPECT_NO_THROW(encode_for_inference("ذات مآثر", vocab(), 11));
  try {
    encode_for_inference("  ", vocab());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptySentence);
  }
}

TEST(EncodeForTraining, FigureLabels) {
  const auto s = encode_for_training("جَمَّةٍ", vocab());
  EXPECT_EQ(mask_labels(s), (std::vector<Diacritic>{Diacritic::kFatha, Diacritic::kShaddaFatha,
                                                    Diacritic::kKasratan}));
  EXPECT_EQ(s.labels[0], kIgnore);
  EXPECT_EQ(s.labels[1], kIgnore);
  EXPECT_EQ(s.labels.back(), kIgnore);
}

TEST(EncodeForTraining, UnmarkedWordIsAllNone) {
  const auto s = encode_for_training("كتب", vocab());
  EXPECT_EQ(mask_labels(s), std::vector<Diacritic>(3, Diacritic::kNone));
}

TEST(EncodeForTraining, StrayLeadingMarkFails) {
  try {
    encode_for_training("َكتب", vocab());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlignmentFailure);
  }
}

TEST(EncodeForTraining, SameStreamAsInferenceOnStripped) {
  const std::string s = "ذَاتِ مَآثِرَ 12";
  EXPECT_EQ(encode_for_training(s, vocab()).tokens,
            encode_for_inference(arabic::strip_diacritics(s), vocab()).tokens);
}

TEST(Decode, Examples) {
  const auto e = encode_for_inference("كتب", vocab());
  const std::vector<Diacritic> fathas(3, Diacritic::kFatha);
  EXPECT_EQ(decode("كتب", fathas, e.spans), "كَتَبَ");
  EXPECT_EQ(decode("كتب", std::vector<Diacritic>(3, Diacritic::kNone), e.spans), "كتب");
  try {
    decode("كتب", std::vector<Diacritic>(2, Diacritic::kNone), e.spans);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kSpanMismatch);
  }
}

TEST(Decode, PreservesWhitespace) {
  const std::string text = "ذات  مآثر\t123";
  const auto e = encode_for_inference(text, vocab());
  std::vector<Diacritic> labels(7, Diacritic::kSukun);
  EXPECT_EQ(decode(text, labels, e.spans), "ذْاْتْ  مْآْثْرْ\t123");
}

// Laws checked against the independent class oracle on random sentences.
TEST(EncodingLaws, RandomSentences) {
  Rng rng(77);
  for (int i = 0; i < 300; ++i) {
    std::vector<oracle::GeneratedWord> words;
    const auto s = oracle::random_sentence(rng, 12, &words);
    const auto e = encode_for_training(s, vocab());
    std::size_t letters = 0;
    std::vector<int> expected;
    for (const auto& w : words) {
      letters += w.classes.size();
      expected.insert(expected.end(), w.classes.begin(), w.classes.end());
    }
    EXPECT_EQ(e.mask_count(), letters);
    EXPECT_EQ(e.length(), 2 + words.size() + letters);
    std::vector<int> got;
    for (std::size_t p = 0; p < e.length(); ++p) {
      if (e.tokens[p] == Vocabulary::kMask) {
        EXPECT_NE(e.labels[p], kIgnore);
        got.push_back(e.labels[p]);
      } else {
        EXPECT_EQ(e.labels[p], kIgnore);
      }
    }
    EXPECT_EQ(got, expected);
    std::string canonical;
    for (std::size_t k = 0; k < words.size(); ++k) canonical += (k ? " " : "") + words[k].canonical;
    EXPECT_EQ(decode(arabic::strip_diacritics(s), mask_labels(e), e.spans), canonical);
  }
}

TEST(WordCost, LettersPlusOne) {
  EXPECT_EQ(word_cost("مَآثِرَ"), 5u);
  EXPECT_EQ(word_cost("."), 1u);
  EXPECT_EQ(encoded_length("ذات مآثر"), 11u);
}

}  // namespace
}  // namespace ptcad::encoding
