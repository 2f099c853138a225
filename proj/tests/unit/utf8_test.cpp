#include <gtest/gtest.h>

#include "ptcad/utf8.hpp"

namespace ptcad::utf8 {
namespace {

TEST(Utf8, DecodeEncodeRoundTrip) {
  const std::u32string cps = {U'a', U'ك', U'َ', 0x1F600};
  const std::string bytes = from_u32(cps);
  EXPECT_EQ(bytes.size(), 1u + 2u + 2u + 4u);
  EXPECT_EQ(to_u32(bytes), cps);
}

TEST(Utf8, Validation) {
  EXPECT_TRUE(is_valid("كتب abc"));
  EXPECT_FALSE(is_valid("ab\xFF"));
  EXPECT_EQ(first_invalid("ab\xFF"), 2u);
  EXPECT_FALSE(is_valid("\xC0\x80"));      // overlong NUL
  EXPECT_FALSE(is_valid("\xED\xA0\x80"));  // surrogate
  EXPECT_FALSE(is_valid("\xD9"));          // truncated
}

TEST(Utf8, SplitWordsKeepsByteRanges) {
  const std::string text = "  كتب\t\tقرأ \n x ";
  const auto r = split_words(text);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].view(text), "كتب");
  EXPECT_EQ(r[1].view(text), "قرأ");
  EXPECT_EQ(r[2].view(text), "x");
  EXPECT_EQ(words(text).size(), 3u);
  EXPECT_TRUE(words("   ").empty());
}

TEST(Utf8, TrimRight) { EXPECT_EQ(trim_right("كتب \t\r"), "كتب"); }

}  // namespace
}  // namespace ptcad::utf8
