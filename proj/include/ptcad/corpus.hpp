#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ptcad {

class Vocabulary;

struct RawCorpus {
  std::vector<std::string> sentences;
  std::string source_id;
};

/// A sentence cut into pieces that each fit the token budget.
/// `joiners[i]` is the whitespace that sat between segments i and i+1, so
/// segments[0] + joiners[0] + segments[1] + ... reproduces the original.
struct SegmentedSentence {
  std::size_t original_index = 0;
  std::vector<std::string> segments;
  std::vector<std::string> joiners;
  bool was_split = false;

  std::string reconstruct() const;
};

namespace corpus {

inline constexpr double kDefaultThreshold = 0.9;
inline constexpr int kDefaultTokenLimit = 512;
/// CLS and SEP framing.
inline constexpr int kReservedTokens = 2;

/// One sentence per line, trailing whitespace trimmed, blank lines dropped.
/// Throws IoFailure or InvalidEncoding.
RawCorpus load_corpus(const std::filesystem::path& path);
RawCorpus parse_corpus(std::string_view text, std::string source_id);

RawCorpus filter_partially_diacritized(const RawCorpus& corpus,
                                       double threshold = kDefaultThreshold);

/// True when the mask-inserted encoding of `text` (with framing) fits.
bool fits(std::string_view text, int token_limit);

/// Recursive split at line breaks, then periods, then commas, then spaces.
/// Throws UnsplittableSegment when a single word cannot fit.
SegmentedSentence split_long_sentence(std::string_view sentence, int token_limit,
                                      const Vocabulary& vocab);

/// Sentences that fit pass through; sentences needing a split are dropped.
RawCorpus prepare_train_set(const RawCorpus& corpus, int token_limit, const Vocabulary& vocab);

std::vector<SegmentedSentence> prepare_test_set(const RawCorpus& corpus, int token_limit,
                                                const Vocabulary& vocab);

/// "original_index TAB segment_index TAB segment_text" lines.
std::string format_manifest(const std::vector<SegmentedSentence>& sentences);

struct ManifestRecord {
  std::size_t original_index = 0;
  std::size_t segment_index = 0;
  std::string text;
};
/// Throws InvalidValue with the offending line number.
std::vector<ManifestRecord> parse_manifest(std::string_view text);

}  // namespace corpus
}  // namespace ptcad
