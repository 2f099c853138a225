#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ptcad/vocabulary.hpp"

namespace ptcad::taskgen {

enum class Task { kCa, kPos, kSeg, kDiac };
inline constexpr Task kAllTasks[] = {Task::kCa, Task::kPos, Task::kSeg, Task::kDiac};

std::string_view task_tag(Task task);
/// Throws InvalidValue for unknown tags.
Task parse_task(std::string_view tag);
/// Comma-separated list such as "CA,POS"; empty string means no task.
std::vector<Task> parse_task_list(std::string_view list);

inline constexpr std::string_view kPosPrefix = "أعرب الجملة:";
inline constexpr std::string_view kSegPrefix = "جزّء الكلمات:";
inline constexpr std::string_view kDiacPrefix = "شكّل ما يلي:";

struct PrefinetuneSample {
  Task task = Task::kCa;
  std::string text;
  friend bool operator==(const PrefinetuneSample&, const PrefinetuneSample&) = default;
};

struct TaggedWord {
  std::string word;
  std::string tag;
};

PrefinetuneSample format_ca(std::string_view sentence);
PrefinetuneSample format_pos(std::span<const TaggedWord> words);
PrefinetuneSample format_segmentation(std::string_view raw, std::string_view segmented);
PrefinetuneSample format_diacritization(std::string_view diacritized_sentence);

/// Whitespace tokens, with every "[...]" group split out as its own token.
/// Marks and tatweel are removed from each token.
std::vector<std::string> tokenize_sample(std::string_view text);

/// CLS + token ids + SEP, truncated to `max_length`.
std::vector<std::int32_t> encode_sample(const PrefinetuneSample& sample, const Vocabulary& vocab,
                                        int max_length);

struct MaskingConfig {
  double mask_rate = 0.15;
  // Of the selected positions: this share becomes MASK, the next share a
  // random token, the rest stays unchanged.
  double mask_share = 0.8;
  double random_share = 0.1;
};

struct MaskedSample {
  std::vector<std::int32_t> input_ids;
  std::vector<std::int32_t> labels;
};

/// Bernoulli(mask_rate) selection of non-special positions, then 80/10/10
/// corruption. Deterministic in (sample, seed).
/// Throws PreconditionViolation unless 0 < mask_rate < 1, EmptyInput for an
/// empty sample.
MaskedSample mlm_mask(const PrefinetuneSample& sample, const MaskingConfig& config,
                      std::uint64_t seed, const Vocabulary& vocab, int max_length = 512);
MaskedSample mlm_mask_ids(std::span<const std::int32_t> ids, const MaskingConfig& config,
                          std::uint64_t seed, const Vocabulary& vocab);

/// "TAG TAB text" line without the trailing newline.
std::string format_sample_line(const PrefinetuneSample& sample);
/// Throws InvalidValue with the line number.
std::vector<PrefinetuneSample> parse_sample_file(std::string_view text);

/// Takes one item from each non-exhausted stream in turn.
std::vector<PrefinetuneSample> interleave_round_robin(
    const std::vector<std::vector<PrefinetuneSample>>& streams);

// Task input readers for the sample generator. Each throws InvalidValue or
// MissingTag with the offending line number.

/// POS line: word TAB tag TAB word TAB tag ...
std::vector<std::vector<TaggedWord>> parse_pos_input(std::string_view text);
/// Segmentation line: raw TAB segmented.
std::vector<std::pair<std::string, std::string>> parse_seg_input(std::string_view text);

}  // namespace ptcad::taskgen
