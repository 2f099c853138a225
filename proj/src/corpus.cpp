#include "ptcad/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>

#include "ptcad/arabic.hpp"
#include "ptcad/encoding.hpp"
#include "ptcad/error.hpp"
#include "ptcad/io.hpp"
#include "ptcad/utf8.hpp"

namespace ptcad {

std::string SegmentedSentence::reconstruct() const {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    out += segments[i];
    if (i < joiners.size()) out += joiners[i];
  }
  return out;
}

namespace corpus {

namespace {

// Higher value splits first.
enum class SplitClass { kSpace = 0, kComma = 1, kPeriod = 2, kLineBreak = 3 };

struct SplitPoint {
  std::size_t begin;  // whitespace run [begin, end)
  std::size_t end;
  SplitClass cls;
};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

SplitClass classify_gap(std::string_view text, std::size_t begin, std::size_t end) {
  if (text.substr(begin, end - begin).find('\n') != std::string_view::npos) {
    return SplitClass::kLineBreak;
  }
  const std::string_view before = text.substr(0, begin);
  // Latin and Arabic full stops; Latin and Arabic commas.
  if (ends_with(before, ".") || ends_with(before, "۔")) return SplitClass::kPeriod;
  if (ends_with(before, ",") || ends_with(before, "،")) return SplitClass::kComma;
  return SplitClass::kSpace;
}

// Interior whitespace runs of `text` (never leading or trailing).
std::vector<SplitPoint> split_points(std::string_view text) {
  std::vector<SplitPoint> out;
  const auto ranges = utf8::split_words(text);
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    const std::size_t b = ranges[i - 1].end;
    const std::size_t e = ranges[i].begin;
    out.push_back({b, e, classify_gap(text, b, e)});
  }
  return out;
}

std::size_t content_cost(std::string_view text) {
  std::size_t n = 0;
  for (const auto w : utf8::words(text)) n += encoding::word_cost(w);
  return n;
}

}  // namespace

RawCorpus parse_corpus(std::string_view text, std::string source_id) {
  const std::size_t bad = utf8::first_invalid(text);
  if (bad != std::string_view::npos) {
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(bad), '\n');
    throw Error(ErrorCode::kInvalidEncoding,
                source_id + ": invalid UTF-8 on line " + std::to_string(line));
  }
  RawCorpus out;
  out.source_id = std::move(source_id);
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = utf8::trim_right(text.substr(pos, eol - pos));
    pos = eol + 1;
    bool blank = true;
    for (char c : line) blank = blank && utf8::is_space(c);
    if (!blank) out.sentences.emplace_back(line);
  }
  return out;
}

RawCorpus load_corpus(const std::filesystem::path& path) {
  return parse_corpus(io::read_file(path), path.string());
}

RawCorpus filter_partially_diacritized(const RawCorpus& corpus, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidValue, "threshold must lie in [0,1]");
  }
  RawCorpus out;
  out.source_id = corpus.source_id;
  for (const auto& s : corpus.sentences) {
    if (arabic::diacritization_ratio(s) >= threshold) out.sentences.push_back(s);
  }
  return out;
}

bool fits(std::string_view text, int token_limit) {
  return encoding::encoded_length(text) <= static_cast<std::size_t>(std::max(token_limit, 0));
}

SegmentedSentence split_long_sentence(std::string_view sentence, int token_limit,
                                      const Vocabulary& /*vocab*/) {
  if (token_limit < kReservedTokens) {
    throw Error(ErrorCode::kInvalidValue, "token_limit must be >= 2");
  }
  const std::size_t budget = static_cast<std::size_t>(token_limit - kReservedTokens);
  SegmentedSentence out;
  out.segments.emplace_back(sentence);
  if (content_cost(sentence) <= budget) return out;
  out.was_split = true;

  while (true) {
    // Longest oversized segment; first one wins ties.
    std::size_t target = out.segments.size();
    std::size_t target_cost = 0;
    for (std::size_t i = 0; i < out.segments.size(); ++i) {
      const std::size_t c = content_cost(out.segments[i]);
      if (c > budget && c > target_cost) {
        target = i;
        target_cost = c;
      }
    }
    if (target == out.segments.size()) break;

    const std::string seg = out.segments[target];
    const auto points = split_points(seg);
    if (points.empty()) {
      throw Error(ErrorCode::kUnsplittableSegment,
                  "word of " + std::to_string(target_cost) + " tokens exceeds budget of " +
                      std::to_string(budget));
    }
    SplitClass best_class = SplitClass::kSpace;
    for (const auto& p : points) best_class = std::max(best_class, p.cls);
    // Occurrence of that class closest to the cost midpoint.
    const SplitPoint* chosen = nullptr;
    std::size_t chosen_imbalance = 0;
    for (const auto& p : points) {
      if (p.cls != best_class) continue;
      const std::size_t left = content_cost(std::string_view(seg).substr(0, p.begin));
      const std::size_t right = target_cost - left;
      const std::size_t imbalance = left > right ? left - right : right - left;
      if (chosen == nullptr || imbalance < chosen_imbalance) {
        chosen = &p;
        chosen_imbalance = imbalance;
      }
    }
    std::string left = seg.substr(0, chosen->begin);
    std::string joiner = seg.substr(chosen->begin, chosen->end - chosen->begin);
    std::string right = seg.substr(chosen->end);
    out.segments[target] = std::move(left);
    out.segments.insert(out.segments.begin() + static_cast<long>(target) + 1, std::move(right));
    out.joiners.insert(out.joiners.begin() + static_cast<long>(target), std::move(joiner));
  }
  return out;
}

RawCorpus prepare_train_set(const RawCorpus& corpus, int token_limit, const Vocabulary&) {
  RawCorpus out;
  out.source_id = corpus.source_id;
  for (const auto& s : corpus.sentences) {
    if (fits(s, token_limit)) out.sentences.push_back(s);
  }
  return out;
}

std::vector<SegmentedSentence> prepare_test_set(const RawCorpus& corpus, int token_limit,
                                                const Vocabulary& vocab) {
  std::vector<SegmentedSentence> out;
  out.reserve(corpus.sentences.size());
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    SegmentedSentence s = split_long_sentence(corpus.sentences[i], token_limit, vocab);
    s.original_index = i;
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_manifest(const std::vector<SegmentedSentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (std::size_t k = 0; k < s.segments.size(); ++k) {
      out += std::to_string(s.original_index);
      out += '\t';
      out += std::to_string(k);
      out += '\t';
      out += s.segments[k];
      out += '\n';
    }
  }
  return out;
}

std::vector<ManifestRecord> parse_manifest(std::string_view text) {
  std::vector<ManifestRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto parse_index = [&](std::string_view field) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw Error(ErrorCode::kInvalidValue,
                  "manifest line " + std::to_string(line_no) + ": bad index");
    }
    return v;
  };
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidValue,
                  "manifest line " + std::to_string(line_no) + ": expected 3 fields");
    }
    out.push_back({parse_index(line.substr(0, t1)), parse_index(line.substr(t1 + 1, t2 - t1 - 1)),
                   std::string(line.substr(t2 + 1))});
  }
  return out;
}

}  // namespace corpus
}  // namespace ptcad
