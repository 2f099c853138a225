#include "ptcad/taskgen.hpp"

#include "ptcad/arabic.hpp"
#include "ptcad/error.hpp"
#include "ptcad/random.hpp"
#include "ptcad/utf8.hpp"

namespace ptcad::taskgen {

namespace {

bool blank(std::string_view s) {
  for (char c : s) {
    if (!utf8::is_space(c)) return false;
  }
  return true;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;
    if (!blank(line)) fn(line, line_no);
  }
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && utf8::is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && utf8::is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view task_tag(Task task) {
  switch (task) {
    case Task::kCa: return "CA";
    case Task::kPos: return "POS";
    case Task::kSeg: return "SEG";
    case Task::kDiac: return "DIAC";
  }
  return "CA";
}

Task parse_task(std::string_view tag) {
  for (Task t : kAllTasks) {
    if (task_tag(t) == tag) return t;
  }
  throw Error(ErrorCode::kInvalidValue, "unknown task tag '" + std::string(tag) + "'");
}

std::vector<Task> parse_task_list(std::string_view list) {
  std::vector<Task> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    const std::string_view item = trim(list.substr(pos, comma - pos));
    if (!item.empty()) out.push_back(parse_task(item));
    pos = comma + 1;
  }
  return out;
}

PrefinetuneSample format_ca(std::string_view sentence) {
  if (blank(sentence)) throw Error(ErrorCode::kEmptyInput, "empty CA sentence");
  return {Task::kCa, std::string(sentence)};
}

PrefinetuneSample format_pos(std::span<const TaggedWord> words) {
  if (words.empty()) throw Error(ErrorCode::kEmptyInput, "empty POS sequence");
  std::string text(kPosPrefix);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (blank(words[i].word)) {
      throw Error(ErrorCode::kEmptyInput, "empty word at position " + std::to_string(i));
    }
    if (blank(words[i].tag)) {
      throw Error(ErrorCode::kMissingTag, "no tag for word '" + words[i].word + "'");
    }
    text += ' ';
    text += words[i].word;
    text += " [";
    text += words[i].tag;
    text += ']';
  }
  return {Task::kPos, std::move(text)};
}

PrefinetuneSample format_segmentation(std::string_view raw, std::string_view segmented) {
  if (blank(raw) || blank(segmented)) {
    throw Error(ErrorCode::kEmptyInput, "empty segmentation input");
  }
  std::string text(kSegPrefix);
  text += ' ';
  text += raw;
  text += " [SEP] ";
  text += segmented;
  return {Task::kSeg, std::move(text)};
}

PrefinetuneSample format_diacritization(std::string_view diacritized_sentence) {
  const auto words = utf8::words(diacritized_sentence);
  if (words.empty()) throw Error(ErrorCode::kEmptyInput, "empty sentence");
  std::string text(kDiacPrefix);
  for (const auto w : words) {
    text += ' ';
    text += arabic::strip_diacritics(w);
    if (arabic::count_arabic_letters(w) == 0) continue;
    std::vector<arabic::Diacritic> classes;
    try {
      classes = arabic::align(w).classes();
    } catch (const Error& e) {
      throw Error(ErrorCode::kAlignmentFailure, e.what());
    }
    for (auto d : classes) {
      text += '[';
      text += arabic::gloss(d);
      text += ']';
    }
  }
  return {Task::kDiac, std::move(text)};
}

std::vector<std::string> tokenize_sample(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      std::string t = arabic::normalize_token(current);
      if (!t.empty()) out.push_back(std::move(t));
      current.clear();
    }
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (utf8::is_space(c)) {
      flush();
      ++i;
    } else if (c == '[') {
      const std::size_t close = text.find(']', i);
      const std::size_t newline = text.find('\n', i);
      if (close == std::string_view::npos || newline < close) {
        current.push_back(c);
        ++i;
        continue;
      }
      flush();
      current.assign(text.substr(i, close - i + 1));
      flush();
      i = close + 1;
    } else {
      current.push_back(c);
      ++i;
    }
  }
  flush();
  return out;
}

std::vector<std::int32_t> encode_sample(const PrefinetuneSample& sample, const Vocabulary& vocab,
                                        int max_length) {
  std::vector<std::int32_t> ids;
  ids.push_back(Vocabulary::kCls);
  const auto tokens = tokenize_sample(sample.text);
  const std::size_t room = max_length > 2 ? static_cast<std::size_t>(max_length - 2) : 0;
  for (std::size_t i = 0; i < tokens.size() && i < room; ++i) ids.push_back(vocab.id(tokens[i]));
  ids.push_back(Vocabulary::kSep);
  return ids;
}

MaskedSample mlm_mask_ids(std::span<const std::int32_t> ids, const MaskingConfig& config,
                          std::uint64_t seed, const Vocabulary& vocab) {
  if (!(config.mask_rate > 0.0 && config.mask_rate < 1.0)) {
    throw Error(ErrorCode::kPreconditionViolation, "mask_rate must lie in (0,1)");
  }
  if (!(config.mask_share >= 0.0 && config.random_share >= 0.0 &&
        config.mask_share + config.random_share <= 1.0)) {
    throw Error(ErrorCode::kPreconditionViolation, "corruption shares must sum to <= 1");
  }
  bool any = false;
  for (auto id : ids) any = any || !vocab.is_special(id);
  if (!any) throw Error(ErrorCode::kEmptyInput, "sample has no maskable token");

  Rng rng(seed);
  MaskedSample out;
  out.input_ids.assign(ids.begin(), ids.end());
  out.labels.assign(ids.size(), -100);
  const auto random_span = static_cast<std::uint64_t>(vocab.size() - Vocabulary::kSpecialCount);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    // Draw for every position so the stream does not depend on the content.
    const double select = rng.uniform();
    const double corrupt = rng.uniform();
    const std::uint64_t replacement = rng.next_u64();
    if (vocab.is_special(ids[i]) || select >= config.mask_rate) continue;
    out.labels[i] = ids[i];
    if (corrupt < config.mask_share) {
      out.input_ids[i] = Vocabulary::kMask;
    } else if (corrupt < config.mask_share + config.random_share && random_span > 0) {
      out.input_ids[i] =
          Vocabulary::kSpecialCount + static_cast<std::int32_t>(replacement % random_span);
    }
  }
  return out;
}

MaskedSample mlm_mask(const PrefinetuneSample& sample, const MaskingConfig& config,
                      std::uint64_t seed, const Vocabulary& vocab, int max_length) {
  if (blank(sample.text)) throw Error(ErrorCode::kEmptyInput, "empty sample");
  const auto ids = encode_sample(sample, vocab, max_length);
  return mlm_mask_ids(ids, config, seed, vocab);
}

std::string format_sample_line(const PrefinetuneSample& sample) {
  std::string line(task_tag(sample.task));
  line += '\t';
  for (char c : sample.text) line += (c == '\n' || c == '\t') ? ' ' : c;
  return line;
}

std::vector<PrefinetuneSample> parse_sample_file(std::string_view text) {
  std::vector<PrefinetuneSample> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidValue,
                  "sample line " + std::to_string(line_no) + ": expected TAG TAB text");
    }
    try {
      out.push_back({parse_task(line.substr(0, tab)), std::string(line.substr(tab + 1))});
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidValue,
                  "sample line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return out;
}

std::vector<PrefinetuneSample> interleave_round_robin(
    const std::vector<std::vector<PrefinetuneSample>>& streams) {
  std::vector<PrefinetuneSample> out;
  std::size_t longest = 0;
  for (const auto& s : streams) longest = std::max(longest, s.size());
  for (std::size_t i = 0; i < longest; ++i) {
    for (const auto& s : streams) {
      if (i < s.size()) out.push_back(s[i]);
    }
  }
  return out;
}

std::vector<std::vector<TaggedWord>> parse_pos_input(std::string_view text) {
  std::vector<std::vector<TaggedWord>> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_tabs(line);
    if (fields.size() % 2 != 0) {
      throw Error(ErrorCode::kMissingTag,
                  "POS line " + std::to_string(line_no) + ": word without a tag");
    }
    std::vector<TaggedWord> words;
    for (std::size_t i = 0; i < fields.size(); i += 2) {
      const auto w = trim(fields[i]);
      const auto t = trim(fields[i + 1]);
      if (w.empty() || t.empty()) {
        throw Error(ErrorCode::kMissingTag,
                    "POS line " + std::to_string(line_no) + ": empty word or tag");
      }
      words.push_back({std::string(w), std::string(t)});
    }
    out.push_back(std::move(words));
  });
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_seg_input(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_tabs(line);
    if (fields.size() != 2 || trim(fields[0]).empty() || trim(fields[1]).empty()) {
      throw Error(ErrorCode::kInvalidValue,
                  "SEG line " + std::to_string(line_no) + ": expected raw TAB segmented");
    }
    out.emplace_back(std::string(trim(fields[0])), std::string(trim(fields[1])));
  });
  return out;
}

}  // namespace ptcad::taskgen
