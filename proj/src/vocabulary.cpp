#include "ptcad/vocabulary.hpp"

#include <algorithm>
#include <charconv>

#include "ptcad/arabic.hpp"
#include "ptcad/corpus.hpp"
#include "ptcad/error.hpp"
#include "ptcad/io.hpp"
#include "ptcad/utf8.hpp"

namespace ptcad {

namespace {

constexpr std::string_view kSpecialTokens[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

}  // namespace

void Vocabulary::push(std::string token) {
  const auto next = static_cast<std::int32_t>(tokens_.size());
  ids_.emplace(token, next);
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::reserved_only() {
  Vocabulary v;
  for (auto s : kSpecialTokens) v.push(std::string(s));
  for (const auto& entry : arabic::diacritic_table()) {
    v.push("[" + std::string(arabic::gloss(entry.id)) + "]");
  }
  v.reserved_count_ = v.size();
  return v;
}

std::int32_t Vocabulary::id(std::string_view token) const {
  return find(token).value_or(kUnk);
}

std::optional<std::int32_t> Vocabulary::find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || id >= size()) {
    throw Error(ErrorCode::kInvalidValue, "token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  Vocabulary reserved = reserved_only();
  Vocabulary v;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidValue, "vocabulary line " + std::to_string(line_no) +
                                                ": missing TAB");
    }
    const std::string_view tok = line.substr(0, tab);
    const std::string_view num = line.substr(tab + 1);
    std::int32_t id = -1;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), id);
    if (ec != std::errc() || ptr != num.data() + num.size() || id != v.size()) {
      throw Error(ErrorCode::kInvalidValue, "vocabulary line " + std::to_string(line_no) +
                                                ": ids must be dense and sorted");
    }
    if (v.ids_.count(std::string(tok)) != 0) {
      throw Error(ErrorCode::kInvalidValue, "vocabulary line " + std::to_string(line_no) +
                                                ": duplicate token");
    }
    v.push(std::string(tok));
  }
  if (v.size() < reserved.size()) {
    throw Error(ErrorCode::kInvalidValue, "vocabulary lacks reserved tokens");
  }
  for (std::int32_t i = 0; i < reserved.size(); ++i) {
    if (v.tokens_[i] != reserved.tokens_[i]) {
      throw Error(ErrorCode::kInvalidValue, "vocabulary reserved token mismatch at id " +
                                                std::to_string(i));
    }
  }
  v.reserved_count_ = reserved.size();
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  io::write_file_atomic(path, serialize());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  return parse(io::read_file(path));
}

std::uint64_t Vocabulary::digest() const { return io::fnv1a64(serialize()); }

void VocabularyBuilder::add_text(std::string_view text) {
  ++texts_;
  for (const auto w : utf8::words(text)) add_token(w);
}

void VocabularyBuilder::add_token(std::string_view token) {
  std::string key = arabic::normalize_token(token);
  if (key.empty()) return;
  ++counts_[std::move(key)];
}

Vocabulary VocabularyBuilder::build(int min_frequency) const {
  if (min_frequency < 1) {
    throw Error(ErrorCode::kInvalidValue, "min_frequency must be >= 1");
  }
  if (texts_ == 0 && counts_.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "no text to build a vocabulary from");
  }
  Vocabulary v = Vocabulary::reserved_only();
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts_) {
    if (n >= static_cast<std::size_t>(min_frequency) && !v.find(tok)) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [tok, n] : kept) v.push(std::move(tok));
  v.min_frequency_ = min_frequency;
  return v;
}

Vocabulary build_vocab(const RawCorpus& corpus, int min_frequency) {
  if (corpus.sentences.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "corpus '" + corpus.source_id + "' is empty");
  }
  VocabularyBuilder b;
  for (const auto& s : corpus.sentences) b.add_text(s);
  return b.build(min_frequency);
}

}  // namespace ptcad
