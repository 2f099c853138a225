#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ptcad {

struct RawCorpus;

/// Whole-word vocabulary with dense ids. Ids 0..4 are the special tokens,
/// followed by one reserved token per diacritic gloss ("[فتحة]", ...), then
/// corpus tokens by descending frequency.
class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kCls = 2;
  static constexpr std::int32_t kSep = 3;
  static constexpr std::int32_t kMask = 4;
  static constexpr std::int32_t kSpecialCount = 5;

  /// Specials plus gloss tokens, no corpus tokens.
  static Vocabulary reserved_only();

  std::int32_t size() const { return static_cast<std::int32_t>(tokens_.size()); }
  /// First id after the specials and gloss tokens.
  std::int32_t first_corpus_id() const { return reserved_count_; }
  std::int32_t reserved_count() const { return reserved_count_; }
  int min_frequency() const { return min_frequency_; }

  /// UNK for unknown tokens.
  std::int32_t id(std::string_view token) const;
  std::optional<std::int32_t> find(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  bool is_special(std::int32_t id) const { return id >= 0 && id < kSpecialCount; }

  /// "token TAB id" lines sorted by id.
  std::string serialize() const;
  /// Throws InvalidValue on malformed input.
  static Vocabulary parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  /// FNV-1a 64 of serialize().
  std::uint64_t digest() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  friend class VocabularyBuilder;
  void push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> ids_;
  std::int32_t reserved_count_ = 0;
  int min_frequency_ = 1;
};

/// Counts tokens (after mark and tatweel removal) and emits a Vocabulary.
class VocabularyBuilder {
 public:
  /// Whitespace tokens of `text`.
  void add_text(std::string_view text);
  void add_token(std::string_view token);
  std::size_t distinct_tokens() const { return counts_.size(); }
  std::size_t texts_added() const { return texts_; }

  /// Throws EmptyCorpus when nothing was added, InvalidValue for min_frequency < 1.
  Vocabulary build(int min_frequency) const;

 private:
  std::map<std::string, std::size_t> counts_;
  std::size_t texts_ = 0;
};

Vocabulary build_vocab(const RawCorpus& corpus, int min_frequency = 2);

}  // namespace ptcad
