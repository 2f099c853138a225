#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ptcad/metrics.hpp"
#include "ptcad/model.hpp"
#include "ptcad/vocabulary.hpp"

namespace ptcad::inference {

struct Strategy {
  enum class Kind { kZero, kSliding };
  Kind kind = Kind::kZero;
  int step = 0;  // words per slide; sliding only

  static Strategy zero() { return {}; }
  static Strategy sliding(int p) { return {Kind::kSliding, p}; }
  friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// "zero" or "sliding:<p>" with p >= 1. Throws InvalidStrategy.
Strategy parse_strategy(std::string_view text);
std::string format_strategy(const Strategy& strategy);

/// Inclusive word index range.
struct Window {
  std::size_t first = 0;
  std::size_t last = 0;
  friend bool operator==(const Window&, const Window&) = default;
};

struct WindowPlan {
  std::vector<Window> windows;
  Strategy strategy;
  std::size_t word_count = 0;
};

/// Greedy left-to-right packing into disjoint maximal windows.
/// Throws UnsplittableWord.
WindowPlan plan_windows_zero(std::string_view sentence, int token_limit, const Vocabulary& vocab);

/// Window starts advance by p words (never past the previous window's end + 1,
/// so no word is skipped); each window extends to its maximal fitting end.
/// Throws InvalidStep or UnsplittableWord.
WindowPlan plan_windows_sliding(std::string_view sentence, int token_limit, int p,
                                const Vocabulary& vocab);

WindowPlan plan_windows(std::string_view sentence, int token_limit, const Strategy& strategy,
                        const Vocabulary& vocab);

/// Full-word forms proposed by each window, keyed by word index.
struct Candidate {
  std::string form;
  std::size_t window = 0;
};

/// Most frequent form; ties go to the window whose centre is nearest the
/// word, then to the earliest window.
std::string vote(const std::vector<Candidate>& candidates, const std::vector<Window>& windows,
                 std::size_t word_index);

/// Diacritizes each window, votes per word and reassembles the sentence with
/// its original whitespace. Blank input is returned unchanged.
std::string diacritize(std::string_view sentence, const model::Model& model,
                       const Vocabulary& vocab, const WindowPlan& plan);
std::string diacritize(std::string_view sentence, const model::Model& model,
                       const Vocabulary& vocab, const Strategy& strategy, int token_limit);

struct StrategyReport {
  Strategy strategy;
  metrics::EvalReport report;
};

/// Diacritizes the stripped gold sentences under each strategy and scores
/// them against gold.
std::vector<StrategyReport> compare_strategies(const std::vector<std::string>& gold,
                                               const model::Model& model, const Vocabulary& vocab,
                                               const std::vector<Strategy>& strategies,
                                               int token_limit,
                                               const metrics::MetricOptions& opts = {});

}  // namespace ptcad::inference
