#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ptcad::metrics {

struct MetricOptions {
  // false: the last Arabic letter of every word is not scored.
  bool with_case_ending = true;
  // false: positions whose gold class is NONE are not scored.
  bool include_no_diacritic = true;
  friend bool operator==(const MetricOptions&, const MetricOptions&) = default;
};

/// Raw tallies behind DER and WER, summable across sentences.
struct ErrorCounts {
  std::size_t positions = 0;
  std::size_t position_errors = 0;
  std::size_t words = 0;
  std::size_t word_errors = 0;

  ErrorCounts& operator+=(const ErrorCounts& other);
  double der() const;
  double wer() const;
};

/// Throws BaseTextMismatch or AlignmentFailure.
ErrorCounts count_errors(std::string_view gold, std::string_view pred, const MetricOptions& opts);

/// Percentages in [0,100]; 0 when nothing is scored.
double der(std::string_view gold, std::string_view pred, const MetricOptions& opts = {});
double wer(std::string_view gold, std::string_view pred, const MetricOptions& opts = {});

struct Bucket {
  std::string label;  // "0", "(0,30]", ...
  double low = 0.0;   // exclusive, except for the zero bin
  double high = 0.0;  // inclusive
  std::size_t count = 0;
  double proportion = 0.0;
};

struct Histogram {
  std::vector<double> edges;
  std::vector<Bucket> buckets;
};

inline const std::vector<double> kDefaultEdges = {0.0, 30.0, 100.0};

/// A bin for exact zero, then (e[i-1], e[i]] for each edge above zero
/// (starting at 0), then (last, inf) when the last edge is below 100.
/// Throws InvalidEdges unless edges are non-empty, non-negative and strictly
/// increasing; InvalidValue for negative values.
Histogram bucket_stats(const std::vector<double>& values, const std::vector<double>& edges);

struct SentenceScore {
  double der = 0.0;
  double wer = 0.0;
};

struct EvalReport {
  double der = 0.0;
  double wer = 0.0;
  MetricOptions options;
  std::size_t sentence_count = 0;
  ErrorCounts totals;
  std::vector<SentenceScore> per_sentence;
  Histogram der_buckets;
  Histogram wer_buckets;
};

/// Micro-averaged corpus figures. With `segment_map`, pair i belongs to
/// original sentence segment_map[i] and per-sentence scores pool its
/// segments. Errors are rethrown with the pair index prepended.
EvalReport evaluate_corpus(const std::vector<std::pair<std::string, std::string>>& pairs,
                           const MetricOptions& opts,
                           const std::optional<std::vector<std::size_t>>& segment_map = {},
                           const std::vector<double>& edges = kDefaultEdges);

/// Structured document with keys der, wer, options, sentence_count,
/// per_sentence and buckets.
std::string to_json(const EvalReport& report);
/// Flat "key=value" lines for harnesses.
std::string to_key_values(const EvalReport& report);
/// Inverse of to_json. Throws InvalidValue.
EvalReport from_json(std::string_view text);

/// Human-readable bucket table.
std::string format_histogram(const Histogram& histogram, std::string_view title);

}  // namespace ptcad::metrics
