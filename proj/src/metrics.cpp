#include "ptcad/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "ptcad/arabic.hpp"
#include "ptcad/error.hpp"
#include "ptcad/utf8.hpp"

namespace ptcad::metrics {

namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::vector<arabic::Diacritic> classes_of(std::string_view word) {
  try {
    return arabic::align(word).classes();
  } catch (const Error& e) {
    throw Error(ErrorCode::kAlignmentFailure, e.what());
  }
}

std::string format_edge(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

ErrorCounts& ErrorCounts::operator+=(const ErrorCounts& o) {
  positions += o.positions;
  position_errors += o.position_errors;
  words += o.words;
  word_errors += o.word_errors;
  return *this;
}

double ErrorCounts::der() const { return percent(position_errors, positions); }
double ErrorCounts::wer() const { return percent(word_errors, words); }

ErrorCounts count_errors(std::string_view gold, std::string_view pred, const MetricOptions& opts) {
  if (arabic::strip_diacritics(gold) != arabic::strip_diacritics(pred)) {
    throw Error(ErrorCode::kBaseTextMismatch, "gold and prediction differ in base text");
  }
  const auto gold_words = utf8::words(gold);
  const auto pred_words = utf8::words(pred);
  ErrorCounts c;
  for (std::size_t w = 0; w < gold_words.size(); ++w) {
    if (arabic::count_arabic_letters(gold_words[w]) == 0) continue;
    const auto g = classes_of(gold_words[w]);
    const auto p = classes_of(pred_words[w]);
    ++c.words;
    bool wrong = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!opts.with_case_ending && i + 1 == g.size()) continue;
      if (!opts.include_no_diacritic && g[i] == arabic::Diacritic::kNone) continue;
      ++c.positions;
      if (g[i] != p[i]) {
        ++c.position_errors;
        wrong = true;
      }
    }
    if (wrong) ++c.word_errors;
  }
  return c;
}

double der(std::string_view gold, std::string_view pred, const MetricOptions& opts) {
  return count_errors(gold, pred, opts).der();
}

double wer(std::string_view gold, std::string_view pred, const MetricOptions& opts) {
  return count_errors(gold, pred, opts).wer();
}

Histogram bucket_stats(const std::vector<double>& values, const std::vector<double>& edges) {
  if (edges.empty()) throw Error(ErrorCode::kInvalidEdges, "no edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i]) || edges[i] < 0.0) {
      throw Error(ErrorCode::kInvalidEdges, "edges must be finite and non-negative");
    }
    if (i > 0 && !(edges[i] > edges[i - 1])) {
      throw Error(ErrorCode::kInvalidEdges, "edges must be strictly increasing");
    }
  }
  Histogram h;
  h.edges = edges;
  h.buckets.push_back({"0", 0.0, 0.0, 0, 0.0});
  double low = 0.0;
  for (double e : edges) {
    if (e == 0.0) continue;
    h.buckets.push_back({"(" + format_edge(low) + "," + format_edge(e) + "]", low, e, 0, 0.0});
    low = e;
  }
  if (low < 100.0) {
    h.buckets.push_back({"(" + format_edge(low) + ",inf)", low, INFINITY, 0, 0.0});
  }
  for (double v : values) {
    if (!(v >= 0.0)) throw Error(ErrorCode::kInvalidValue, "negative or NaN rate");
    if (v == 0.0) {
      ++h.buckets[0].count;
      continue;
    }
    for (std::size_t b = 1; b < h.buckets.size(); ++b) {
      if (v > h.buckets[b].low && v <= h.buckets[b].high) {
        ++h.buckets[b].count;
        break;
      }
    }
  }
  for (auto& b : h.buckets) {
    b.proportion = values.empty() ? 0.0
                                  : static_cast<double>(b.count) / static_cast<double>(values.size());
  }
  return h;
}

EvalReport evaluate_corpus(const std::vector<std::pair<std::string, std::string>>& pairs,
                           const MetricOptions& opts,
                           const std::optional<std::vector<std::size_t>>& segment_map,
                           const std::vector<double>& edges) {
  if (segment_map && segment_map->size() != pairs.size()) {
    throw Error(ErrorCode::kInvalidValue, "segment map size differs from pair count");
  }
  std::vector<ErrorCounts> per_sentence;
  EvalReport r;
  r.options = opts;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ErrorCounts c;
    try {
      c = count_errors(pairs[i].first, pairs[i].second, opts);
    } catch (const Error& e) {
      throw Error(e.code(), "pair " + std::to_string(i) + ": " + e.what());
    }
    r.totals += c;
    const std::size_t s = segment_map ? (*segment_map)[i] : i;
    if (s >= per_sentence.size()) per_sentence.resize(s + 1);
    per_sentence[s] += c;
  }
  r.der = r.totals.der();
  r.wer = r.totals.wer();
  r.sentence_count = per_sentence.size();
  std::vector<double> ders;
  std::vector<double> wers;
  for (const auto& c : per_sentence) {
    r.per_sentence.push_back({c.der(), c.wer()});
    ders.push_back(c.der());
    wers.push_back(c.wer());
  }
  r.der_buckets = bucket_stats(ders, edges);
  r.wer_buckets = bucket_stats(wers, edges);
  return r;
}

namespace {

nlohmann::ordered_json histogram_json(const Histogram& h) {
  nlohmann::ordered_json out;
  out["edges"] = h.edges;
  auto bins = nlohmann::ordered_json::array();
  for (const auto& b : h.buckets) {
    bins.push_back({{"label", b.label}, {"count", b.count}, {"proportion", b.proportion}});
  }
  out["bins"] = bins;
  return out;
}

}  // namespace

std::string to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["der"] = r.der;
  j["wer"] = r.wer;
  j["options"] = {{"with_case_ending", r.options.with_case_ending},
                  {"include_no_diacritic", r.options.include_no_diacritic}};
  j["sentence_count"] = r.sentence_count;
  j["totals"] = {{"positions", r.totals.positions},
                 {"position_errors", r.totals.position_errors},
                 {"words", r.totals.words},
                 {"word_errors", r.totals.word_errors}};
  auto per = nlohmann::ordered_json::array();
  for (const auto& s : r.per_sentence) per.push_back({{"der", s.der}, {"wer", s.wer}});
  j["per_sentence"] = per;
  j["buckets"] = {{"der", histogram_json(r.der_buckets)}, {"wer", histogram_json(r.wer_buckets)}};
  return j.dump(2) + "\n";
}

std::string to_key_values(const EvalReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << "der=" << r.der << "\n"
      << "wer=" << r.wer << "\n"
      << "with_case_ending=" << (r.options.with_case_ending ? "true" : "false") << "\n"
      << "include_no_diacritic=" << (r.options.include_no_diacritic ? "true" : "false") << "\n"
      << "sentence_count=" << r.sentence_count << "\n"
      << "positions=" << r.totals.positions << "\n"
      << "position_errors=" << r.totals.position_errors << "\n"
      << "words=" << r.totals.words << "\n"
      << "word_errors=" << r.totals.word_errors << "\n";
  for (const auto* h : {&r.der_buckets, &r.wer_buckets}) {
    const char* metric = h == &r.der_buckets ? "der" : "wer";
    for (const auto& b : h->buckets) {
      out << "bucket." << metric << "." << b.label << "=" << b.count << "\n";
    }
  }
  return out.str();
}

EvalReport from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    r.der = j.at("der").get<double>();
    r.wer = j.at("wer").get<double>();
    r.options.with_case_ending = j.at("options").at("with_case_ending").get<bool>();
    r.options.include_no_diacritic = j.at("options").at("include_no_diacritic").get<bool>();
    r.sentence_count = j.at("sentence_count").get<std::size_t>();
    if (j.contains("totals")) {
      const auto& t = j["totals"];
      r.totals.positions = t.at("positions").get<std::size_t>();
      r.totals.position_errors = t.at("position_errors").get<std::size_t>();
      r.totals.words = t.at("words").get<std::size_t>();
      r.totals.word_errors = t.at("word_errors").get<std::size_t>();
    }
    std::vector<double> ders;
    std::vector<double> wers;
    for (const auto& s : j.at("per_sentence")) {
      r.per_sentence.push_back({s.at("der").get<double>(), s.at("wer").get<double>()});
      ders.push_back(r.per_sentence.back().der);
      wers.push_back(r.per_sentence.back().wer);
    }
    if (r.per_sentence.size() != r.sentence_count) {
      throw Error(ErrorCode::kInvalidValue, "per_sentence length differs from sentence_count");
    }
    std::vector<double> edges = kDefaultEdges;
    if (j.contains("buckets")) edges = j["buckets"].at("der").at("edges").get<std::vector<double>>();
    r.der_buckets = bucket_stats(ders, edges);
    r.wer_buckets = bucket_stats(wers, edges);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidValue, std::string("malformed report: ") + e.what());
  }
}

std::string format_histogram(const Histogram& h, std::string_view title) {
  std::ostringstream out;
  out << title << "\n";
  char line[128];
  for (const auto& b : h.buckets) {
    std::snprintf(line, sizeof line, "  %-14s %8zu  %6.2f%%\n", b.label.c_str(), b.count,
                  100.0 * b.proportion);
    out << line;
  }
  return out.str();
}

}  // namespace ptcad::metrics
