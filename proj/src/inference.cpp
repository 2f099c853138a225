#include "ptcad/inference.hpp"

#include <charconv>
#include <cstdlib>
#include <map>

#include "ptcad/arabic.hpp"
#include "ptcad/corpus.hpp"
#include "ptcad/encoding.hpp"
#include "ptcad/error.hpp"
#include "ptcad/utf8.hpp"

namespace ptcad::inference {

Strategy parse_strategy(std::string_view text) {
  if (text == "zero") return Strategy::zero();
  constexpr std::string_view prefix = "sliding:";
  if (text.substr(0, prefix.size()) == prefix) {
    const auto digits = text.substr(prefix.size());
    int p = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), p);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty() && p >= 1) {
      return Strategy::sliding(p);
    }
  }
  throw Error(ErrorCode::kInvalidStrategy,
              "expected 'zero' or 'sliding:<p>' with p >= 1, got '" + std::string(text) + "'");
}

std::string format_strategy(const Strategy& s) {
  return s.kind == Strategy::Kind::kZero ? "zero" : "sliding:" + std::to_string(s.step);
}

namespace {

std::vector<std::size_t> word_costs(std::string_view sentence, int token_limit) {
  const auto budget = static_cast<std::size_t>(std::max(0, token_limit - corpus::kReservedTokens));
  std::vector<std::size_t> costs;
  for (const auto w : utf8::words(sentence)) {
    const std::size_t c = encoding::word_cost(arabic::strip_diacritics(w));
    if (c > budget) {
      throw Error(ErrorCode::kUnsplittableWord,
                  "word of cost " + std::to_string(c) + " exceeds the budget " +
                      std::to_string(budget));
    }
    costs.push_back(c);
  }
  return costs;
}

// Last index reachable from `first` without exceeding the budget.
std::size_t extend(const std::vector<std::size_t>& costs, std::size_t first, std::size_t budget) {
  std::size_t used = costs[first];
  std::size_t last = first;
  while (last + 1 < costs.size() && used + costs[last + 1] <= budget) used += costs[++last];
  return last;
}

}  // namespace

WindowPlan plan_windows_zero(std::string_view sentence, int token_limit, const Vocabulary&) {
  const auto costs = word_costs(sentence, token_limit);
  const auto budget = static_cast<std::size_t>(token_limit - corpus::kReservedTokens);
  WindowPlan plan;
  plan.word_count = costs.size();
  std::size_t first = 0;
  while (first < costs.size()) {
    const std::size_t last = extend(costs, first, budget);
    plan.windows.push_back({first, last});
    first = last + 1;
  }
  return plan;
}

WindowPlan plan_windows_sliding(std::string_view sentence, int token_limit, int p,
                                const Vocabulary&) {
  if (p < 1) throw Error(ErrorCode::kInvalidStep, "step must be >= 1, got " + std::to_string(p));
  const auto costs = word_costs(sentence, token_limit);
  const auto budget = static_cast<std::size_t>(token_limit - corpus::kReservedTokens);
  WindowPlan plan;
  plan.strategy = Strategy::sliding(p);
  plan.word_count = costs.size();
  if (costs.empty()) return plan;
  std::size_t first = 0;
  while (true) {
    const std::size_t last = extend(costs, first, budget);
    plan.windows.push_back({first, last});
    if (last + 1 >= costs.size()) break;
    first = std::min(first + static_cast<std::size_t>(p), last + 1);
  }
  return plan;
}

WindowPlan plan_windows(std::string_view sentence, int token_limit, const Strategy& strategy,
                        const Vocabulary& vocab) {
  return strategy.kind == Strategy::Kind::kZero
             ? plan_windows_zero(sentence, token_limit, vocab)
             : plan_windows_sliding(sentence, token_limit, strategy.step, vocab);
}

std::string vote(const std::vector<Candidate>& candidates, const std::vector<Window>& windows,
                 std::size_t word_index) {
  if (candidates.empty()) throw Error(ErrorCode::kPreconditionViolation, "no candidates");
  std::map<std::string, std::size_t> tally;
  std::size_t top = 0;
  for (const auto& c : candidates) top = std::max(top, ++tally[c.form]);

  // Doubled distance keeps half-word centres exact.
  auto distance = [&](std::size_t w) {
    const auto twice_centre = static_cast<long long>(windows[w].first + windows[w].last);
    return std::llabs(twice_centre - 2 * static_cast<long long>(word_index));
  };
  const Candidate* best = nullptr;
  for (const auto& c : candidates) {
    if (tally[c.form] != top) continue;
    if (best == nullptr || distance(c.window) < distance(best->window) ||
        (distance(c.window) == distance(best->window) && c.window < best->window)) {
      best = &c;
    }
  }
  return best->form;
}

std::string diacritize(std::string_view sentence, const model::Model& model,
                       const Vocabulary& vocab, const WindowPlan& plan) {
  const auto ranges = utf8::split_words(sentence);
  if (ranges.empty()) return std::string(sentence);
  if (plan.word_count != ranges.size()) {
    throw Error(ErrorCode::kPreconditionViolation, "plan does not match the sentence");
  }
  std::vector<std::vector<Candidate>> candidates(ranges.size());
  for (std::size_t w = 0; w < plan.windows.size(); ++w) {
    const auto& win = plan.windows[w];
    const std::string_view text =
        sentence.substr(ranges[win.first].begin, ranges[win.last].end - ranges[win.first].begin);
    const auto sample = encoding::encode_for_inference(text, vocab, model.config().max_seq_len);
    const auto predicted = model.predict(sample);
    const std::string out = encoding::decode(text, predicted, sample.spans);
    const auto forms = utf8::words(out);
    if (forms.size() != win.last - win.first + 1) {
      throw Error(ErrorCode::kSpanMismatch, "decoded window lost words");
    }
    for (std::size_t k = 0; k < forms.size(); ++k) {
      candidates[win.first + k].push_back({std::string(forms[k]), w});
    }
  }
  std::string result;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    result.append(sentence.substr(cursor, ranges[i].begin - cursor));
    result += vote(candidates[i], plan.windows, i);
    cursor = ranges[i].end;
  }
  result.append(sentence.substr(cursor));
  return result;
}

std::string diacritize(std::string_view sentence, const model::Model& model,
                       const Vocabulary& vocab, const Strategy& strategy, int token_limit) {
  return diacritize(sentence, model, vocab, plan_windows(sentence, token_limit, strategy, vocab));
}

std::vector<StrategyReport> compare_strategies(const std::vector<std::string>& gold,
                                               const model::Model& model, const Vocabulary& vocab,
                                               const std::vector<Strategy>& strategies,
                                               int token_limit,
                                               const metrics::MetricOptions& opts) {
  std::vector<StrategyReport> out;
  for (const auto& s : strategies) {
    std::vector<std::pair<std::string, std::string>> pairs;
    pairs.reserve(gold.size());
    for (const auto& g : gold) {
      pairs.emplace_back(g, diacritize(arabic::strip_diacritics(g), model, vocab, s, token_limit));
    }
    out.push_back({s, metrics::evaluate_corpus(pairs, opts)});
  }
  return out;
}

}  // namespace ptcad::inference
