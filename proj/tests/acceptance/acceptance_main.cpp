// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ptcad/arabic.hpp"
#include "ptcad/encoding.hpp"
#include "ptcad/error.hpp"
#include "ptcad/inference.hpp"
#include "ptcad/io.hpp"
#include "ptcad/metrics.hpp"
#include "ptcad/model.hpp"
#include "ptcad/pipeline.hpp"
#include "ptcad/utf8.hpp"
#include "synthetic_language.hpp"

namespace {

using namespace ptcad;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "ptcad_acceptance";
  std::filesystem::create_directories(dir);
  return dir;
}

metrics::EvalReport score(const model::Model& m, const Vocabulary& vocab,
                          const std::vector<std::string>& gold) {
  return inference::compare_strategies(gold, m, vocab, {inference::Strategy::zero()}, 512)
      .front()
      .report;
}

// 1. align/apply round trip and the letter count law on random words.
Outcome algebra_round_trip() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::size_t failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto w = oracle::random_word(rng, true);
    try {
      const auto aligned = arabic::align(w.text);
      std::vector<int> ids;
      for (auto d : aligned.classes()) ids.push_back(arabic::id(d));
      const bool ok = arabic::apply(aligned) == arabic::canonicalize(w.text) &&
                      arabic::canonicalize(w.text) == w.canonical &&
                      aligned.letters.size() == arabic::count_arabic_letters(w.text) &&
                      aligned.letters.size() == w.classes.size() && ids == w.classes;
      if (!ok) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 10.0,
          fmt("failures=%.0f of 10000, %.2fs (limit 10s)", static_cast<double>(failures), secs)};
}

// 2. Mask-count law, ignore discipline and decode round trip.
Outcome encoding_laws() {
  Rng rng(202);
  std::vector<std::string> sentences;
  std::vector<std::vector<oracle::GeneratedWord>> words(1000);
  for (int i = 0; i < 1000; ++i) sentences.push_back(oracle::random_sentence(rng, 12, &words[i]));
  VocabularyBuilder b;
  for (std::size_t i = 0; i < sentences.size(); i += 2) b.add_text(sentences[i]);
  const Vocabulary vocab = b.build(1);

  std::size_t failures = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    const auto sample = encoding::encode_for_training(s, vocab, 4096);
    bool ok = sample.tokens.front() == Vocabulary::kCls && sample.tokens.back() == Vocabulary::kSep &&
              sample.spans.size() == words[i].size() && sample.tokens.size() == sample.labels.size();
    std::size_t expected_len = 2;
    std::vector<bool> is_mask(sample.tokens.size(), false);
    for (std::size_t w = 0; ok && w < words[i].size(); ++w) {
      const auto& span = sample.spans[w];
      const auto& gw = words[i][w];
      expected_len += 1 + gw.classes.size();
      ok = span.mask_count == static_cast<std::int32_t>(gw.classes.size()) &&
           span.mask_begin == span.token_pos + 1 &&
           sample.tokens[static_cast<std::size_t>(span.token_pos)] ==
               vocab.id(arabic::strip_diacritics(gw.text));
      for (std::int32_t k = 0; ok && k < span.mask_count; ++k) {
        const auto t = static_cast<std::size_t>(span.mask_begin + k);
        is_mask[t] = true;
        ok = sample.tokens[t] == Vocabulary::kMask && sample.labels[t] == gw.classes[static_cast<std::size_t>(k)];
      }
    }
    ok = ok && sample.tokens.size() == expected_len;
    for (std::size_t t = 0; ok && t < sample.tokens.size(); ++t) {
      if (!is_mask[t]) ok = sample.labels[t] == encoding::kIgnore;
    }
    if (ok) {
      const auto labels = encoding::mask_labels(sample);
      ok = encoding::decode(arabic::strip_diacritics(s), labels, sample.spans) == s;
    }
    if (!ok) ++failures;
  }
  return {failures == 0, fmt("failures=%.0f of 1000 sentences", static_cast<double>(failures))};
}

// 3. The published sample sentence.
Outcome figure_fidelity() {
  const std::string sentence = "ذَاتِ مَآثِرَ جَلِيلَةٍ وَمَزَايَا جَمَّةٍ.";
  using D = arabic::Diacritic;
  const std::vector<std::size_t> want_counts = {3, 4, 5, 6, 3};
  const std::vector<D> want_labels = {
      D::kFatha, D::kNone,  D::kKasra,                                           // ذات
      D::kFatha, D::kNone,  D::kKasra, D::kFatha,                                // مآثر
      D::kFatha, D::kKasra, D::kNone,  D::kFatha, D::kKasratan,                  // جليلة
      D::kFatha, D::kFatha, D::kFatha, D::kNone,  D::kFatha,    D::kNone,        // ومزايا
      D::kFatha, D::kShaddaFatha, D::kKasratan,                                  // جمة
  };
  VocabularyBuilder b;
  b.add_text(sentence);
  const auto sample = encoding::encode_for_training(sentence, b.build(1));
  std::vector<std::size_t> counts;
  for (const auto& span : sample.spans) counts.push_back(static_cast<std::size_t>(span.mask_count));
  const auto labels = encoding::mask_labels(sample);
  std::string glosses;
  for (auto d : labels) glosses += "[" + std::string(arabic::gloss(d)) + "]";
  const bool ok = counts == want_counts && labels == want_labels;
  return {ok, "mask counts " + std::to_string(counts.size()) + " words, labels " + glosses};
}

// 4. der/wer against the brute-force counter.
Outcome metric_oracle() {
  Rng rng(404);
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string gold = oracle::random_sentence(rng, 8);
    const std::string pred = oracle::perturb_classes(rng, gold, 0.15);
    for (int combo = 0; combo < 4; ++combo) {
      const metrics::MetricOptions opts{(combo & 1) != 0, (combo & 2) != 0};
      const auto ref = oracle::brute_force_counts(gold, pred, opts.with_case_ending,
                                                  opts.include_no_diacritic);
      const double ref_der = ref.positions == 0 ? 0.0 : 100.0 * static_cast<double>(ref.position_errors) /
                                                            static_cast<double>(ref.positions);
      const double ref_wer =
          ref.words == 0 ? 0.0 : 100.0 * static_cast<double>(ref.word_errors) / static_cast<double>(ref.words);
      if (metrics::der(gold, pred, opts) != ref_der || metrics::wer(gold, pred, opts) != ref_wer) {
        ++mismatches;
      }
    }
  }
  return {mismatches == 0, fmt("mismatches=%.0f of 40000 evaluations", static_cast<double>(mismatches))};
}

// 5. Finite-difference gradient check.
Outcome gradient_check() {
  const auto t0 = Clock::now();
  model::ModelConfig c;
  c.vocab_size = 32;
  c.hidden_dim = 16;
  c.layer_count = 2;
  c.head_count = 2;
  c.ffn_dim = 32;
  c.max_seq_len = 6;
  c.slot_count = 4;
  model::GradCheckOptions o;
  o.tolerance = 1e-4;
  o.step = 1e-5;
  o.probes_per_tensor = 12;
  const auto r = model::gradient_check_report(c, o);
  const double secs = seconds_since(t0);
  return {r.ok() && secs < 60.0,
          fmt("passed %.0f/%.0f probes", static_cast<double>(r.passed), static_cast<double>(r.probed)) +
              fmt(", max rel err %.3g, %.2fs (limit 60s)", r.max_relative_error, secs)};
}

// 6. Memorization of a 50-sentence corpus with the desk-scale model.
Outcome memorization() {
  const auto t0 = Clock::now();
  synth::SyntheticLanguage lang;
  Rng rng(606);
  std::vector<std::string> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back(lang.random_sentence(rng));
  VocabularyBuilder b;
  for (const auto& s : corpus) b.add_text(s);
  const Vocabulary vocab = b.build(1);
  const auto data = pipeline::encode_training_set(corpus, vocab, 512);

  model::ModelConfig c;
  c.vocab_size = vocab.size();
  c.hidden_dim = 128;
  c.layer_count = 2;
  auto m = model::Model::init(c);
  model::TrainSchedule s;
  s.epochs = 200;
  s.batch_size = 8;

  double der = 100.0;
  std::ostringstream trace;
  const auto result = model::train_finetune(m, s, data, [&](const model::EpochStats& st) {
    der = score(m, vocab, corpus).der;
    trace << st.epoch << "\t" << st.mean_loss << "\t" << der << "\n";
    return der >= 1.0;
  });
  io::write_file_atomic(scratch_dir() / "memorization_trace.tsv", trace.str());
  const double secs = seconds_since(t0);
  const auto epochs = static_cast<double>(result.trace.size());
  return {der < 1.0 && secs < 300.0,
          fmt("train DER %.2f%% after %.0f epochs (limit 200), %.1fs (limit 300s)", der, epochs, secs)};
}

// 7. Held-out accuracy on the rule-generated language.
Outcome synthetic_generalization() {
  const auto t0 = Clock::now();
  synth::SyntheticLanguage lang;
  const auto train = lang.corpus(2000, 707);
  const auto test = lang.corpus(200, 708);
  VocabularyBuilder b;
  for (const auto& s : train) b.add_text(s);
  const Vocabulary vocab = b.build(2);
  const auto data = pipeline::encode_training_set(train, vocab, 512);

  model::ModelConfig c;
  c.vocab_size = vocab.size();
  c.hidden_dim = 128;
  c.layer_count = 2;
  auto m = model::Model::init(c);
  model::TrainSchedule s;
  s.epochs = 12;
  s.batch_size = 32;
  model::train_finetune(m, s, data);
  const auto r = score(m, vocab, test);
  return {r.der < 5.0 && r.wer < 15.0,
          fmt("held-out DER %.2f%% (limit 5), WER %.2f%% (limit 15), ", r.der, r.wer) +
              fmt("%.1fs", seconds_since(t0))};
}

// 8. The five ablation variants run end to end.
Outcome ablation_matrix() {
  const auto t0 = Clock::now();
  synth::SyntheticLanguage lang;
  pipeline::AblationData data;
  data.train = lang.corpus(300, 808);
  data.test = lang.corpus(60, 809);
  data.samples = lang.prefinetune_samples(data.train);
  data.vocab = pipeline::build_joint_vocab(data.train, data.samples, 1);

  pipeline::AblationSettings settings;
  settings.model.vocab_size = data.vocab.size();
  settings.model.hidden_dim = 64;
  settings.model.ffn_dim = 128;
  settings.model.layer_count = 2;
  settings.prefinetune.phase = model::Phase::kPrefinetune;
  settings.prefinetune.epochs = 2;
  settings.prefinetune.batch_size = 32;
  settings.finetune.epochs = 6;
  settings.finetune.batch_size = 16;
  settings.strategy = inference::Strategy::sliding(5);

  const auto results = pipeline::run_ablation_matrix(data, settings);
  const auto dir = scratch_dir() / "ablation";
  std::filesystem::create_directories(dir);
  bool ok = results.size() == 5;
  std::string summary;
  for (const auto& r : results) {
    io::write_file_atomic(dir / (r.variant.name + ".json"), metrics::to_json(r.report));
    ok = ok && r.report.sentence_count == data.test.size() && r.report.der >= 0.0 &&
         r.report.der <= 100.0 && r.report.wer >= 0.0 && r.report.wer <= 100.0;
    summary += r.variant.name + fmt(" DER %.2f WER %.2f; ", r.report.der, r.report.wer);
  }
  return {ok, summary + fmt("%.1fs", seconds_since(t0))};
}

// 9. Window plans on a sentence three times the limit, and strategy
// equivalence on short sentences.
Outcome windowing() {
  constexpr int kLimit = 512;
  synth::SyntheticLanguage lang;
  Rng rng(909);
  std::string long_sentence;
  while (encoding::encoded_length(long_sentence) < 3 * kLimit) {
    if (!long_sentence.empty()) long_sentence += ' ';
    long_sentence += lang.sentence_of_length(rng, 1);
  }
  const std::string stripped = arabic::strip_diacritics(long_sentence);
  const auto words = utf8::words(stripped);
  VocabularyBuilder b;
  b.add_text(stripped);
  const Vocabulary vocab = b.build(1);
  model::ModelConfig c;
  c.vocab_size = vocab.size();
  c.hidden_dim = 16;
  c.layer_count = 1;
  c.head_count = 2;
  c.ffn_dim = 32;
  c.max_seq_len = kLimit;
  const auto m = model::Model::init(c);

  const std::size_t budget = kLimit - 2;
  auto cost = [&](std::size_t first, std::size_t last) {
    std::size_t total = 0;
    for (std::size_t i = first; i <= last; ++i) total += encoding::word_cost(words[i]);
    return total;
  };
  std::vector<std::string> problems;
  auto check_plan = [&](const inference::WindowPlan& plan, int p) {
    std::vector<int> covered(words.size(), 0);
    for (std::size_t k = 0; k < plan.windows.size(); ++k) {
      const auto& w = plan.windows[k];
      if (cost(w.first, w.last) > budget) problems.push_back("window over budget");
      if (w.last + 1 < words.size() && cost(w.first, w.last + 1) <= budget) {
        problems.push_back("window not maximal");
      }
      for (std::size_t i = w.first; i <= w.last; ++i) ++covered[i];
      if (k > 0) {
        const auto& prev = plan.windows[k - 1];
        if (p == 0 && w.first != prev.last + 1) problems.push_back("zero windows not contiguous");
        if (p > 0 && w.first - prev.first != static_cast<std::size_t>(p)) {
          problems.push_back("sliding start advance != p");
        }
      }
    }
    for (int n : covered) {
      if (n == 0) problems.push_back("uncovered word");
    }
    if (plan.windows.empty() || plan.windows.back().last + 1 != words.size()) {
      problems.push_back("final window does not end at the last word");
    }
    const std::string out = inference::diacritize(stripped, m, vocab, plan);
    if (arabic::strip_diacritics(out) != stripped || utf8::words(out).size() != words.size()) {
      problems.push_back("diacritized output lost coverage");
    }
  };
  std::string detail = fmt("long sentence: %.0f words, %.0f tokens; windows zero=",
                           static_cast<double>(words.size()),
                           static_cast<double>(encoding::encoded_length(stripped)));
  const auto zero = inference::plan_windows_zero(stripped, kLimit, vocab);
  check_plan(zero, 0);
  detail += std::to_string(zero.windows.size());
  for (int p : {1, 5, 10, 20}) {
    const auto plan = inference::plan_windows_sliding(stripped, kLimit, p, vocab);
    check_plan(plan, p);
    detail += " p" + std::to_string(p) + "=" + std::to_string(plan.windows.size());
  }

  std::size_t short_mismatch = 0;
  for (const auto& s : lang.corpus(25, 910)) {
    const std::string in = arabic::strip_diacritics(s);
    const std::string ref = inference::diacritize(in, m, vocab, inference::Strategy::zero(), kLimit);
    for (int p : {1, 5, 10, 20}) {
      if (inference::diacritize(in, m, vocab, inference::Strategy::sliding(p), kLimit) != ref) {
        ++short_mismatch;
      }
    }
  }
  detail += fmt("; short-sentence mismatches %.0f", static_cast<double>(short_mismatch));
  if (!problems.empty()) detail += "; first problem: " + problems.front();
  return {problems.empty() && short_mismatch == 0, detail};
}

// 10. Bit-identical forward outputs after save and load.
Outcome checkpoint_round_trip() {
  model::ModelConfig c;
  c.vocab_size = 64;
  auto m = model::Model::init(c);
  const auto path = scratch_dir() / "probe.ckpt";
  model::save(m, 0xABCDEF, path);
  const auto loaded = model::load(path);

  Rng rng(1010);
  std::vector<model::Sequence> probe(3);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const auto n = 5 + 4 * i;
    for (std::size_t t = 0; t < n; ++t) {
      probe[i].tokens.push_back(static_cast<std::int32_t>(rng.below(64)));
      probe[i].slots.push_back(static_cast<std::int32_t>(rng.below(4)));
    }
  }
  const auto batch = model::pad_batch(probe);
  bool same = loaded.vocab_digest == 0xABCDEF;
  for (auto head : {model::Head::kClassify, model::Head::kMlm}) {
    const auto a = m.forward(batch, head);
    const auto b = loaded.model.forward(batch, head);
    same = same && a.values.size() == b.values.size() &&
           std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
  }
  return {same, fmt("%.0f parameters compared through both heads", static_cast<double>(m.parameter_count()))};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"diacritic algebra round trip", algebra_round_trip},
      {"encoding laws", encoding_laws},
      {"sample sentence fidelity", figure_fidelity},
      {"metric oracle equivalence", metric_oracle},
      {"gradient check", gradient_check},
      {"memorization", memorization},
      {"synthetic generalization", synthetic_generalization},
      {"ablation machinery", ablation_matrix},
      {"windowing", windowing},
      {"checkpoint round trip", checkpoint_round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed),
              criteria.size());
  return failed == 0 ? 0 : 1;
}
