// ptcad: command-line driver for the diacritization pipeline.
//
// Every subcommand reads a key=value configuration (from --config, or the
// file named by $PTCAD_CONFIG), then applies flag overrides. Flags win.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ptcad/arabic.hpp"
#include "ptcad/corpus.hpp"
#include "ptcad/encoding.hpp"
#include "ptcad/error.hpp"
#include "ptcad/inference.hpp"
#include "ptcad/io.hpp"
#include "ptcad/metrics.hpp"
#include "ptcad/model.hpp"
#include "ptcad/pipeline.hpp"
#include "ptcad/run_config.hpp"
#include "ptcad/taskgen.hpp"
#include "ptcad/utf8.hpp"

namespace fs = std::filesystem;
using namespace ptcad;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownKey:
    case ErrorCode::kInvalidValue:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidStrategy:
    case ErrorCode::kInvalidStep:
    case ErrorCode::kInvalidEdges:
      return kUsage;
    case ErrorCode::kGradientMismatch:
    case ErrorCode::kDivergenceDetected:
    case ErrorCode::kShapeMismatch:
      return kInternal;
    default:
      return kData;
  }
}

// Flag values waiting to be folded into the RunConfig.
struct Overrides {
  struct Bound {
    std::string key;
    std::unique_ptr<std::string> value;
    CLI::Option* option = nullptr;
  };
  std::optional<std::string> config_path;
  std::vector<std::string> assignments;
  std::vector<Bound> bound;

  // Declares --flag bound to configuration key `key`.
  void flag(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
    Bound b{key, std::make_unique<std::string>(), nullptr};
    b.option = app->add_option(name, *b.value, help + " [" + key + "]");
    bound.push_back(std::move(b));
  }

  RunConfig resolve() const {
    RunConfig cfg;
    std::optional<std::string> path = config_path;
    if (!path) {
      if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') path = env;
    }
    if (path) cfg = RunConfig::load(*path);
    cfg.apply_overrides(assignments);
    for (const auto& b : bound) {
      if (b.option->count() > 0) cfg.set(b.key, *b.value);
    }
    return cfg;
  }
};

void log_config(const std::string& command, const RunConfig& cfg) {
  std::cerr << "ptcad " << command << ": resolved configuration\n";
  std::istringstream lines(cfg.resolved());
  for (std::string line; std::getline(lines, line);) std::cerr << "  " << line << "\n";
}

fs::path required_path(const RunConfig& cfg, const std::string& key) {
  const auto& v = cfg.get(key);
  if (v.empty()) throw Error(ErrorCode::kInvalidValue, "missing required setting '" + key + "'");
  return v;
}

// Writes `contents` and the resolved configuration next to it.
void write_artifact(const fs::path& path, std::string_view contents, const RunConfig& cfg) {
  io::write_file_atomic(path, contents);
  io::write_file_atomic(fs::path(path.string() + ".config"), cfg.resolved());
}

std::vector<std::string> read_lines(const fs::path& path) {
  const std::string text = io::read_file(path);
  if (!utf8::is_valid(text)) {
    throw Error(ErrorCode::kInvalidEncoding,
                path.string() + ": invalid UTF-8 at byte " + std::to_string(utf8::first_invalid(text)));
  }
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = eol + 1;
  }
  return lines;
}

struct LoadedModel {
  model::Model model;
  Vocabulary vocab;
};

LoadedModel load_model(const RunConfig& cfg) {
  auto ckpt = model::load(required_path(cfg, "checkpoint"));
  Vocabulary vocab = Vocabulary::load(required_path(cfg, "vocab"));
  if (vocab.digest() != ckpt.vocab_digest) {
    throw Error(ErrorCode::kCorruptCheckpoint, "checkpoint was trained with a different vocabulary");
  }
  return {std::move(ckpt.model), std::move(vocab)};
}

// ---- subcommands ----------------------------------------------------------

int cmd_preprocess(const RunConfig& cfg, const std::string& split) {
  const auto raw = corpus::load_corpus(required_path(cfg, "corpus"));
  const double threshold = cfg.real("threshold");
  const int limit = static_cast<int>(cfg.integer("token_limit"));
  const Vocabulary vocab = Vocabulary::reserved_only();

  std::string kept_text;
  std::string dropped;
  std::vector<SegmentedSentence> segments;
  std::size_t kept = 0;
  std::size_t partial = 0;
  std::size_t too_long = 0;
  for (std::size_t i = 0; i < raw.sentences.size(); ++i) {
    const auto& s = raw.sentences[i];
    if (arabic::diacritization_ratio(s) < threshold) {
      ++partial;
      dropped += std::to_string(i) + "\tpartially_diacritized\t" + s + "\n";
      continue;
    }
    if (split == "train") {
      if (!corpus::fits(s, limit)) {
        ++too_long;
        dropped += std::to_string(i) + "\ttoo_long\t" + s + "\n";
        continue;
      }
      SegmentedSentence one;
      one.original_index = i;
      one.segments.push_back(s);
      segments.push_back(std::move(one));
    } else {
      auto seg = corpus::split_long_sentence(s, limit, vocab);
      seg.original_index = i;
      segments.push_back(std::move(seg));
    }
    ++kept;
  }
  for (const auto& s : segments) {
    for (const auto& piece : s.segments) kept_text += piece + "\n";
  }
  const fs::path out = required_path(cfg, "output");
  write_artifact(out, kept_text, cfg);
  fs::path manifest = cfg.get("manifest");
  if (manifest.empty()) manifest = out.string() + ".manifest";
  io::write_file_atomic(manifest, corpus::format_manifest(segments));
  io::write_file_atomic(manifest.string() + ".dropped", dropped);
  std::printf("kept=%zu dropped_partial=%zu dropped_too_long=%zu segments=%zu\n", kept, partial,
              too_long, std::count_if(kept_text.begin(), kept_text.end(), [](char c) { return c == '\n'; }));
  return kOk;
}

int cmd_gen_prefinetune(const RunConfig& cfg, const std::string& ca, const std::string& pos,
                        const std::string& seg, const std::string& diac) {
  std::vector<std::vector<taskgen::PrefinetuneSample>> streams;
  if (!ca.empty()) {
    auto& s = streams.emplace_back();
    for (const auto& line : corpus::load_corpus(ca).sentences) s.push_back(taskgen::format_ca(line));
  }
  if (!pos.empty()) {
    auto& s = streams.emplace_back();
    for (const auto& words : taskgen::parse_pos_input(io::read_file(pos))) s.push_back(taskgen::format_pos(words));
  }
  if (!seg.empty()) {
    auto& s = streams.emplace_back();
    for (const auto& [raw, out] : taskgen::parse_seg_input(io::read_file(seg))) {
      s.push_back(taskgen::format_segmentation(raw, out));
    }
  }
  if (!diac.empty()) {
    auto& s = streams.emplace_back();
    const auto lines = corpus::load_corpus(diac).sentences;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      try {
        s.push_back(taskgen::format_diacritization(lines[i]));
      } catch (const Error& e) {
        throw Error(e.code(), "diacritization input line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
  }
  if (streams.empty()) throw Error(ErrorCode::kInvalidValue, "no task input given");
  std::string text;
  std::size_t n = 0;
  for (const auto& sample : taskgen::interleave_round_robin(streams)) {
    text += taskgen::format_sample_line(sample) + "\n";
    ++n;
  }
  write_artifact(required_path(cfg, "output"), text, cfg);
  std::printf("samples=%zu tasks=%zu\n", n, streams.size());
  return kOk;
}

int cmd_build_vocab(const RunConfig& cfg) {
  const auto raw = corpus::load_corpus(required_path(cfg, "corpus"));
  std::vector<taskgen::PrefinetuneSample> samples;
  if (!cfg.get("samples").empty()) samples = taskgen::parse_sample_file(io::read_file(cfg.get("samples")));
  const auto vocab = pipeline::build_joint_vocab(raw.sentences, samples,
                                                 static_cast<int>(cfg.integer("min_frequency")));
  write_artifact(required_path(cfg, "output"), vocab.serialize(), cfg);
  std::printf("vocab_size=%d digest=%s\n", vocab.size(), io::hex64(vocab.digest()).c_str());
  return kOk;
}

int cmd_train(const RunConfig& cfg) {
  const Vocabulary vocab = Vocabulary::load(required_path(cfg, "vocab"));
  const model::Phase phase = model::parse_phase(cfg.get("phase"));
  const auto schedule = cfg.schedule(phase);

  std::optional<model::Model> m;
  if (!cfg.get("checkpoint").empty()) {
    auto ckpt = model::load(cfg.get("checkpoint"));
    if (ckpt.vocab_digest != vocab.digest()) {
      throw Error(ErrorCode::kCorruptCheckpoint, "initial checkpoint uses a different vocabulary");
    }
    m.emplace(std::move(ckpt.model));
  } else {
    m.emplace(model::Model::init(cfg.model_config(vocab.size())));
  }

  std::string trace;
  auto on_epoch = [&](const model::EpochStats& st) {
    char line[96];
    std::snprintf(line, sizeof line, "%d\t%.17g\t%zu\n", st.epoch, st.mean_loss, st.steps);
    trace += line;
    std::fprintf(stderr, "epoch %d loss %.6f\n", st.epoch, st.mean_loss);
    return true;
  };

  const int limit = static_cast<int>(cfg.integer("token_limit"));
  if (phase == model::Phase::kPrefinetune) {
    const auto all = taskgen::parse_sample_file(io::read_file(required_path(cfg, "samples")));
    const auto samples = pipeline::select_tasks(all, taskgen::parse_task_list(cfg.get("tasks")));
    if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no samples for the selected tasks");
    model::train_prefinetune(*m, schedule, samples, vocab, on_epoch);
  } else {
    const auto raw = corpus::load_corpus(required_path(cfg, "corpus"));
    const auto train_set = corpus::prepare_train_set(raw, limit, vocab);
    const auto data = pipeline::encode_training_set(train_set.sentences, vocab, limit);
    if (data.empty()) throw Error(ErrorCode::kEmptyCorpus, "no trainable sentences");
    model::train_finetune(*m, schedule, data, on_epoch);
  }
  const fs::path out = required_path(cfg, "output");
  model::save(*m, vocab.digest(), out);
  io::write_file_atomic(out.string() + ".config", cfg.resolved());
  fs::path trace_path = cfg.get("loss_trace");
  if (trace_path.empty()) trace_path = out.string() + ".loss";
  io::write_file_atomic(trace_path, trace);
  std::printf("checkpoint=%s parameters=%zu\n", out.string().c_str(), m->parameter_count());
  return kOk;
}

int cmd_diacritize(const RunConfig& cfg, const std::string& text) {
  const auto strategy = cfg.strategy();
  const auto loaded = load_model(cfg);
  const int limit = static_cast<int>(cfg.integer("token_limit"));
  std::vector<std::string> lines;
  if (!text.empty()) {
    lines.push_back(text);
  } else {
    lines = read_lines(required_path(cfg, "corpus"));
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
  }
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out += inference::diacritize(lines[i], loaded.model, loaded.vocab, strategy, limit) + "\n";
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (cfg.get("output").empty()) {
    std::fwrite(out.data(), 1, out.size(), stdout);
  } else {
    write_artifact(cfg.get("output"), out, cfg);
  }
  return kOk;
}

int cmd_evaluate(const RunConfig& cfg, bool bypass, bool all_options) {
  const auto strategy = cfg.strategy();
  const int limit = static_cast<int>(cfg.integer("token_limit"));
  std::vector<std::string> gold;
  std::optional<std::vector<std::size_t>> segment_map;
  if (!cfg.get("manifest").empty()) {
    segment_map.emplace();
    for (const auto& r : corpus::parse_manifest(io::read_file(cfg.get("manifest")))) {
      gold.push_back(r.text);
      segment_map->push_back(r.original_index);
    }
  } else {
    gold = corpus::load_corpus(required_path(cfg, "test_corpus")).sentences;
  }
  if (gold.empty()) throw Error(ErrorCode::kEmptyCorpus, "no gold sentences");

  std::vector<std::pair<std::string, std::string>> pairs;
  if (bypass) {
    for (const auto& g : gold) pairs.emplace_back(g, g);
  } else {
    const auto loaded = load_model(cfg);
    for (const auto& g : gold) {
      pairs.emplace_back(
          g, inference::diacritize(arabic::strip_diacritics(g), loaded.model, loaded.vocab, strategy, limit));
    }
  }
  const auto edges = cfg.bucket_edges();
  const fs::path out = required_path(cfg, "output");
  std::vector<metrics::MetricOptions> variants = {cfg.metric_options()};
  if (all_options) variants = {{true, true}, {true, false}, {false, true}, {false, false}};
  for (const auto& opts : variants) {
    const auto report = metrics::evaluate_corpus(pairs, opts, segment_map, edges);
    fs::path path = out;
    if (all_options) {
      path = out.string() + (opts.with_case_ending ? ".case" : ".nocase") +
             (opts.include_no_diacritic ? ".withnone" : ".nonone") + ".json";
    }
    write_artifact(path, metrics::to_json(report), cfg);
    io::write_file_atomic(path.string() + ".kv", metrics::to_key_values(report));
    std::printf("%s der=%.4f wer=%.4f sentences=%zu\n", path.string().c_str(), report.der, report.wer,
                report.sentence_count);
  }
  return kOk;
}

int cmd_stats(const RunConfig& cfg, const std::string& report_path) {
  if (report_path.empty()) throw Error(ErrorCode::kInvalidValue, "--report is required");
  const auto report = metrics::from_json(io::read_file(report_path));
  const auto edges = cfg.bucket_edges();
  std::vector<double> ders;
  std::vector<double> wers;
  for (const auto& s : report.per_sentence) {
    ders.push_back(s.der);
    wers.push_back(s.wer);
  }
  std::string table = metrics::format_histogram(metrics::bucket_stats(ders, edges), "DER per sentence") +
                      metrics::format_histogram(metrics::bucket_stats(wers, edges), "WER per sentence");
  if (cfg.get("output").empty()) {
    std::fwrite(table.data(), 1, table.size(), stdout);
  } else {
    write_artifact(cfg.get("output"), table, cfg);
  }
  return kOk;
}

int cmd_gradcheck(const RunConfig& cfg, bool corrupt) {
  model::ModelConfig c;
  c.vocab_size = 32;
  c.hidden_dim = 16;
  c.layer_count = 2;
  c.head_count = 2;
  c.ffn_dim = 32;
  c.max_seq_len = 6;
  c.slot_count = 4;
  c.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  model::GradCheckOptions o;
  o.tolerance = cfg.real("gradcheck.tolerance");
  o.step = cfg.real("gradcheck.step");
  o.corrupt_backward = corrupt;
  const auto r = model::gradient_check_report(c, o);
  std::printf("gradcheck %s: %zu/%zu probes within %g, max relative error %.3g (%s)\n",
              r.ok() ? "pass" : "FAIL", r.passed, r.probed, o.tolerance, r.max_relative_error,
              r.worst_tensor.c_str());
  if (!r.ok()) throw Error(ErrorCode::kGradientMismatch, "analytic and numeric gradients disagree");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arabic diacritization pipeline"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    Overrides ov;
  };
  std::map<std::string, Sub> subs;
  auto add = [&](const std::string& name, const std::string& help) -> Sub& {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, help);
    s.app->add_option("--config", s.ov.config_path,
                      std::string("key=value configuration file (default: $") + kConfigEnvVar + ")");
    s.app->add_option("--set", s.ov.assignments, "override one configuration key (key=value)");
    return s;
  };

  std::string split = "train";
  auto& pre = add("preprocess", "filter and split a diacritized corpus");
  pre.ov.flag(pre.app, "--input", "corpus", "input corpus");
  pre.ov.flag(pre.app, "--output", "output", "cleaned corpus output");
  pre.ov.flag(pre.app, "--manifest", "manifest", "segment manifest output");
  pre.ov.flag(pre.app, "--threshold", "threshold", "minimum diacritized-word ratio");
  pre.ov.flag(pre.app, "--token-limit", "token_limit", "token budget per sequence");
  pre.app->add_option("--split", split, "train (drop long sentences) or test (split them)")
      ->check(CLI::IsMember({"train", "test"}));

  std::string ca, pos, seg, diac;
  auto& gen = add("gen-prefinetune", "build the pre-finetuning sample file");
  gen.ov.flag(gen.app, "--output", "output", "sample file output");
  gen.app->add_option("--ca", ca, "plain sentences for the CA task");
  gen.app->add_option("--pos", pos, "word TAB tag lines for the POS task");
  gen.app->add_option("--seg", seg, "raw TAB segmented lines for the segmentation task");
  gen.app->add_option("--diac", diac, "diacritized sentences for the diacritization task");

  auto& voc = add("build-vocab", "build the whole-word vocabulary");
  voc.ov.flag(voc.app, "--corpus", "corpus", "training corpus");
  voc.ov.flag(voc.app, "--samples", "samples", "pre-finetuning samples to include");
  voc.ov.flag(voc.app, "--min-frequency", "min_frequency", "frequency cut-off");
  voc.ov.flag(voc.app, "--output", "output", "vocabulary output");

  auto& tr = add("train", "pre-finetune or finetune a model");
  tr.ov.flag(tr.app, "--phase", "phase", "prefinetune or finetune");
  tr.ov.flag(tr.app, "--corpus", "corpus", "finetuning corpus");
  tr.ov.flag(tr.app, "--samples", "samples", "pre-finetuning samples");
  tr.ov.flag(tr.app, "--tasks", "tasks", "pre-finetuning task subset, e.g. CA,POS");
  tr.ov.flag(tr.app, "--vocab", "vocab", "vocabulary file");
  tr.ov.flag(tr.app, "--checkpoint", "checkpoint", "checkpoint to continue from");
  tr.ov.flag(tr.app, "--output", "output", "checkpoint output");
  tr.ov.flag(tr.app, "--loss-trace", "loss_trace", "loss trace output");
  tr.ov.flag(tr.app, "--seed", "seed", "random seed");

  std::string text;
  auto& dia = add("diacritize", "diacritize text with a trained model");
  dia.ov.flag(dia.app, "--checkpoint", "checkpoint", "trained checkpoint");
  dia.ov.flag(dia.app, "--vocab", "vocab", "vocabulary file");
  dia.ov.flag(dia.app, "--input", "corpus", "input file, one sentence per line");
  dia.ov.flag(dia.app, "--output", "output", "output file (default stdout)");
  dia.ov.flag(dia.app, "--strategy", "strategy", "zero or sliding:<p>");
  dia.app->add_option("--text", text, "diacritize this sentence instead of a file");

  bool bypass = false;
  bool all_options = false;
  auto& ev = add("evaluate", "score a model against a gold corpus");
  ev.ov.flag(ev.app, "--checkpoint", "checkpoint", "trained checkpoint");
  ev.ov.flag(ev.app, "--vocab", "vocab", "vocabulary file");
  ev.ov.flag(ev.app, "--gold", "test_corpus", "gold corpus");
  ev.ov.flag(ev.app, "--manifest", "manifest", "segment manifest used instead of --gold");
  ev.ov.flag(ev.app, "--output", "output", "report output (JSON; a .kv twin is written too)");
  ev.ov.flag(ev.app, "--strategy", "strategy", "zero or sliding:<p>");
  ev.ov.flag(ev.app, "--with-case-ending", "with_case_ending", "score the last letter of each word");
  ev.ov.flag(ev.app, "--include-no-diacritic", "include_no_diacritic", "score gold-NONE positions");
  ev.ov.flag(ev.app, "--edges", "edges", "bucket edges");
  ev.app->add_flag("--bypass", bypass, "score the gold corpus against itself");
  ev.app->add_flag("--all-options", all_options, "write one report per option combination");

  std::string report_path;
  auto& st = add("stats", "bucket table from an evaluation report");
  st.app->add_option("--report", report_path, "report written by evaluate");
  st.ov.flag(st.app, "--edges", "edges", "bucket edges");
  st.ov.flag(st.app, "--output", "output", "table output (default stdout)");

  bool corrupt = false;
  auto& gc = add("gradcheck", "compare analytic and numeric gradients");
  gc.ov.flag(gc.app, "--tolerance", "gradcheck.tolerance", "relative tolerance");
  gc.ov.flag(gc.app, "--step", "gradcheck.step", "finite-difference step");
  gc.ov.flag(gc.app, "--seed", "seed", "model seed");
  gc.app->add_flag("--corrupt-backward", corrupt, "negative control with a broken backward pass");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  for (auto& [name, sub] : subs) {
    if (!sub.app->parsed()) continue;
    try {
      const RunConfig cfg = sub.ov.resolve();
      log_config(name, cfg);
      if (name == "preprocess") return cmd_preprocess(cfg, split);
      if (name == "gen-prefinetune") return cmd_gen_prefinetune(cfg, ca, pos, seg, diac);
      if (name == "build-vocab") return cmd_build_vocab(cfg);
      if (name == "train") return cmd_train(cfg);
      if (name == "diacritize") return cmd_diacritize(cfg, text);
      if (name == "evaluate") return cmd_evaluate(cfg, bypass, all_options);
      if (name == "stats") return cmd_stats(cfg, report_path);
      if (name == "gradcheck") return cmd_gradcheck(cfg, corrupt);
    } catch (const Error& e) {
      std::cerr << "ptcad " << name << ": " << e.what() << "\n";
      return exit_code_for(e.code());
    } catch (const std::exception& e) {
      std::cerr << "ptcad " << name << ": internal error: " << e.what() << "\n";
      return kInternal;
    }
  }
  return kUsage;
}
