#include "ptcad/pipeline.hpp"

#include <algorithm>

#include "ptcad/arabic.hpp"
#include "ptcad/encoding.hpp"
#include "ptcad/error.hpp"

namespace ptcad::pipeline {

using taskgen::Task;

const std::vector<Variant>& ablation_variants() {
  static const std::vector<Variant> variants = {
      {"TCO", {}},
      {"CA", {Task::kCa}},
      {"CA-POS", {Task::kCa, Task::kPos}},
      {"CA-POS-Seg", {Task::kCa, Task::kPos, Task::kSeg}},
      {"FULL", {Task::kCa, Task::kPos, Task::kSeg, Task::kDiac}},
  };
  return variants;
}

const Variant& find_variant(std::string_view name) {
  for (const auto& v : ablation_variants()) {
    if (v.name == name) return v;
  }
  throw Error(ErrorCode::kInvalidValue, "unknown variant '" + std::string(name) + "'");
}

std::vector<taskgen::PrefinetuneSample> select_tasks(
    const std::vector<taskgen::PrefinetuneSample>& samples, const std::vector<Task>& tasks) {
  std::vector<taskgen::PrefinetuneSample> out;
  for (const auto& s : samples) {
    if (std::find(tasks.begin(), tasks.end(), s.task) != tasks.end()) out.push_back(s);
  }
  return out;
}

Vocabulary build_joint_vocab(const std::vector<std::string>& sentences,
                             const std::vector<taskgen::PrefinetuneSample>& samples,
                             int min_frequency) {
  VocabularyBuilder b;
  for (const auto& s : sentences) b.add_text(s);
  for (const auto& s : samples) {
    for (const auto& t : taskgen::tokenize_sample(s.text)) b.add_token(t);
  }
  return b.build(min_frequency);
}

std::vector<encoding::EncodedSample> encode_training_set(const std::vector<std::string>& sentences,
                                                         const Vocabulary& vocab, int token_limit) {
  std::vector<encoding::EncodedSample> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    try {
      out.push_back(encoding::encode_for_training(s, vocab, token_limit));
    } catch (const Error&) {
      // Unalignable or oversized sentences carry no usable labels.
    }
  }
  return out;
}

VariantResult run_variant(const Variant& variant, const AblationData& data,
                          const AblationSettings& settings) {
  VariantResult result;
  result.variant = variant;
  model::Model m = model::Model::init(settings.model);
  if (!variant.tasks.empty()) {
    const auto samples = select_tasks(data.samples, variant.tasks);
    if (samples.empty()) {
      throw Error(ErrorCode::kEmptyInput, "variant " + variant.name + " has no samples");
    }
    result.prefinetune = model::train_prefinetune(m, settings.prefinetune, samples, data.vocab);
  }
  const auto train = encode_training_set(data.train, data.vocab, settings.token_limit);
  result.finetune = model::train_finetune(m, settings.finetune, train);
  const auto reports = inference::compare_strategies(data.test, m, data.vocab, {settings.strategy},
                                                     settings.token_limit, settings.options);
  result.report = reports.front().report;
  return result;
}

std::vector<VariantResult> run_ablation_matrix(const AblationData& data,
                                               const AblationSettings& settings) {
  std::vector<VariantResult> out;
  for (const auto& v : ablation_variants()) out.push_back(run_variant(v, data, settings));
  return out;
}

}  // namespace ptcad::pipeline
