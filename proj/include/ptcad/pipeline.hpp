#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ptcad/inference.hpp"
#include "ptcad/metrics.hpp"
#include "ptcad/model.hpp"
#include "ptcad/taskgen.hpp"
#include "ptcad/vocabulary.hpp"

namespace ptcad::pipeline {

/// A pre-finetuning task subset. An empty subset means token
/// classification only.
struct Variant {
  std::string name;
  std::vector<taskgen::Task> tasks;
};

/// TCO, CA, CA-POS, CA-POS-Seg, FULL.
const std::vector<Variant>& ablation_variants();
/// Throws InvalidValue for unknown names.
const Variant& find_variant(std::string_view name);

std::vector<taskgen::PrefinetuneSample> select_tasks(
    const std::vector<taskgen::PrefinetuneSample>& samples, const std::vector<taskgen::Task>& tasks);

/// Vocabulary over corpus sentences plus the tokens of pre-finetuning samples.
Vocabulary build_joint_vocab(const std::vector<std::string>& sentences,
                             const std::vector<taskgen::PrefinetuneSample>& samples,
                             int min_frequency);

/// Training-set encodings; sentences that fail to encode are skipped.
std::vector<encoding::EncodedSample> encode_training_set(const std::vector<std::string>& sentences,
                                                         const Vocabulary& vocab, int token_limit);

struct AblationData {
  std::vector<taskgen::PrefinetuneSample> samples;
  std::vector<std::string> train;
  std::vector<std::string> test;
  Vocabulary vocab;
};

struct AblationSettings {
  model::ModelConfig model;
  model::TrainSchedule prefinetune;
  model::TrainSchedule finetune;
  inference::Strategy strategy;
  int token_limit = 512;
  metrics::MetricOptions options;
};

struct VariantResult {
  Variant variant;
  model::TrainResult prefinetune;
  model::TrainResult finetune;
  metrics::EvalReport report;
};

/// Pre-finetunes on the variant's tasks (skipped when none), finetunes on
/// the training sentences and evaluates on the test sentences.
VariantResult run_variant(const Variant& variant, const AblationData& data,
                          const AblationSettings& settings);

std::vector<VariantResult> run_ablation_matrix(const AblationData& data,
                                               const AblationSettings& settings);

}  // namespace ptcad::pipeline
