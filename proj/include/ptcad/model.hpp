#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ptcad/arabic.hpp"
#include "ptcad/encoding.hpp"
#include "ptcad/taskgen.hpp"

namespace ptcad::model {

enum class Precision { kFloat32, kFloat64 };

struct ModelConfig {
  int vocab_size = 0;
  int hidden_dim = 128;
  int layer_count = 2;
  int head_count = 4;
  int ffn_dim = 256;
  int max_seq_len = 512;
  double dropout_rate = 0.1;
  int label_count = static_cast<int>(arabic::kDiacriticCount);
  std::uint64_t seed = 42;
  // Embedding table indexed by a token's position inside its word span
  // (see encoding::letter_slots). 0 disables it.
  int slot_count = 32;
  Precision precision = Precision::kFloat32;

  /// Throws InvalidConfig.
  void validate() const;
  int head_dim() const { return hidden_dim / head_count; }
};

enum class Head { kMlm, kClassify };

/// One unpadded input row. `slots` may be empty (all zero); `labels` may be
/// empty when only inference is needed.
struct Sequence {
  std::vector<std::int32_t> tokens;
  std::vector<std::int32_t> slots;
  std::vector<std::int32_t> labels;
};

Sequence sequence_from(const encoding::EncodedSample& sample);
Sequence sequence_from(const taskgen::MaskedSample& sample);

/// Row-major (batch, seq_len) arrays; padding is a suffix with mask 0.
struct Batch {
  int size = 0;
  int seq_len = 0;
  std::vector<std::int32_t> tokens;
  std::vector<std::int32_t> slots;
  std::vector<std::int32_t> labels;
  std::vector<std::uint8_t> attention_mask;
};

/// Pads to the longest sequence (or `seq_len` when larger).
Batch pad_batch(std::span<const Sequence> sequences, int seq_len = 0);

/// (batch, seq_len, width) row-major; padded positions are zero.
struct Logits {
  int batch = 0;
  int seq_len = 0;
  int width = 0;
  std::vector<double> values;

  double at(int b, int t, int c) const {
    return values[(static_cast<std::size_t>(b) * static_cast<std::size_t>(seq_len) +
                   static_cast<std::size_t>(t)) *
                      static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(c)];
  }
  double& at(int b, int t, int c) {
    return values[(static_cast<std::size_t>(b) * static_cast<std::size_t>(seq_len) +
                   static_cast<std::size_t>(t)) *
                      static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(c)];
  }
};

/// Mean cross-entropy over positions whose label is not kIgnore; 0 if none.
/// `labels` is (batch, seq_len) row-major. Throws ShapeMismatch.
double loss(const Logits& logits, std::span<const std::int32_t> labels);

/// A named parameter tensor in flat row-major form.
struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
};

class Network;  // precision-specific implementation

/// Encoder parameters plus both heads. Copyable value type.
class Model {
 public:
  /// Deterministic initialization from config.seed. Throws InvalidConfig.
  static Model init(const ModelConfig& config);

  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  ~Model();

  const ModelConfig& config() const;

  /// Throws SequenceTooLong.
  Logits forward(const Batch& batch, Head head) const;

  /// Argmax class at each MASK position in span order; ties go to the
  /// lowest class id.
  std::vector<arabic::Diacritic> predict(const encoding::EncodedSample& sample) const;

  std::vector<NamedTensor> tensors() const;
  /// Replaces values tensor by tensor; names and shapes must match.
  void set_tensors(const std::vector<NamedTensor>& tensors);
  std::size_t parameter_count() const;
  bool all_finite() const;

  Network& network() { return *net_; }
  const Network& network() const { return *net_; }

 private:
  explicit Model(std::unique_ptr<Network> net);
  std::unique_ptr<Network> net_;
};

enum class Phase { kPrefinetune, kFinetune };
std::string_view phase_name(Phase phase);
Phase parse_phase(std::string_view name);

struct TrainSchedule {
  Phase phase = Phase::kFinetune;
  int epochs = 1;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  std::uint64_t seed = 42;
  bool shuffle = true;
  // Pre-finetuning only: run tasks one after another instead of rotating
  // one batch per task.
  bool curriculum = false;
  taskgen::MaskingConfig masking;

  void validate() const;
};

/// Pre-finetuning epochs and the per-benchmark finetuning epochs.
inline constexpr int kPrefinetuneEpochs = 20;
inline constexpr int kFinetuneEpochsAbbad = 10;
inline constexpr int kFinetuneEpochsFadel = 40;

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  std::size_t steps = 0;
};

/// Returns false to stop training early.
using EpochCallback = std::function<bool(const EpochStats&)>;

struct TrainResult {
  std::vector<EpochStats> trace;
  bool stopped_early = false;
};

/// Token-classification training on MASK positions. Throws
/// DivergenceDetected, EmptyInput, SequenceTooLong.
TrainResult train_finetune(Model& model, const TrainSchedule& schedule,
                           std::span<const encoding::EncodedSample> data,
                           const EpochCallback& on_epoch = {});

/// MLM training over the instruction streams; samples are re-masked each
/// epoch. Batches rotate across tasks (or follow task order in curriculum mode).
TrainResult train_prefinetune(Model& model, const TrainSchedule& schedule,
                              std::span<const taskgen::PrefinetuneSample> samples,
                              const Vocabulary& vocab, const EpochCallback& on_epoch = {});

/// Loss of one batch and the gradient of every tensor, in double precision.
struct GradientSet {
  double loss = 0.0;
  std::vector<NamedTensor> gradients;
};
GradientSet compute_gradients(const Model& model, std::span<const Sequence> sequences, Head head);

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  int probes_per_tensor = 6;
  std::uint64_t seed = 7;
  // Negative control: drops the attention-branch residual gradient.
  bool corrupt_backward = false;
};

struct GradCheckReport {
  std::size_t probed = 0;
  std::size_t passed = 0;
  double max_relative_error = 0.0;
  std::string worst_tensor;
  double pass_fraction() const {
    return probed == 0 ? 0.0 : static_cast<double>(passed) / static_cast<double>(probed);
  }
  bool ok() const { return probed > 0 && pass_fraction() >= 0.99; }
};

/// Central differences against analytic gradients of the combined MLM and
/// classification loss, in double precision on a tiny random batch.
GradCheckReport gradient_check_report(const ModelConfig& config, const GradCheckOptions& options);
/// Throws GradientMismatch when fewer than 99% of probes pass.
GradCheckReport gradient_check(const ModelConfig& config, const GradCheckOptions& options);

/// Checkpoint file handling.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  Model model;
  std::uint64_t vocab_digest = 0;
};

/// Throws IoFailure.
void save(const Model& model, std::uint64_t vocab_digest, const std::filesystem::path& path);
std::string serialize_checkpoint(const Model& model, std::uint64_t vocab_digest);
/// Throws IoFailure, CorruptCheckpoint, VersionMismatch.
Checkpoint load(const std::filesystem::path& path);
Checkpoint parse_checkpoint(std::string_view bytes);

std::string format_config(const ModelConfig& config);
/// key=value lines as written by format_config. Throws InvalidValue.
ModelConfig parse_config(std::string_view text);

}  // namespace ptcad::model
