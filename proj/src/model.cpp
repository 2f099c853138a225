#include "ptcad/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "network.hpp"
#include "ptcad/error.hpp"
#include "ptcad/random.hpp"

namespace ptcad::model {

void ModelConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidConfig, why); };
  if (vocab_size <= Vocabulary::kSpecialCount) fail("vocab_size must exceed the special tokens");
  if (hidden_dim <= 0 || layer_count < 0 || head_count <= 0 || ffn_dim <= 0) {
    fail("dimensions must be positive");
  }
  if (hidden_dim % head_count != 0) {
    fail("hidden_dim " + std::to_string(hidden_dim) + " is not divisible by head_count " +
         std::to_string(head_count));
  }
  if (max_seq_len < 2) fail("max_seq_len must be >= 2");
  if (label_count != static_cast<int>(arabic::kDiacriticCount)) fail("label_count must be 15");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must lie in [0,1)");
  if (slot_count < 0) fail("slot_count must be >= 0");
}

Sequence sequence_from(const encoding::EncodedSample& sample) {
  return {sample.tokens, encoding::letter_slots(sample), sample.labels};
}

Sequence sequence_from(const taskgen::MaskedSample& sample) {
  return {sample.input_ids, std::vector<std::int32_t>(sample.input_ids.size(), 0), sample.labels};
}

Batch pad_batch(std::span<const Sequence> sequences, int seq_len) {
  Batch b;
  b.size = static_cast<int>(sequences.size());
  b.seq_len = seq_len;
  for (const auto& s : sequences) b.seq_len = std::max(b.seq_len, static_cast<int>(s.tokens.size()));
  const auto cells = static_cast<std::size_t>(b.size) * static_cast<std::size_t>(b.seq_len);
  b.tokens.assign(cells, Vocabulary::kPad);
  b.slots.assign(cells, 0);
  b.labels.assign(cells, encoding::kIgnore);
  b.attention_mask.assign(cells, 0);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& s = sequences[i];
    const std::size_t base = i * static_cast<std::size_t>(b.seq_len);
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      b.tokens[base + t] = s.tokens[t];
      if (t < s.slots.size()) b.slots[base + t] = s.slots[t];
      if (t < s.labels.size()) b.labels[base + t] = s.labels[t];
      b.attention_mask[base + t] = 1;
    }
  }
  return b;
}

double loss(const Logits& logits, std::span<const std::int32_t> labels) {
  const auto cells = static_cast<std::size_t>(logits.batch) * static_cast<std::size_t>(logits.seq_len);
  if (labels.size() != cells ||
      logits.values.size() != cells * static_cast<std::size_t>(logits.width)) {
    throw Error(ErrorCode::kShapeMismatch, "labels do not match logits shape");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (int b = 0; b < logits.batch; ++b) {
    for (int t = 0; t < logits.seq_len; ++t) {
      const std::int32_t label =
          labels[static_cast<std::size_t>(b) * static_cast<std::size_t>(logits.seq_len) +
                 static_cast<std::size_t>(t)];
      if (label == encoding::kIgnore) continue;
      if (label < 0 || label >= logits.width) {
        throw Error(ErrorCode::kShapeMismatch, "label outside head width");
      }
      double mx = logits.at(b, t, 0);
      for (int c = 1; c < logits.width; ++c) mx = std::max(mx, logits.at(b, t, c));
      double z = 0.0;
      for (int c = 0; c < logits.width; ++c) z += std::exp(logits.at(b, t, c) - mx);
      sum += std::log(z) + mx - logits.at(b, t, label);
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

namespace {

std::unique_ptr<Network> make_network(const ModelConfig& config) {
  config.validate();
  if (config.precision == Precision::kFloat64) return std::make_unique<NetworkImpl<double>>(config);
  return std::make_unique<NetworkImpl<float>>(config);
}

}  // namespace

Model::Model(std::unique_ptr<Network> net) : net_(std::move(net)) {}
Model::Model(const Model& other) : net_(other.net_->clone()) {}
Model& Model::operator=(const Model& other) {
  if (this != &other) net_ = other.net_->clone();
  return *this;
}
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;
Model::~Model() = default;

Model Model::init(const ModelConfig& config) { return Model(make_network(config)); }

const ModelConfig& Model::config() const { return net_->config(); }

Logits Model::forward(const Batch& batch, Head head) const { return net_->forward(batch, head); }

std::vector<arabic::Diacritic> Model::predict(const encoding::EncodedSample& sample) const {
  const Sequence seq = sequence_from(sample);
  const Batch batch = pad_batch(std::span<const Sequence>(&seq, 1));
  const Logits logits = forward(batch, Head::kClassify);
  std::vector<arabic::Diacritic> out;
  out.reserve(sample.mask_count());
  for (const auto& span : sample.spans) {
    for (std::int32_t k = 0; k < span.mask_count; ++k) {
      const int t = span.mask_begin + k;
      int best = 0;
      for (int c = 1; c < logits.width; ++c) {
        if (logits.at(0, t, c) > logits.at(0, t, best)) best = c;
      }
      out.push_back(arabic::diacritic_from_id(best));
    }
  }
  return out;
}

std::vector<NamedTensor> Model::tensors() const { return net_->tensors(); }
void Model::set_tensors(const std::vector<NamedTensor>& tensors) { net_->set_tensors(tensors); }
std::size_t Model::parameter_count() const { return net_->parameter_count(); }
bool Model::all_finite() const { return net_->all_finite(); }

std::string_view phase_name(Phase phase) {
  return phase == Phase::kPrefinetune ? "prefinetune" : "finetune";
}

Phase parse_phase(std::string_view name) {
  if (name == "prefinetune") return Phase::kPrefinetune;
  if (name == "finetune") return Phase::kFinetune;
  throw Error(ErrorCode::kInvalidValue, "unknown phase '" + std::string(name) + "'");
}

void TrainSchedule::validate() const {
  if (epochs < 1) throw Error(ErrorCode::kInvalidConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "learning_rate must be >= 0");
}

namespace {

StepOptions step_options(const TrainSchedule& s, std::uint64_t step) {
  StepOptions o;
  o.learning_rate = s.learning_rate;
  o.weight_decay = s.weight_decay;
  o.clip_norm = s.clip_norm;
  o.dropout_seed = mix_seed(s.seed, 0xD0D0, step);
  return o;
}

void check_finite(double loss, int epoch, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::kDivergenceDetected, "non-finite loss at epoch " +
                                                    std::to_string(epoch) + " step " +
                                                    std::to_string(step));
  }
}

}  // namespace

TrainResult train_finetune(Model& model, const TrainSchedule& schedule,
                           std::span<const encoding::EncodedSample> data,
                           const EpochCallback& on_epoch) {
  schedule.validate();
  if (data.empty()) throw Error(ErrorCode::kEmptyInput, "no finetuning samples");
  std::vector<Sequence> sequences;
  sequences.reserve(data.size());
  for (const auto& s : data) sequences.push_back(sequence_from(s));

  TrainResult result;
  std::vector<std::size_t> order(sequences.size());
  std::uint64_t global_step = 0;
  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (schedule.shuffle) {
      Rng rng(mix_seed(schedule.seed, 0x5EED, static_cast<std::uint64_t>(epoch)));
      rng.shuffle(order.begin(), order.end());
    }
    double loss_sum = 0.0;
    std::size_t steps = 0;
    std::vector<Sequence> batch;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(schedule.batch_size)) {
      batch.clear();
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(schedule.batch_size));
      for (std::size_t i = start; i < end; ++i) batch.push_back(sequences[order[i]]);
      const double l =
          model.network().train_step(batch, Head::kClassify, step_options(schedule, global_step));
      check_finite(l, epoch, steps);
      loss_sum += l;
      ++steps;
      ++global_step;
    }
    if (!model.all_finite()) {
      throw Error(ErrorCode::kDivergenceDetected,
                  "non-finite parameters after epoch " + std::to_string(epoch));
    }
    EpochStats stats{epoch, loss_sum / static_cast<double>(steps), steps};
    result.trace.push_back(stats);
    if (on_epoch && !on_epoch(stats)) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

TrainResult train_prefinetune(Model& model, const TrainSchedule& schedule,
                              std::span<const taskgen::PrefinetuneSample> samples,
                              const Vocabulary& vocab, const EpochCallback& on_epoch) {
  schedule.validate();
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no pre-finetuning samples");
  if (vocab.size() != model.config().vocab_size) {
    throw Error(ErrorCode::kInvalidConfig, "vocabulary size does not match the model");
  }
  // Token ids per task, in task order CA, POS, SEG, DIAC.
  std::vector<std::vector<std::vector<std::int32_t>>> by_task(std::size(taskgen::kAllTasks));
  for (const auto& s : samples) {
    by_task[static_cast<std::size_t>(s.task)].push_back(
        taskgen::encode_sample(s, vocab, model.config().max_seq_len));
  }

  TrainResult result;
  std::uint64_t global_step = 0;
  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    // Per task: a list of batches (indices into by_task[task]).
    std::vector<std::vector<std::vector<std::size_t>>> batches(by_task.size());
    for (std::size_t task = 0; task < by_task.size(); ++task) {
      std::vector<std::size_t> order(by_task[task].size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      if (schedule.shuffle) {
        Rng rng(mix_seed(schedule.seed, static_cast<std::uint64_t>(epoch), task + 1));
        rng.shuffle(order.begin(), order.end());
      }
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(schedule.batch_size)) {
        const std::size_t end =
            std::min(order.size(), start + static_cast<std::size_t>(schedule.batch_size));
        batches[task].emplace_back(order.begin() + static_cast<long>(start),
                                   order.begin() + static_cast<long>(end));
      }
    }
    // Flatten into the visiting order.
    std::vector<std::pair<std::size_t, std::size_t>> plan;  // (task, batch)
    if (schedule.curriculum) {
      for (std::size_t task = 0; task < batches.size(); ++task) {
        for (std::size_t k = 0; k < batches[task].size(); ++k) plan.emplace_back(task, k);
      }
    } else {
      std::size_t longest = 0;
      for (const auto& b : batches) longest = std::max(longest, b.size());
      for (std::size_t k = 0; k < longest; ++k) {
        for (std::size_t task = 0; task < batches.size(); ++task) {
          if (k < batches[task].size()) plan.emplace_back(task, k);
        }
      }
    }

    double loss_sum = 0.0;
    std::size_t steps = 0;
    std::vector<Sequence> batch;
    for (const auto& [task, k] : plan) {
      batch.clear();
      for (std::size_t idx : batches[task][k]) {
        const std::uint64_t seed = mix_seed(schedule.seed ^ 0x4D4C4DULL,
                                            static_cast<std::uint64_t>(epoch),
                                            (static_cast<std::uint64_t>(task) << 40) | idx);
        const auto& ids = by_task[task][idx];
        bool maskable = false;
        for (auto id : ids) maskable = maskable || !vocab.is_special(id);
        if (!maskable) continue;
        batch.push_back(sequence_from(taskgen::mlm_mask_ids(ids, schedule.masking, seed, vocab)));
      }
      if (batch.empty()) continue;
      const double l =
          model.network().train_step(batch, Head::kMlm, step_options(schedule, global_step));
      check_finite(l, epoch, steps);
      loss_sum += l;
      ++steps;
      ++global_step;
    }
    if (!model.all_finite()) {
      throw Error(ErrorCode::kDivergenceDetected,
                  "non-finite parameters after epoch " + std::to_string(epoch));
    }
    EpochStats stats{epoch, steps == 0 ? 0.0 : loss_sum / static_cast<double>(steps), steps};
    result.trace.push_back(stats);
    if (on_epoch && !on_epoch(stats)) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

GradientSet compute_gradients(const Model& model, std::span<const Sequence> sequences, Head head) {
  return model.network().gradients(sequences, head, false);
}

GradCheckReport gradient_check_report(const ModelConfig& config, const GradCheckOptions& options) {
  ModelConfig c = config;
  c.precision = Precision::kFloat64;
  c.dropout_rate = 0.0;
  c.validate();
  NetworkImpl<double> net(c);

  // Two rows of different length so padding-free batching is exercised.
  Rng rng(options.seed);
  std::vector<Sequence> cls_batch;
  std::vector<Sequence> mlm_batch;
  const int lengths[] = {std::min(6, c.max_seq_len), std::min(4, c.max_seq_len)};
  for (int n : lengths) {
    Sequence s;
    for (int t = 0; t < n; ++t) {
      s.tokens.push_back(static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(c.vocab_size))));
      s.slots.push_back(c.slot_count > 0 ? static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(c.slot_count + 1))) : 0);
    }
    Sequence cls = s;
    Sequence mlm = s;
    for (int t = 0; t < n; ++t) {
      cls.labels.push_back(t % 3 == 2 ? encoding::kIgnore
                                      : static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(c.label_count))));
      mlm.labels.push_back(t % 2 == 0 ? static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(c.vocab_size)))
                                      : encoding::kIgnore);
    }
    cls_batch.push_back(std::move(cls));
    mlm_batch.push_back(std::move(mlm));
  }

  const GradientSet gc = net.gradients(cls_batch, Head::kClassify, options.corrupt_backward);
  const GradientSet gm = net.gradients(mlm_batch, Head::kMlm, options.corrupt_backward);
  auto total_loss = [&] {
    return net.batch_loss(cls_batch, Head::kClassify) + net.batch_loss(mlm_batch, Head::kMlm);
  };

  GradCheckReport report;
  for (std::size_t ti = 0; ti < gc.gradients.size(); ++ti) {
    const std::size_t size = gc.gradients[ti].values.size();
    const int probes = static_cast<int>(std::min<std::size_t>(size, static_cast<std::size_t>(options.probes_per_tensor)));
    for (int p = 0; p < probes; ++p) {
      const std::size_t idx = static_cast<std::size_t>(rng.below(size));
      const double analytic = gc.gradients[ti].values[idx] + gm.gradients[ti].values[idx];
      net.perturb(ti, idx, options.step);
      const double up = total_loss();
      net.perturb(ti, idx, -2.0 * options.step);
      const double down = total_loss();
      net.perturb(ti, idx, options.step);
      const double numeric = (up - down) / (2.0 * options.step);
      const double rel = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
      ++report.probed;
      if (rel < options.tolerance) ++report.passed;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_tensor = gc.gradients[ti].name;
      }
    }
  }
  return report;
}

GradCheckReport gradient_check(const ModelConfig& config, const GradCheckOptions& options) {
  GradCheckReport r = gradient_check_report(config, options);
  if (!r.ok()) {
    std::ostringstream msg;
    msg << r.passed << "/" << r.probed << " probes within tolerance; worst "
        << r.max_relative_error << " in " << r.worst_tensor;
    throw Error(ErrorCode::kGradientMismatch, msg.str());
  }
  return r;
}

std::string format_config(const ModelConfig& c) {
  std::ostringstream out;
  out << "vocab_size=" << c.vocab_size << "\n"
      << "hidden_dim=" << c.hidden_dim << "\n"
      << "layer_count=" << c.layer_count << "\n"
      << "head_count=" << c.head_count << "\n"
      << "ffn_dim=" << c.ffn_dim << "\n"
      << "max_seq_len=" << c.max_seq_len << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", c.dropout_rate);
  out << "dropout_rate=" << buf << "\n"
      << "label_count=" << c.label_count << "\n"
      << "seed=" << c.seed << "\n"
      << "slot_count=" << c.slot_count << "\n"
      << "precision=" << (c.precision == Precision::kFloat64 ? "f64" : "f32") << "\n";
  return out.str();
}

ModelConfig parse_config(std::string_view text) {
  ModelConfig c;
  std::size_t pos = 0;
  auto to_int = [](std::string_view key, std::string_view v) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw Error(ErrorCode::kInvalidValue, "bad integer for " + std::string(key));
    }
    return x;
  };
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::kInvalidValue, "config line without '='");
    const std::string_view key = line.substr(0, eq);
    const std::string_view value = line.substr(eq + 1);
    if (key == "vocab_size") c.vocab_size = static_cast<int>(to_int(key, value));
    else if (key == "hidden_dim") c.hidden_dim = static_cast<int>(to_int(key, value));
    else if (key == "layer_count") c.layer_count = static_cast<int>(to_int(key, value));
    else if (key == "head_count") c.head_count = static_cast<int>(to_int(key, value));
    else if (key == "ffn_dim") c.ffn_dim = static_cast<int>(to_int(key, value));
    else if (key == "max_seq_len") c.max_seq_len = static_cast<int>(to_int(key, value));
    else if (key == "dropout_rate") c.dropout_rate = std::strtod(std::string(value).c_str(), nullptr);
    else if (key == "label_count") c.label_count = static_cast<int>(to_int(key, value));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "slot_count") c.slot_count = static_cast<int>(to_int(key, value));
    else if (key == "precision") {
      if (value == "f64") c.precision = Precision::kFloat64;
      else if (value == "f32") c.precision = Precision::kFloat32;
      else throw Error(ErrorCode::kInvalidValue, "bad precision");
    }
    // Other keys (vocab digest, tensor count) belong to the checkpoint layer.
  }
  return c;
}

}  // namespace ptcad::model
