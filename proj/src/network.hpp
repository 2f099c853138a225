// Transformer encoder with hand-written backward pass. Private to the library.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ptcad/error.hpp"
#include "ptcad/model.hpp"
#include "ptcad/random.hpp"

namespace ptcad::model {

struct StepOptions {
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  std::uint64_t dropout_seed = 0;
  bool train = true;
};

class Network {
 public:
  virtual ~Network() = default;
  virtual std::unique_ptr<Network> clone() const = 0;
  virtual const ModelConfig& config() const = 0;
  virtual Logits forward(const Batch& batch, Head head) const = 0;
  virtual std::vector<NamedTensor> tensors() const = 0;
  virtual void set_tensors(const std::vector<NamedTensor>& tensors) = 0;
  virtual std::size_t parameter_count() const = 0;
  virtual bool all_finite() const = 0;
  /// Gradients averaged over the labeled positions of the batch.
  virtual GradientSet gradients(std::span<const Sequence> sequences, Head head,
                                bool corrupt_backward) const = 0;
  /// Loss only, in the same reduction as gradients(); dropout off.
  virtual double batch_loss(std::span<const Sequence> sequences, Head head) const = 0;
  /// One optimizer step; returns the batch loss before the update.
  virtual double train_step(std::span<const Sequence> sequences, Head head,
                            const StepOptions& options) = 0;
  /// Adds `delta` to one parameter entry (gradient checking).
  virtual void perturb(std::size_t tensor, std::size_t index, double delta) = 0;
};

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Col = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
class NetworkImpl final : public Network {
 public:
  explicit NetworkImpl(const ModelConfig& config) : config_(config) {
    build_layout();
    initialize();
  }

  std::unique_ptr<Network> clone() const override {
    return std::make_unique<NetworkImpl<T>>(*this);
  }

  const ModelConfig& config() const override { return config_; }

  std::size_t parameter_count() const override {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
    return n;
  }

  bool all_finite() const override {
    for (const auto& p : params_) {
      if (!p.allFinite()) return false;
    }
    return true;
  }

  std::vector<NamedTensor> tensors() const override {
    std::vector<NamedTensor> out;
    out.reserve(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) out.push_back(to_named(names_[i], params_[i]));
    return out;
  }

  void set_tensors(const std::vector<NamedTensor>& tensors) override {
    if (tensors.size() != params_.size()) {
      throw Error(ErrorCode::kShapeMismatch, "expected " + std::to_string(params_.size()) +
                                                 " tensors, got " +
                                                 std::to_string(tensors.size()));
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& t = tensors[i];
      auto& p = params_[i];
      if (t.name != names_[i] || t.dims.size() != 2 ||
          t.dims[0] != static_cast<std::uint64_t>(p.rows()) ||
          t.dims[1] != static_cast<std::uint64_t>(p.cols()) ||
          t.values.size() != static_cast<std::size_t>(p.size())) {
        throw Error(ErrorCode::kShapeMismatch, "tensor '" + t.name + "' does not match '" +
                                                   names_[i] + "'");
      }
      for (Eigen::Index k = 0; k < p.size(); ++k) {
        p.data()[k] = static_cast<T>(t.values[static_cast<std::size_t>(k)]);
      }
    }
  }

  void perturb(std::size_t tensor, std::size_t index, double delta) override {
    params_[tensor].data()[index] += static_cast<T>(delta);
  }

  Logits forward(const Batch& batch, Head head) const override {
    check_batch(batch);
    Logits out;
    out.batch = batch.size;
    out.seq_len = batch.seq_len;
    out.width = head == Head::kClassify ? config_.label_count : config_.vocab_size;
    out.values.assign(static_cast<std::size_t>(out.batch) * static_cast<std::size_t>(out.seq_len) *
                          static_cast<std::size_t>(out.width),
                      0.0);
    for (int b = 0; b < batch.size; ++b) {
      const Sequence seq = row_of(batch, b);
      const int n = static_cast<int>(seq.tokens.size());
      if (n == 0) continue;
      Cache cache;
      Rng unused(0);
      encode(seq, cache, false, unused);
      const Mat<T> logits = head_logits(cache.hf, head);
      for (int t = 0; t < n; ++t) {
        for (int c = 0; c < out.width; ++c) out.at(b, t, c) = static_cast<double>(logits(t, c));
      }
    }
    return out;
  }

  GradientSet gradients(std::span<const Sequence> sequences, Head head,
                        bool corrupt_backward) const override {
    std::vector<Mat<T>> grads = zero_like();
    Rng unused(0);
    const double loss = accumulate(sequences, head, grads, false, unused, corrupt_backward);
    GradientSet out;
    out.loss = loss;
    for (std::size_t i = 0; i < grads.size(); ++i) out.gradients.push_back(to_named(names_[i], grads[i]));
    return out;
  }

  double batch_loss(std::span<const Sequence> sequences, Head head) const override {
    const std::size_t total = labeled_count(sequences);
    if (total == 0) return 0.0;
    double sum = 0.0;
    for (const auto& seq : sequences) {
      if (seq.tokens.empty()) continue;
      Cache cache;
      Rng unused(0);
      encode(seq, cache, false, unused);
      const auto rows = labeled_rows(seq);
      if (rows.empty()) continue;
      const Mat<T> logits = head_logits_rows(cache.hf, rows, head);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        sum += cross_entropy_row(logits, static_cast<Eigen::Index>(r),
                                 seq.labels[static_cast<std::size_t>(rows[r])], nullptr);
      }
    }
    return sum / static_cast<double>(total);
  }

  double train_step(std::span<const Sequence> sequences, Head head,
                    const StepOptions& options) override {
    if (grads_.empty()) grads_ = zero_like();
    for (auto& g : grads_) g.setZero();
    Rng rng(options.dropout_seed);
    const double loss = accumulate(sequences, head, grads_, options.train, rng, false);
    if (!std::isfinite(loss)) return loss;
    apply_adamw(options);
    return loss;
  }

 private:
  // Per-layer tensor offsets within params_.
  enum LayerSlot : std::size_t {
    kLn1G, kLn1B, kWq, kBq, kWk, kBk, kWv, kBv, kWo, kBo,
    kLn2G, kLn2B, kW1, kB1, kW2, kB2, kLayerTensors
  };

  struct LayerCache {
    Mat<T> xhat1, h1, q, k, v, ctx, drop1, xhat2, h2, u, g, drop2;
    Col<T> rstd1, rstd2;
    std::vector<Mat<T>> probs;
  };

  struct Cache {
    std::vector<std::int32_t> tokens;
    std::vector<std::int32_t> slots;
    std::vector<LayerCache> layers;
    Mat<T> xhatf, hf;
    Col<T> rstdf;
  };

  static constexpr T kLnEps = static_cast<T>(1e-5);

  void build_layout() {
    auto add = [&](std::string name, Eigen::Index rows, Eigen::Index cols) {
      names_.push_back(std::move(name));
      params_.push_back(Mat<T>::Zero(rows, cols));
      return params_.size() - 1;
    };
    const int h = config_.hidden_dim;
    tok_emb_ = add("embeddings.token", config_.vocab_size, h);
    pos_emb_ = add("embeddings.position", config_.max_seq_len, h);
    slot_emb_ = config_.slot_count > 0 ? add("embeddings.slot", config_.slot_count + 1, h)
                                       : static_cast<std::size_t>(-1);
    for (int l = 0; l < config_.layer_count; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      layer_base_.push_back(params_.size());
      add(p + "ln1.gain", 1, h);
      add(p + "ln1.bias", 1, h);
      add(p + "attn.query.weight", h, h);
      add(p + "attn.query.bias", 1, h);
      add(p + "attn.key.weight", h, h);
      add(p + "attn.key.bias", 1, h);
      add(p + "attn.value.weight", h, h);
      add(p + "attn.value.bias", 1, h);
      add(p + "attn.output.weight", h, h);
      add(p + "attn.output.bias", 1, h);
      add(p + "ln2.gain", 1, h);
      add(p + "ln2.bias", 1, h);
      add(p + "ffn.in.weight", h, config_.ffn_dim);
      add(p + "ffn.in.bias", 1, config_.ffn_dim);
      add(p + "ffn.out.weight", config_.ffn_dim, h);
      add(p + "ffn.out.bias", 1, h);
    }
    final_g_ = add("final_ln.gain", 1, h);
    final_b_ = add("final_ln.bias", 1, h);
    mlm_w_ = add("mlm_head.weight", h, config_.vocab_size);
    mlm_b_ = add("mlm_head.bias", 1, config_.vocab_size);
    cls_w_ = add("classifier.weight", h, config_.label_count);
    cls_b_ = add("classifier.bias", 1, config_.label_count);
    decay_.assign(params_.size(), false);
    for (std::size_t i = 0; i < names_.size(); ++i) {
      const auto& n = names_[i];
      decay_[i] = n.find(".weight") != std::string::npos || n.rfind("embeddings.", 0) == 0;
    }
  }

  void initialize() {
    Rng rng(config_.seed);
    const double std_dev = 0.02;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      const auto& n = names_[i];
      if (n.find(".gain") != std::string::npos) {
        p.setOnes();
      } else if (n.find(".bias") != std::string::npos) {
        p.setZero();
      } else {
        for (Eigen::Index k = 0; k < p.size(); ++k) {
          p.data()[k] = static_cast<T>(std_dev * rng.normal());
        }
      }
    }
  }

  std::vector<Mat<T>> zero_like() const {
    std::vector<Mat<T>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(Mat<T>::Zero(p.rows(), p.cols()));
    return out;
  }

  static NamedTensor to_named(const std::string& name, const Mat<T>& m) {
    NamedTensor t;
    t.name = name;
    t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    t.values.resize(static_cast<std::size_t>(m.size()));
    for (Eigen::Index k = 0; k < m.size(); ++k) t.values[static_cast<std::size_t>(k)] = m.data()[k];
    return t;
  }

  const Mat<T>& P(std::size_t i) const { return params_[i]; }
  const Mat<T>& L(int layer, LayerSlot s) const {
    return params_[layer_base_[static_cast<std::size_t>(layer)] + s];
  }
  Mat<T>& G(std::vector<Mat<T>>& grads, int layer, LayerSlot s) const {
    return grads[layer_base_[static_cast<std::size_t>(layer)] + s];
  }

  void check_batch(const Batch& batch) const {
    const auto cells = static_cast<std::size_t>(batch.size) * static_cast<std::size_t>(batch.seq_len);
    if (batch.tokens.size() != cells || batch.attention_mask.size() != cells ||
        (!batch.slots.empty() && batch.slots.size() != cells)) {
      throw Error(ErrorCode::kShapeMismatch, "batch arrays do not match (batch, seq_len)");
    }
  }

  Sequence row_of(const Batch& batch, int b) const {
    Sequence seq;
    const auto base = static_cast<std::size_t>(b) * static_cast<std::size_t>(batch.seq_len);
    bool padding = false;
    for (int t = 0; t < batch.seq_len; ++t) {
      const std::size_t i = base + static_cast<std::size_t>(t);
      if (batch.attention_mask[i] == 0) {
        padding = true;
        continue;
      }
      if (padding) {
        throw Error(ErrorCode::kShapeMismatch, "padding must be a suffix of each row");
      }
      seq.tokens.push_back(batch.tokens[i]);
      seq.slots.push_back(batch.slots.empty() ? 0 : batch.slots[i]);
    }
    return seq;
  }

  void check_sequence(const Sequence& seq) const {
    if (static_cast<int>(seq.tokens.size()) > config_.max_seq_len) {
      throw Error(ErrorCode::kSequenceTooLong,
                  "sequence of " + std::to_string(seq.tokens.size()) + " tokens exceeds " +
                      std::to_string(config_.max_seq_len));
    }
    for (auto id : seq.tokens) {
      if (id < 0 || id >= config_.vocab_size) {
        throw Error(ErrorCode::kShapeMismatch, "token id " + std::to_string(id) +
                                                   " outside vocabulary");
      }
    }
  }

  int slot_of(const Sequence& seq, std::size_t t) const {
    if (seq.slots.empty()) return 0;
    return std::min(seq.slots[t], config_.slot_count);
  }

  // Layer norm over rows: y = g * xhat + b.
  static void layer_norm(const Mat<T>& x, const Mat<T>& g, const Mat<T>& b, Mat<T>& xhat,
                         Col<T>& rstd, Mat<T>& y) {
    const Eigen::Index n = x.rows();
    const Eigen::Index h = x.cols();
    xhat.resize(n, h);
    rstd.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const T mean = x.row(r).mean();
      const T var = (x.row(r).array() - mean).square().mean();
      rstd(r) = T(1) / std::sqrt(var + kLnEps);
      xhat.row(r) = (x.row(r).array() - mean) * rstd(r);
    }
    y = (xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
  }

  static Mat<T> layer_norm_backward(const Mat<T>& dy, const Mat<T>& xhat, const Col<T>& rstd,
                                    const Mat<T>& g, Mat<T>& dg, Mat<T>& db) {
    dg.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
    db.row(0) += dy.colwise().sum();
    const Mat<T> dxhat = dy.array().rowwise() * g.row(0).array();
    Mat<T> dx(dy.rows(), dy.cols());
    const T inv_h = T(1) / static_cast<T>(dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
      const T mean_d = dxhat.row(r).sum() * inv_h;
      const T mean_dx = (dxhat.row(r).array() * xhat.row(r).array()).sum() * inv_h;
      dx.row(r) = rstd(r) * (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx);
    }
    return dx;
  }

  static T gelu(T x) {
    return T(0.5) * x * (T(1) + std::erf(x * static_cast<T>(M_SQRT1_2)));
  }
  static T gelu_grad(T x) {
    const T cdf = T(0.5) * (T(1) + std::erf(x * static_cast<T>(M_SQRT1_2)));
    const T pdf = std::exp(T(-0.5) * x * x) * static_cast<T>(0.3989422804014327);
    return cdf + x * pdf;
  }

  Mat<T> dropout_mask(Eigen::Index rows, Eigen::Index cols, bool train, Rng& rng) const {
    if (!train || config_.dropout_rate <= 0.0) return Mat<T>();
    const T keep_scale = static_cast<T>(1.0 / (1.0 - config_.dropout_rate));
    Mat<T> m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      m.data()[k] = rng.uniform() < config_.dropout_rate ? T(0) : keep_scale;
    }
    return m;
  }

  // Runs the encoder; cache.hf holds final hidden states.
  void encode(const Sequence& seq, Cache& cache, bool train, Rng& rng) const {
    check_sequence(seq);
    const auto n = static_cast<Eigen::Index>(seq.tokens.size());
    const int h = config_.hidden_dim;
    const int heads = config_.head_count;
    const int d = config_.head_dim();
    const T scale = T(1) / std::sqrt(static_cast<T>(d));
    cache.tokens = seq.tokens;
    cache.slots.resize(seq.tokens.size());
    Mat<T> x(n, h);
    for (Eigen::Index t = 0; t < n; ++t) {
      x.row(t) = P(tok_emb_).row(seq.tokens[static_cast<std::size_t>(t)]) + P(pos_emb_).row(t);
      cache.slots[static_cast<std::size_t>(t)] = slot_of(seq, static_cast<std::size_t>(t));
      if (config_.slot_count > 0) x.row(t) += P(slot_emb_).row(cache.slots[static_cast<std::size_t>(t)]);
    }
    cache.layers.resize(static_cast<std::size_t>(config_.layer_count));
    for (int l = 0; l < config_.layer_count; ++l) {
      LayerCache& c = cache.layers[static_cast<std::size_t>(l)];
      layer_norm(x, L(l, kLn1G), L(l, kLn1B), c.xhat1, c.rstd1, c.h1);
      c.q = (c.h1 * L(l, kWq)).rowwise() + L(l, kBq).row(0);
      c.k = (c.h1 * L(l, kWk)).rowwise() + L(l, kBk).row(0);
      c.v = (c.h1 * L(l, kWv)).rowwise() + L(l, kBv).row(0);
      c.ctx.resize(n, h);
      c.probs.resize(static_cast<std::size_t>(heads));
      for (int hd = 0; hd < heads; ++hd) {
        Mat<T> s = (c.q.middleCols(hd * d, d) * c.k.middleCols(hd * d, d).transpose()) * scale;
        for (Eigen::Index r = 0; r < n; ++r) {
          const T mx = s.row(r).maxCoeff();
          s.row(r) = (s.row(r).array() - mx).exp();
          s.row(r) /= s.row(r).sum();
        }
        c.ctx.middleCols(hd * d, d) = s * c.v.middleCols(hd * d, d);
        c.probs[static_cast<std::size_t>(hd)] = std::move(s);
      }
      Mat<T> o = (c.ctx * L(l, kWo)).rowwise() + L(l, kBo).row(0);
      c.drop1 = dropout_mask(n, h, train, rng);
      if (c.drop1.size() > 0) o.array() *= c.drop1.array();
      x += o;
      layer_norm(x, L(l, kLn2G), L(l, kLn2B), c.xhat2, c.rstd2, c.h2);
      c.u = (c.h2 * L(l, kW1)).rowwise() + L(l, kB1).row(0);
      c.g = c.u.unaryExpr([](T v) { return gelu(v); });
      Mat<T> f = (c.g * L(l, kW2)).rowwise() + L(l, kB2).row(0);
      c.drop2 = dropout_mask(n, h, train, rng);
      if (c.drop2.size() > 0) f.array() *= c.drop2.array();
      x += f;
    }
    layer_norm(x, P(final_g_), P(final_b_), cache.xhatf, cache.rstdf, cache.hf);
  }

  std::size_t head_weight(Head head) const { return head == Head::kClassify ? cls_w_ : mlm_w_; }
  std::size_t head_bias(Head head) const { return head == Head::kClassify ? cls_b_ : mlm_b_; }

  Mat<T> head_logits(const Mat<T>& hf, Head head) const {
    return (hf * P(head_weight(head))).rowwise() + P(head_bias(head)).row(0);
  }

  Mat<T> gather_rows(const Mat<T>& m, const std::vector<int>& rows) const {
    Mat<T> out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
    return out;
  }

  Mat<T> head_logits_rows(const Mat<T>& hf, const std::vector<int>& rows, Head head) const {
    return head_logits(gather_rows(hf, rows), head);
  }

  static std::vector<int> labeled_rows(const Sequence& seq) {
    std::vector<int> rows;
    for (std::size_t t = 0; t < seq.labels.size() && t < seq.tokens.size(); ++t) {
      if (seq.labels[t] != encoding::kIgnore) rows.push_back(static_cast<int>(t));
    }
    return rows;
  }

  static std::size_t labeled_count(std::span<const Sequence> sequences) {
    std::size_t n = 0;
    for (const auto& s : sequences) n += labeled_rows(s).size();
    return n;
  }

  // Cross-entropy of one logits row (in double); optionally writes softmax - onehot.
  double cross_entropy_row(const Mat<T>& logits, Eigen::Index r, std::int32_t label,
                           Mat<T>* dlogits) const {
    if (label < 0 || label >= logits.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "label " + std::to_string(label) +
                                                 " outside head width");
    }
    const T mx = logits.row(r).maxCoeff();
    const auto e = (logits.row(r).array() - mx).exp();
    const T sum = e.sum();
    const double ce = static_cast<double>(std::log(sum) + mx - logits(r, label));
    if (dlogits != nullptr) {
      dlogits->row(r) = e / sum;
      (*dlogits)(r, label) -= T(1);
    }
    return ce;
  }

  // Forward + backward for every sequence; gradients are of the mean loss.
  double accumulate(std::span<const Sequence> sequences, Head head, std::vector<Mat<T>>& grads,
                    bool train, Rng& rng, bool corrupt_backward) const {
    const std::size_t total = labeled_count(sequences);
    if (total == 0) return 0.0;
    const T inv_total = T(1) / static_cast<T>(total);
    double sum = 0.0;
    for (const auto& seq : sequences) {
      if (seq.tokens.empty()) continue;
      const auto rows = labeled_rows(seq);
      if (rows.empty()) continue;
      Cache cache;
      encode(seq, cache, train, rng);
      const Mat<T> hrows = gather_rows(cache.hf, rows);
      const Mat<T> logits = head_logits(hrows, head);
      Mat<T> dlogits(logits.rows(), logits.cols());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        sum += cross_entropy_row(logits, static_cast<Eigen::Index>(r),
                                 seq.labels[static_cast<std::size_t>(rows[r])], &dlogits);
      }
      dlogits *= inv_total;
      grads[head_weight(head)].noalias() += hrows.transpose() * dlogits;
      grads[head_bias(head)].row(0) += dlogits.colwise().sum();
      const Mat<T> dhrows = dlogits * P(head_weight(head)).transpose();
      Mat<T> dhf = Mat<T>::Zero(cache.hf.rows(), cache.hf.cols());
      for (std::size_t r = 0; r < rows.size(); ++r) dhf.row(rows[r]) = dhrows.row(static_cast<Eigen::Index>(r));
      backward(cache, dhf, grads, corrupt_backward);
    }
    return sum / static_cast<double>(total);
  }

  void backward(const Cache& cache, const Mat<T>& dhf, std::vector<Mat<T>>& grads,
                bool corrupt_backward) const {
    const int heads = config_.head_count;
    const int d = config_.head_dim();
    const T scale = T(1) / std::sqrt(static_cast<T>(d));
    Mat<T> dx = layer_norm_backward(dhf, cache.xhatf, cache.rstdf, P(final_g_), grads[final_g_],
                                    grads[final_b_]);
    for (int l = config_.layer_count - 1; l >= 0; --l) {
      const LayerCache& c = cache.layers[static_cast<std::size_t>(l)];
      // Feed-forward branch.
      Mat<T> df = dx;
      if (c.drop2.size() > 0) df.array() *= c.drop2.array();
      G(grads, l, kW2).noalias() += c.g.transpose() * df;
      G(grads, l, kB2).row(0) += df.colwise().sum();
      Mat<T> du = df * L(l, kW2).transpose();
      du.array() *= c.u.unaryExpr([](T v) { return gelu_grad(v); }).array();
      G(grads, l, kW1).noalias() += c.h2.transpose() * du;
      G(grads, l, kB1).row(0) += du.colwise().sum();
      const Mat<T> dh2 = du * L(l, kW1).transpose();
      dx += layer_norm_backward(dh2, c.xhat2, c.rstd2, L(l, kLn2G), G(grads, l, kLn2G),
                                G(grads, l, kLn2B));
      // Attention branch.
      Mat<T> dout = dx;
      if (c.drop1.size() > 0) dout.array() *= c.drop1.array();
      G(grads, l, kWo).noalias() += c.ctx.transpose() * dout;
      G(grads, l, kBo).row(0) += dout.colwise().sum();
      const Mat<T> dctx = dout * L(l, kWo).transpose();
      Mat<T> dq(c.q.rows(), c.q.cols());
      Mat<T> dk(c.k.rows(), c.k.cols());
      Mat<T> dv(c.v.rows(), c.v.cols());
      for (int hd = 0; hd < heads; ++hd) {
        const Mat<T>& p = c.probs[static_cast<std::size_t>(hd)];
        const auto dctx_h = dctx.middleCols(hd * d, d);
        dv.middleCols(hd * d, d) = p.transpose() * dctx_h;
        Mat<T> dp = dctx_h * c.v.middleCols(hd * d, d).transpose();
        const Col<T> row_dot = (dp.array() * p.array()).rowwise().sum();
        Mat<T> ds = p.array() * (dp.colwise() - row_dot).array();
        ds *= scale;
        dq.middleCols(hd * d, d) = ds * c.k.middleCols(hd * d, d);
        dk.middleCols(hd * d, d) = ds.transpose() * c.q.middleCols(hd * d, d);
      }
      G(grads, l, kWq).noalias() += c.h1.transpose() * dq;
      G(grads, l, kBq).row(0) += dq.colwise().sum();
      G(grads, l, kWk).noalias() += c.h1.transpose() * dk;
      G(grads, l, kBk).row(0) += dk.colwise().sum();
      G(grads, l, kWv).noalias() += c.h1.transpose() * dv;
      G(grads, l, kBv).row(0) += dv.colwise().sum();
      const Mat<T> dh1 = dq * L(l, kWq).transpose() + dk * L(l, kWk).transpose() +
                         dv * L(l, kWv).transpose();
      const Mat<T> dln1 = layer_norm_backward(dh1, c.xhat1, c.rstd1, L(l, kLn1G),
                                              G(grads, l, kLn1G), G(grads, l, kLn1B));
      if (corrupt_backward) {
        dx = dln1;  // drops the residual path
      } else {
        dx += dln1;
      }
    }
    for (std::size_t t = 0; t < cache.tokens.size(); ++t) {
      const auto r = static_cast<Eigen::Index>(t);
      grads[tok_emb_].row(cache.tokens[t]) += dx.row(r);
      grads[pos_emb_].row(r) += dx.row(r);
      if (config_.slot_count > 0) grads[slot_emb_].row(cache.slots[t]) += dx.row(r);
    }
  }

  void apply_adamw(const StepOptions& options) {
    if (adam_m_.empty()) {
      adam_m_ = zero_like();
      adam_v_ = zero_like();
    }
    double sq = 0.0;
    for (const auto& g : grads_) sq += static_cast<double>(g.squaredNorm());
    const double norm = std::sqrt(sq);
    const double clip =
        options.clip_norm > 0.0 && norm > options.clip_norm ? options.clip_norm / norm : 1.0;
    ++step_;
    const double b1 = 0.9;
    const double b2 = 0.999;
    const double eps = 1e-8;
    const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(b1, static_cast<double>(step_))));
    const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(b2, static_cast<double>(step_))));
    const T lr = static_cast<T>(options.learning_rate);
    const T wd = static_cast<T>(options.weight_decay);
    const T tb1 = static_cast<T>(b1);
    const T tb2 = static_cast<T>(b2);
    const T teps = static_cast<T>(eps);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto g = grads_[i].array() * static_cast<T>(clip);
      adam_m_[i].array() = tb1 * adam_m_[i].array() + (T(1) - tb1) * g;
      adam_v_[i].array() = tb2 * adam_v_[i].array() + (T(1) - tb2) * g.square();
      auto update = (adam_m_[i].array() * c1) / ((adam_v_[i].array() * c2).sqrt() + teps);
      if (decay_[i]) {
        params_[i].array() -= lr * (update + wd * params_[i].array());
      } else {
        params_[i].array() -= lr * update;
      }
    }
  }

  ModelConfig config_;
  std::vector<std::string> names_;
  std::vector<Mat<T>> params_;
  std::vector<bool> decay_;
  std::vector<std::size_t> layer_base_;
  std::size_t tok_emb_ = 0, pos_emb_ = 0, slot_emb_ = 0;
  std::size_t final_g_ = 0, final_b_ = 0, mlm_w_ = 0, mlm_b_ = 0, cls_w_ = 0, cls_b_ = 0;

  // Optimizer state.
  std::vector<Mat<T>> grads_, adam_m_, adam_v_;
  std::uint64_t step_ = 0;
};

}  // namespace ptcad::model
