#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "ptcad/encoding.hpp"
#include "ptcad/error.hpp"
#include "ptcad/model.hpp"
#include "ptcad/vocabulary.hpp"

namespace ptcad::model {
namespace {

ModelConfig tiny(Precision p = Precision::kFloat64) {
  ModelConfig c;
  c.vocab_size = 40;
  c.hidden_dim = 16;
  c.layer_count = 2;
  c.head_count = 2;
  c.ffn_dim = 32;
  c.max_seq_len = 24;
  c.slot_count = 8;
  c.dropout_rate = 0.0;
  c.precision = p;
  return c;
}

Sequence row(std::initializer_list<std::int32_t> tokens, std::uint64_t seed) {
  Sequence s;
  s.tokens = tokens;
  Rng rng(seed);
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    s.slots.push_back(static_cast<std::int32_t>(rng.below(4)));
    s.labels.push_back(i % 2 ? static_cast<std::int32_t>(rng.below(15)) : encoding::kIgnore);
  }
  return s;
}

TEST(Init, DeterministicFromSeed) {
  const auto a = Model::init(tiny()).tensors();
  const auto b = Model::init(tiny()).tensors();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values) << a[i].name;
  auto other = tiny();
  other.seed = 43;
  EXPECT_NE(Model::init(other).tensors()[0].values, a[0].values);
}

TEST(Init, HeadDivisibility) {
  auto c = tiny();
  c.hidden_dim = 64;
  c.head_count = 4;
  EXPECT_EQ(c.head_dim(), 16);
  EXPECT_NO_THROW(c.validate());
  c.hidden_dim = 50;
  try {
    Model::init(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
  }
}

TEST(Init, BiasesZeroGainsOne) {
  for (const auto& t : Model::init(tiny()).tensors()) {
    if (t.name.find(".gain") != std::string::npos) {
      for (double v : t.values) EXPECT_EQ(v, 1.0) << t.name;
    } else if (t.name.find(".bias") != std::string::npos) {
      for (double v : t.values) EXPECT_EQ(v, 0.0) << t.name;
    }
  }
}

TEST(Forward, ShapeLaw) {
  const auto m = Model::init(tiny());
  const std::vector<Sequence> one = {row({2, 7, 4, 4, 9, 4, 4, 3}, 1)};
  const auto batch = pad_batch(one);
  const auto cls = m.forward(batch, Head::kClassify);
  EXPECT_EQ(cls.batch, 1);
  EXPECT_EQ(cls.seq_len, 8);
  EXPECT_EQ(cls.width, 15);
  EXPECT_EQ(cls.values.size(), 8u * 15u);
  const auto mlm = m.forward(batch, Head::kMlm);
  EXPECT_EQ(mlm.width, 40);
  for (double v : mlm.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Forward, SequenceTooLong) {
  const auto m = Model::init(tiny());
  Sequence s;
  s.tokens.assign(25, 6);
  try {
    m.forward(pad_batch(std::vector<Sequence>{s}), Head::kClassify);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSequenceTooLong);
  }
}

TEST(Forward, BatchPermutationPermutesOutputs) {
  const auto m = Model::init(tiny());
  const std::vector<Sequence> ab = {row({2, 7, 4, 4, 3}, 1), row({2, 9, 4, 11, 4, 4, 3}, 2)};
  const std::vector<Sequence> ba = {ab[1], ab[0]};
  const auto x = m.forward(pad_batch(ab), Head::kClassify);
  const auto y = m.forward(pad_batch(ba), Head::kClassify);
  for (int t = 0; t < 5; ++t)
    for (int c = 0; c < 15; ++c) EXPECT_EQ(x.at(0, t, c), y.at(1, t, c));
  for (int t = 0; t < 7; ++t)
    for (int c = 0; c < 15; ++c) EXPECT_EQ(x.at(1, t, c), y.at(0, t, c));
}

// The unpadded single-row forward is the oracle for the padded one.
TEST(Forward, PaddingSuffixChangesNothing) {
  for (auto p : {Precision::kFloat64, Precision::kFloat32}) {
    const auto m = Model::init(tiny(p));
    const std::vector<Sequence> one = {row({2, 7, 4, 4, 9, 4, 3}, 3)};
    const auto plain = m.forward(pad_batch(one), Head::kClassify);
    const auto padded = m.forward(pad_batch(one, 20), Head::kClassify);
    const double tol = p == Precision::kFloat64 ? 1e-12 : 1e-5;
    for (int t = 0; t < 7; ++t)
      for (int c = 0; c < 15; ++c) EXPECT_NEAR(plain.at(0, t, c), padded.at(0, t, c), tol);
    for (int t = 7; t < 20; ++t)
      for (int c = 0; c < 15; ++c) EXPECT_EQ(padded.at(0, t, c), 0.0);
  }
}

TEST(Loss, AllIgnoredIsZero) {
  Logits l{1, 3, 15, std::vector<double>(45, 0.3)};
  const std::vector<std::int32_t> labels(3, encoding::kIgnore);
  EXPECT_EQ(loss(l, labels), 0.0);
}

TEST(Loss, UniformLogitsGiveLogFifteen) {
  Logits l{1, 1, 15, std::vector<double>(15, 0.0)};
  const std::vector<std::int32_t> labels = {4};
  EXPECT_NEAR(loss(l, labels), std::log(15.0), 1e-12);
  EXPECT_NEAR(loss(l, labels), 2.708, 1e-3);
}

TEST(Loss, HandBuiltTwoPositionCase) {
  Logits l{1, 3, 4, {1.0, 2.0, 0.5, -1.0, 9.0, 9.0, 9.0, 9.0, -3.0, 0.0, 4.0, 2.5}};
  const std::vector<std::int32_t> labels = {1, encoding::kIgnore, 2};
  const double expected = (oracle::cross_entropy({1.0, 2.0, 0.5, -1.0}, 1) +
                           oracle::cross_entropy({-3.0, 0.0, 4.0, 2.5}, 2)) /
                          2.0;
  EXPECT_NEAR(loss(l, labels), expected, 1e-12);
  // Perturbing an ignored position leaves the loss unchanged.
  l.at(0, 1, 2) = -50.0;
  EXPECT_EQ(loss(l, labels), loss(Logits{1, 3, 4, l.values}, labels));
  EXPECT_NEAR(loss(l, labels), expected, 1e-12);
  try {
    loss(l, std::vector<std::int32_t>{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

std::vector<encoding::EncodedSample> tiny_data() {
  VocabularyBuilder b;
  b.add_text("كتب قرأ درس");
  const auto v = b.build(1);
  return {encoding::encode_for_training("كَتَبَ قَرَأَ", v), encoding::encode_for_training("دَرْسٌ", v)};
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  auto m = Model::init(tiny());
  const auto before = m.tensors();
  TrainSchedule s;
  s.learning_rate = 0.0;
  s.batch_size = 8;
  const auto data = tiny_data();
  const auto r = train_finetune(m, s, data);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].steps, 1u);
  const auto after = m.tensors();
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].values, after[i].values);
}

TEST(Train, DeterministicTraceAndLossDecreases) {
  auto run = [] {
    auto m = Model::init(tiny());
    TrainSchedule s;
    s.epochs = 30;
    s.batch_size = 2;
    s.learning_rate = 3e-3;
    const auto data = tiny_data();
    return train_finetune(m, s, data).trace;
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), 30u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].mean_loss, b[i].mean_loss);
  double first = 0;
  double last = 0;
  for (int i = 0; i < 10; ++i) {
    first += a[static_cast<std::size_t>(i)].mean_loss;
    last += a[static_cast<std::size_t>(20 + i)].mean_loss;
  }
  EXPECT_LT(last, first);
}

TEST(Train, CallbackStopsEarly) {
  auto m = Model::init(tiny());
  TrainSchedule s;
  s.epochs = 10;
  const auto data = tiny_data();
  const auto r = train_finetune(m, s, data, [](const EpochStats& e) { return e.epoch < 3; });
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.trace.size(), 3u);
}

TEST(Train, PrefinetuneRunsAndStaysFinite) {
  VocabularyBuilder b;
  b.add_text("كتب قرأ درس");
  const auto v = b.build(1);
  auto c = tiny();
  c.vocab_size = v.size();
  auto m = Model::init(c);
  const std::vector<taskgen::PrefinetuneSample> samples = {
      taskgen::format_ca("كتب قرأ درس كتب"), taskgen::format_diacritization("كَتَبَ قَرَأَ")};
  TrainSchedule s;
  s.phase = Phase::kPrefinetune;
  s.epochs = 3;
  s.masking.mask_rate = 0.5;
  const auto r = train_prefinetune(m, s, samples, v);
  EXPECT_EQ(r.trace.size(), 3u);
  EXPECT_TRUE(m.all_finite());
}

TEST(Predict, CountAndDeterminism) {
  const auto m = Model::init(tiny());
  const auto data = tiny_data();
  const auto p = m.predict(data[0]);
  EXPECT_EQ(p.size(), data[0].mask_count());
  EXPECT_EQ(m.predict(data[0]), p);
}

TEST(Predict, TiesGoToLowestClass) {
  auto m = Model::init(tiny());
  auto tensors = m.tensors();
  for (auto& t : tensors) {
    if (t.name == "classifier.weight") std::fill(t.values.begin(), t.values.end(), 0.0);
    if (t.name == "classifier.bias") {
      std::fill(t.values.begin(), t.values.end(), 0.0);
      t.values[3] = 2.0;
      t.values[5] = 2.0;
    }
  }
  m.set_tensors(tensors);
  for (auto d : m.predict(tiny_data()[0])) EXPECT_EQ(d, arabic::Diacritic::kKasra);
}

TEST(GradientCheck, PassesInDoublePrecision) {
  auto c = tiny();
  c.max_seq_len = 6;
  c.slot_count = 4;
  GradCheckOptions o;
  const auto r = gradient_check(c, o);
  EXPECT_TRUE(r.ok());
  EXPECT_GT(r.probed, 100u);
}

TEST(GradientCheck, CorruptedBackwardFails) {
  auto c = tiny();
  c.max_seq_len = 6;
  c.slot_count = 4;
  GradCheckOptions o;
  o.corrupt_backward = true;
  EXPECT_FALSE(gradient_check_report(c, o).ok());
  try {
    gradient_check(c, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGradientMismatch);
  }
}

TEST(GradientCheck, ToleranceIsHonored) {
  auto c = tiny();
  c.max_seq_len = 6;
  GradCheckOptions o;
  o.tolerance = 0.0;
  EXPECT_FALSE(gradient_check_report(c, o).ok());
}

TEST(Gradients, UnusedEmbeddingRowsAreZero) {
  const auto m = Model::init(tiny());
  const std::vector<Sequence> rows = {row({2, 7, 4, 4, 3}, 5)};
  const auto g = compute_gradients(m, rows, Head::kClassify);
  for (const auto& t : g.gradients) {
    if (t.name != "embeddings.token") continue;
    const std::size_t h = t.dims[1];
    for (std::size_t id = 0; id < t.dims[0]; ++id) {
      const bool used = id == 2 || id == 7 || id == 4 || id == 3;
      double norm = 0;
      for (std::size_t k = 0; k < h; ++k) norm += std::abs(t.values[id * h + k]);
      if (used) {
        EXPECT_GT(norm, 0.0) << id;
      } else {
        EXPECT_EQ(norm, 0.0) << id;
      }
    }
  }
}

TEST(ConfigText, RoundTrip) {
  auto c = tiny(Precision::kFloat32);
  c.seed = 99;
  const auto back = parse_config(format_config(c));
  EXPECT_EQ(format_config(back), format_config(c));
  EXPECT_EQ(back.precision, Precision::kFloat32);
  EXPECT_THROW(parse_config("hidden_dim=abc\n"), Error);
}

}  // namespace
}  // namespace ptcad::model
