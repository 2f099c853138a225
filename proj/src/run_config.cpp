#include "ptcad/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "ptcad/error.hpp"
#include "ptcad/io.hpp"

namespace ptcad {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const std::string copy(s);
  char* end = nullptr;
  out = std::strtod(copy.c_str(), &end);
  return end == copy.c_str() + copy.size() && std::isfinite(out);
}

bool parse_bool(std::string_view s, bool& out) {
  if (s == "true" || s == "1" || s == "yes") return out = true, true;
  if (s == "false" || s == "0" || s == "no") return out = false, true;
  return false;
}

const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      // Files.
      {"corpus", KeyType::kString, "", "diacritized corpus, one sentence per line"},
      {"test_corpus", KeyType::kString, "", "gold corpus for evaluation"},
      {"vocab", KeyType::kString, "", "vocabulary file"},
      {"samples", KeyType::kString, "", "pre-finetuning sample file"},
      {"checkpoint", KeyType::kString, "", "checkpoint to read"},
      {"output", KeyType::kString, "", "primary output path"},
      {"manifest", KeyType::kString, "", "segment manifest path"},
      {"loss_trace", KeyType::kString, "", "per-epoch loss trace output"},
      // Preprocessing and vocabulary.
      {"threshold", KeyType::kDouble, "0.9", "minimum diacritized-word ratio"},
      {"token_limit", KeyType::kInt, "512", "token budget per sequence including CLS and SEP"},
      {"min_frequency", KeyType::kInt, "2", "vocabulary frequency cut-off"},
      // Model.
      {"hidden_dim", KeyType::kInt, "128", ""},
      {"layer_count", KeyType::kInt, "2", ""},
      {"head_count", KeyType::kInt, "4", ""},
      {"ffn_dim", KeyType::kInt, "256", ""},
      {"max_seq_len", KeyType::kInt, "512", ""},
      {"dropout_rate", KeyType::kDouble, "0.1", ""},
      {"slot_count", KeyType::kInt, "32", ""},
      {"precision", KeyType::kString, "f32", "f32 or f64"},
      {"seed", KeyType::kInt, "42", ""},
      // Training.
      {"phase", KeyType::kString, "finetune", "prefinetune or finetune"},
      {"tasks", KeyType::kString, "CA,POS,SEG,DIAC", "pre-finetuning tasks to train on"},
      {"curriculum", KeyType::kBool, "false", "run pre-finetuning tasks sequentially"},
      {"mask_rate", KeyType::kDouble, "0.15", ""},
      {"prefinetune.epochs", KeyType::kInt, "20", ""},
      {"prefinetune.batch_size", KeyType::kInt, "64", ""},
      {"prefinetune.learning_rate", KeyType::kDouble, "0.001", ""},
      {"prefinetune.weight_decay", KeyType::kDouble, "0.01", ""},
      {"finetune.epochs", KeyType::kInt, "10", ""},
      {"finetune.batch_size", KeyType::kInt, "64", ""},
      {"finetune.learning_rate", KeyType::kDouble, "0.001", ""},
      {"finetune.weight_decay", KeyType::kDouble, "0.01", ""},
      {"clip_norm", KeyType::kDouble, "1.0", ""},
      // Inference and evaluation.
      {"strategy", KeyType::kString, "sliding:5", "zero or sliding:<p>"},
      {"with_case_ending", KeyType::kBool, "true", ""},
      {"include_no_diacritic", KeyType::kBool, "true", ""},
      {"edges", KeyType::kString, "0,30,100", "bucket edges for stats"},
      // Gradient check.
      {"gradcheck.tolerance", KeyType::kDouble, "0.0001", ""},
      {"gradcheck.step", KeyType::kDouble, "0.00001", ""},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_.emplace(std::string(k.name), std::string(k.default_value));
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const ConfigKey* k = find_key(key);
  if (k == nullptr) throw Error(ErrorCode::kUnknownKey, "unknown configuration key '" + std::string(key) + "'");
  bool ok = true;
  switch (k->type) {
    case KeyType::kString: break;
    case KeyType::kInt: {
      std::int64_t v = 0;
      ok = parse_int(value, v);
      break;
    }
    case KeyType::kDouble: {
      double v = 0;
      ok = parse_double(value, v);
      break;
    }
    case KeyType::kBool: {
      bool v = false;
      ok = parse_bool(value, v);
      break;
    }
  }
  if (!ok) {
    throw Error(ErrorCode::kInvalidValue,
                "bad value '" + std::string(value) + "' for key '" + std::string(key) + "'");
  }
  values_[std::string(key)] = std::string(value);
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidValue, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.code(), "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

void RunConfig::apply_overrides(const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const std::size_t eq = a.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kInvalidValue, "override '" + a + "' is not key=value");
    set(trim(std::string_view(a).substr(0, eq)), trim(std::string_view(a).substr(eq + 1)));
  }
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::kUnknownKey, "unknown configuration key '" + std::string(key) + "'");
  return it->second;
}

std::int64_t RunConfig::integer(std::string_view key) const {
  std::int64_t v = 0;
  if (!parse_int(get(key), v)) throw Error(ErrorCode::kInvalidValue, std::string(key) + " is not an integer");
  return v;
}

double RunConfig::real(std::string_view key) const {
  double v = 0;
  if (!parse_double(get(key), v)) throw Error(ErrorCode::kInvalidValue, std::string(key) + " is not a number");
  return v;
}

bool RunConfig::flag(std::string_view key) const {
  bool v = false;
  if (!parse_bool(get(key), v)) throw Error(ErrorCode::kInvalidValue, std::string(key) + " is not a boolean");
  return v;
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

model::ModelConfig RunConfig::model_config(int vocab_size) const {
  model::ModelConfig c;
  c.vocab_size = vocab_size;
  c.hidden_dim = static_cast<int>(integer("hidden_dim"));
  c.layer_count = static_cast<int>(integer("layer_count"));
  c.head_count = static_cast<int>(integer("head_count"));
  c.ffn_dim = static_cast<int>(integer("ffn_dim"));
  c.max_seq_len = static_cast<int>(integer("max_seq_len"));
  c.dropout_rate = real("dropout_rate");
  c.slot_count = static_cast<int>(integer("slot_count"));
  c.seed = static_cast<std::uint64_t>(integer("seed"));
  const auto& p = get("precision");
  if (p == "f64") {
    c.precision = model::Precision::kFloat64;
  } else if (p != "f32") {
    throw Error(ErrorCode::kInvalidValue, "precision must be f32 or f64");
  }
  c.validate();
  return c;
}

model::TrainSchedule RunConfig::schedule(model::Phase phase) const {
  const std::string prefix = std::string(model::phase_name(phase)) + ".";
  model::TrainSchedule s;
  s.phase = phase;
  s.epochs = static_cast<int>(integer(prefix + "epochs"));
  s.batch_size = static_cast<int>(integer(prefix + "batch_size"));
  s.learning_rate = real(prefix + "learning_rate");
  s.weight_decay = real(prefix + "weight_decay");
  s.clip_norm = real("clip_norm");
  s.seed = static_cast<std::uint64_t>(integer("seed"));
  s.curriculum = flag("curriculum");
  s.masking.mask_rate = real("mask_rate");
  s.validate();
  return s;
}

metrics::MetricOptions RunConfig::metric_options() const {
  return {flag("with_case_ending"), flag("include_no_diacritic")};
}

inference::Strategy RunConfig::strategy() const { return inference::parse_strategy(get("strategy")); }

std::vector<double> RunConfig::bucket_edges() const { return parse_number_list(get("edges")); }

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const auto item = trim(text.substr(pos, comma - pos));
    double v = 0;
    if (!parse_double(item, v)) throw Error(ErrorCode::kInvalidValue, "bad number '" + std::string(item) + "'");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

}  // namespace ptcad
