#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ptcad/inference.hpp"
#include "ptcad/metrics.hpp"
#include "ptcad/model.hpp"

namespace ptcad {

/// Environment variable naming the default configuration file.
inline constexpr const char* kConfigEnvVar = "PTCAD_CONFIG";

enum class KeyType { kString, kInt, kDouble, kBool };

struct ConfigKey {
  std::string_view name;
  KeyType type;
  std::string_view default_value;
  std::string_view help;
};

/// Every accepted key with its default.
const std::vector<ConfigKey>& config_keys();

/// Flat key=value run configuration. Only keys from config_keys() are
/// accepted and every value is type-checked on assignment.
class RunConfig {
 public:
  RunConfig();

  /// '#' starts a comment line. Throws UnknownKey or InvalidValue (with the
  /// line number).
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  /// Throws UnknownKey or InvalidValue.
  void set(std::string_view key, std::string_view value);
  /// Applies "key=value" assignments in order.
  void apply_overrides(const std::vector<std::string>& assignments);

  const std::string& get(std::string_view key) const;
  std::string str(std::string_view key) const { return get(key); }
  std::int64_t integer(std::string_view key) const;
  double real(std::string_view key) const;
  bool flag(std::string_view key) const;

  /// All keys, sorted, one "key=value" per line.
  std::string resolved() const;

  model::ModelConfig model_config(int vocab_size) const;
  /// Schedule for "prefinetune" or "finetune", read from the
  /// phase-prefixed keys.
  model::TrainSchedule schedule(model::Phase phase) const;
  metrics::MetricOptions metric_options() const;
  inference::Strategy strategy() const;
  std::vector<double> bucket_edges() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

/// Parses "a,b,c" into doubles. Throws InvalidValue.
std::vector<double> parse_number_list(std::string_view text);

}  // namespace ptcad
