#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tact/trainer.hpp"

namespace tact {

/// One configuration value: scalar or flat array of scalars.
struct ConfigValue {
  enum class Kind { boolean, integer, floating, string, array };
  Kind kind = Kind::string;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;
  std::vector<ConfigValue> arr;

  static ConfigValue of(bool v);
  static ConfigValue of(std::int64_t v);
  static ConfigValue of(double v);
  static ConfigValue of(std::string v);

  double as_double() const;  // integers widen
  std::string render() const;
};

/// Human-editable sectioned config: a small TOML subset ([section] headers,
/// key = value with strings/bools/numbers/flat arrays, # comments).
class Config {
 public:
  static Config parse_file(const std::filesystem::path& path);
  static Config parse(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  const ConfigValue* find(const std::string& section, const std::string& key) const;

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& section,
                                           const std::string& key) const;

  void set(const std::string& section, const std::string& key, ConfigValue value);

  /// Canonical serialization (sorted sections and keys).
  std::string dump() const;
  void save(const std::filesystem::path& path) const;

  const std::map<std::string, std::map<std::string, ConfigValue>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
};

/// [train] section <-> TrainConfig. Unknown keys raise config errors so typos
/// never silently fall back to defaults.
TrainConfig train_config_from(const Config& cfg);
void write_train_config(Config& cfg, const TrainConfig& tc);

}  // namespace tact
