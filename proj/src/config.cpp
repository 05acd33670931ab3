#include "tact/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "tact/error.hpp"
#include "tact/manifest.hpp"

namespace tact {

ConfigValue ConfigValue::of(bool v) {
  ConfigValue c;
  c.kind = Kind::boolean;
  c.b = v;
  return c;
}
ConfigValue ConfigValue::of(std::int64_t v) {
  ConfigValue c;
  c.kind = Kind::integer;
  c.i = v;
  return c;
}
ConfigValue ConfigValue::of(double v) {
  ConfigValue c;
  c.kind = Kind::floating;
  c.d = v;
  return c;
}
ConfigValue ConfigValue::of(std::string v) {
  ConfigValue c;
  c.kind = Kind::string;
  c.s = std::move(v);
  return c;
}

double ConfigValue::as_double() const {
  if (kind == Kind::floating) return d;
  if (kind == Kind::integer) return static_cast<double>(i);
  throw config_error("expected a number");
}

std::string ConfigValue::render() const {
  switch (kind) {
    case Kind::boolean: return b ? "true" : "false";
    case Kind::integer: return std::to_string(i);
    case Kind::floating: return format_double(d);
    case Kind::string: {
      std::string out = "\"";
      for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      return out + "\"";
    }
    case Kind::array: {
      std::string out = "[";
      for (std::size_t i2 = 0; i2 < arr.size(); ++i2) {
        if (i2) out += ", ";
        out += arr[i2].render();
      }
      return out + "]";
    }
  }
  return {};
}

namespace {

[[noreturn]] void parse_fail(const std::string& origin, int line, const std::string& what) {
  std::ostringstream msg;
  msg << origin << ":" << line << ": " << what;
  throw config_error(msg.str());
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Removes a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

ConfigValue parse_scalar(const std::string& raw, const std::string& origin, int line);

ConfigValue parse_value(const std::string& raw, const std::string& origin, int line) {
  const std::string v = strip(raw);
  if (v.empty()) parse_fail(origin, line, "missing value");
  if (v.front() == '[') {
    if (v.back() != ']') parse_fail(origin, line, "unterminated array");
    ConfigValue out;
    out.kind = ConfigValue::Kind::array;
    std::string inner = v.substr(1, v.size() - 2);
    std::string item;
    bool in_string = false;
    for (char c : inner) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!strip(item).empty()) out.arr.push_back(parse_scalar(strip(item), origin, line));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!strip(item).empty()) out.arr.push_back(parse_scalar(strip(item), origin, line));
    return out;
  }
  return parse_scalar(v, origin, line);
}

ConfigValue parse_scalar(const std::string& raw, const std::string& origin, int line) {
  if (raw == "true") return ConfigValue::of(true);
  if (raw == "false") return ConfigValue::of(false);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') parse_fail(origin, line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size()) {
        ++i;
        if (raw[i] == 'n')
          out += '\n';
        else if (raw[i] == 't')
          out += '\t';
        else
          out += raw[i];
      } else {
        out += raw[i];
      }
    }
    return ConfigValue::of(std::move(out));
  }
  // number: integer when it parses exactly as one, float otherwise
  try {
    if (raw.find_first_of(".eE") == std::string::npos) {
      std::size_t used = 0;
      const std::int64_t i = std::stoll(raw, &used);
      if (used == raw.size()) return ConfigValue::of(i);
    }
  } catch (const std::exception&) {
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(raw, &used);
    if (used == raw.size()) return ConfigValue::of(d);
  } catch (const std::exception&) {
  }
  parse_fail(origin, line, "cannot parse value: " + raw);
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("config file not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') parse_fail(origin, line_no, "unterminated section header");
      section = strip(line.substr(1, line.size() - 2));
      if (section.empty()) parse_fail(origin, line_no, "empty section name");
      cfg.sections_[section];  // materialize even if empty
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_fail(origin, line_no, "expected key = value");
    const std::string key = strip(line.substr(0, eq));
    if (key.empty()) parse_fail(origin, line_no, "empty key");
    cfg.sections_[section][key] = parse_value(line.substr(eq + 1), origin, line_no);
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const ConfigValue* Config::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const auto* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != ConfigValue::Kind::boolean)
    throw config_error(section + "." + key + ": expected a boolean");
  return v->b;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
  const auto* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != ConfigValue::Kind::integer)
    throw config_error(section + "." + key + ": expected an integer");
  return v->i;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  const auto* v = find(section, key);
  if (!v) return fallback;
  return v->as_double();
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  const auto* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != ConfigValue::Kind::string)
    throw config_error(section + "." + key + ": expected a string");
  return v->s;
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
  const auto* v = find(section, key);
  if (!v) return {};
  if (v->kind != ConfigValue::Kind::array)
    throw config_error(section + "." + key + ": expected an array");
  std::vector<double> out;
  for (const auto& item : v->arr) out.push_back(item.as_double());
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& section,
                                                 const std::string& key) const {
  const auto* v = find(section, key);
  if (!v) return {};
  if (v->kind != ConfigValue::Kind::array)
    throw config_error(section + "." + key + ": expected an array");
  std::vector<std::string> out;
  for (const auto& item : v->arr) {
    if (item.kind != ConfigValue::Kind::string)
      throw config_error(section + "." + key + ": expected strings");
    out.push_back(item.s);
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key, ConfigValue value) {
  sections_[section][key] = std::move(value);
}

std::string Config::dump() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, keys] : sections_) {
    if (!first) out << "\n";
    first = false;
    out << "[" << section << "]\n";
    for (const auto& [key, value] : keys) out << key << " = " << value.render() << "\n";
  }
  return out.str();
}

void Config::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write config: " + path.string());
  out << dump();
}

// ---------------------------------------------------------------------------
// [train] section mapping
// ---------------------------------------------------------------------------

namespace {
const std::set<std::string> kTrainKeys = {
    "encoder_size", "input_side", "patch", "output_dim", "tau", "tau_learnable", "gamma",
    "use_ssvtp", "use_hct",
    "pair_tv", "pair_tl", "pair_vl", "base_lr", "warmup_epochs", "total_epochs",
    "weight_decay", "beta1", "beta2", "batch_size", "seed", "augment_vision",
    "background_subtract", "normalize_vision", "vision_side", "composer_shuffle",
    "composer_subset_min", "composer_subset_max", "composer_template", "jitter", "hue",
    "grayscale_p", "blur_p", "tactile_mean", "tactile_std", "max_val_batches"};
}

TrainConfig train_config_from(const Config& cfg) {
  if (auto it = cfg.sections().find("train"); it != cfg.sections().end())
    for (const auto& [key, value] : it->second)
      if (!kTrainKeys.count(key)) throw config_error("unknown [train] key: " + key);

  TrainConfig tc;
  const std::string size = cfg.get_string("train", "encoder_size", "tiny-toy");
  tc.encoder_size = encoder_size_from_string(size);
  tc.encoder = EncoderConfig::preset(tc.encoder_size);
  tc.encoder.input_side =
      static_cast<int>(cfg.get_int("train", "input_side", tc.encoder.input_side));
  tc.encoder.patch = static_cast<int>(cfg.get_int("train", "patch", tc.encoder.patch));
  tc.encoder.output_dim =
      static_cast<int>(cfg.get_int("train", "output_dim", tc.encoder.output_dim));

  tc.tau = cfg.get_double("train", "tau", tc.tau);
  tc.tau_learnable = cfg.get_bool("train", "tau_learnable", tc.tau_learnable);
  tc.gamma = cfg.get_double("train", "gamma", tc.gamma);
  tc.use_ssvtp = cfg.get_bool("train", "use_ssvtp", true);
  tc.use_hct = cfg.get_bool("train", "use_hct", true);
  tc.pairs.tactile_vision = cfg.get_bool("train", "pair_tv", true);
  tc.pairs.tactile_text = cfg.get_bool("train", "pair_tl", true);
  tc.pairs.vision_text = cfg.get_bool("train", "pair_vl", true);
  tc.base_lr = cfg.get_double("train", "base_lr", tc.base_lr);
  tc.warmup_epochs = static_cast<int>(cfg.get_int("train", "warmup_epochs", tc.warmup_epochs));
  tc.total_epochs = static_cast<int>(cfg.get_int("train", "total_epochs", tc.total_epochs));
  // A short-epoch override without an explicit warmup shrinks the default
  // warmup instead of tripping validation.
  if (!cfg.has("train", "warmup_epochs") && tc.warmup_epochs > tc.total_epochs)
    tc.warmup_epochs = tc.total_epochs;
  tc.weight_decay = cfg.get_double("train", "weight_decay", tc.weight_decay);
  tc.beta1 = cfg.get_double("train", "beta1", tc.beta1);
  tc.beta2 = cfg.get_double("train", "beta2", tc.beta2);
  tc.batch_size = static_cast<int>(cfg.get_int("train", "batch_size", tc.batch_size));
  tc.seed = static_cast<std::uint64_t>(cfg.get_int("train", "seed", 0));
  tc.augment_vision = cfg.get_bool("train", "augment_vision", tc.augment_vision);
  tc.background_subtract =
      cfg.get_bool("train", "background_subtract", tc.background_subtract);
  tc.normalize_vision = cfg.get_bool("train", "normalize_vision", tc.normalize_vision);
  tc.vision_side = static_cast<int>(cfg.get_int("train", "vision_side", tc.vision_side));
  tc.composer.shuffle = cfg.get_bool("train", "composer_shuffle", true);
  tc.composer.subset_min =
      static_cast<int>(cfg.get_int("train", "composer_subset_min", tc.composer.subset_min));
  tc.composer.subset_max =
      static_cast<int>(cfg.get_int("train", "composer_subset_max", tc.composer.subset_max));
  tc.composer.prompt_template = cfg.get_string("train", "composer_template", "");
  tc.augment.jitter = cfg.get_double("train", "jitter", tc.augment.jitter);
  tc.augment.hue = cfg.get_double("train", "hue", tc.augment.hue);
  tc.augment.grayscale_p = cfg.get_double("train", "grayscale_p", tc.augment.grayscale_p);
  tc.augment.blur_p = cfg.get_double("train", "blur_p", tc.augment.blur_p);
  tc.max_val_batches =
      static_cast<int>(cfg.get_int("train", "max_val_batches", tc.max_val_batches));

  const auto mean = cfg.get_double_list("train", "tactile_mean");
  const auto std_ = cfg.get_double_list("train", "tactile_std");
  if (!mean.empty() || !std_.empty()) {
    if (mean.size() != 3 || std_.size() != 3)
      throw config_error("tactile_mean/tactile_std need exactly 3 entries each");
    NormStats ns;
    std::copy(mean.begin(), mean.end(), ns.mean.begin());
    std::copy(std_.begin(), std_.end(), ns.std.begin());
    tc.tactile_stats_override = ns;
  }
  return tc;
}

void write_train_config(Config& cfg, const TrainConfig& tc) {
  auto set = [&cfg](const std::string& key, ConfigValue v) { cfg.set("train", key, std::move(v)); };
  set("encoder_size", ConfigValue::of(to_string(tc.encoder_size)));
  set("input_side", ConfigValue::of(static_cast<std::int64_t>(tc.encoder.input_side)));
  set("patch", ConfigValue::of(static_cast<std::int64_t>(tc.encoder.patch)));
  set("output_dim", ConfigValue::of(static_cast<std::int64_t>(tc.encoder.output_dim)));
  set("tau", ConfigValue::of(tc.tau));
  set("tau_learnable", ConfigValue::of(tc.tau_learnable));
  set("gamma", ConfigValue::of(tc.gamma));
  set("use_ssvtp", ConfigValue::of(tc.use_ssvtp));
  set("use_hct", ConfigValue::of(tc.use_hct));
  set("pair_tv", ConfigValue::of(tc.pairs.tactile_vision));
  set("pair_tl", ConfigValue::of(tc.pairs.tactile_text));
  set("pair_vl", ConfigValue::of(tc.pairs.vision_text));
  set("base_lr", ConfigValue::of(tc.base_lr));
  set("warmup_epochs", ConfigValue::of(static_cast<std::int64_t>(tc.warmup_epochs)));
  set("total_epochs", ConfigValue::of(static_cast<std::int64_t>(tc.total_epochs)));
  set("weight_decay", ConfigValue::of(tc.weight_decay));
  set("beta1", ConfigValue::of(tc.beta1));
  set("beta2", ConfigValue::of(tc.beta2));
  set("batch_size", ConfigValue::of(static_cast<std::int64_t>(tc.batch_size)));
  set("seed", ConfigValue::of(static_cast<std::int64_t>(tc.seed)));
  set("augment_vision", ConfigValue::of(tc.augment_vision));
  set("background_subtract", ConfigValue::of(tc.background_subtract));
  set("normalize_vision", ConfigValue::of(tc.normalize_vision));
  set("vision_side", ConfigValue::of(static_cast<std::int64_t>(tc.vision_side)));
  set("composer_shuffle", ConfigValue::of(tc.composer.shuffle));
  set("composer_subset_min", ConfigValue::of(static_cast<std::int64_t>(tc.composer.subset_min)));
  set("composer_subset_max", ConfigValue::of(static_cast<std::int64_t>(tc.composer.subset_max)));
  set("composer_template", ConfigValue::of(tc.composer.prompt_template));
  set("jitter", ConfigValue::of(tc.augment.jitter));
  set("hue", ConfigValue::of(tc.augment.hue));
  set("grayscale_p", ConfigValue::of(tc.augment.grayscale_p));
  set("blur_p", ConfigValue::of(tc.augment.blur_p));
  set("max_val_batches", ConfigValue::of(static_cast<std::int64_t>(tc.max_val_batches)));
}

}  // namespace tact
