// SPDX-License-Identifier: Apache-2.0

#include "hicsim/config.hpp"

#include <cctype>
#include <cerrno>
#include <cinttypes>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

namespace hicsim {
namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_int(long long v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld", v);
  return buf;
}

std::string fmt_u64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%" PRIu64, v);
  return buf;
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double_value(const std::string& key, const std::string& s) {
  if (s.empty()) throw ConfigError(key + ": expected a number, got empty value");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    throw ConfigError(key + ": not a finite number: '" + s + "'");
  return v;
}

long long parse_ll(const std::string& key, const std::string& s) {
  if (s.empty()) throw ConfigError(key + ": expected an integer, got empty value");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ConfigError(key + ": not an integer: '" + s + "'");
  return v;
}

int parse_int_value(const std::string& key, const std::string& s) {
  const long long v = parse_ll(key, s);
  if (v < INT_MIN || v > INT_MAX)
    throw ConfigError(key + ": integer out of range: '" + s + "'");
  return static_cast<int>(v);
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& s) {
  if (s.empty()) throw ConfigError(key + ": expected an integer, got empty value");
  if (s[0] == '-') throw ConfigError(key + ": must be non-negative: '" + s + "'");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ConfigError(key + ": not an integer: '" + s + "'");
  return static_cast<std::uint64_t>(v);
}

bool parse_bool_value(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(key + ": expected true/false: '" + s + "'");
}

std::vector<std::string> split_list(const std::string& key, const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = s.find(',', pos);
    const std::string item =
        trim(comma == std::string::npos ? s.substr(pos) : s.substr(pos, comma - pos));
    if (item.empty()) throw ConfigError(key + ": empty list element");
    out.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <class T, class Fmt>
std::string fmt_list(const std::vector<T>& v, Fmt fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out;
}

const char* rounding_name(GradQuantizer::Rounding r) {
  return r == GradQuantizer::Rounding::kStochastic ? "stochastic" : "nearest";
}

GradQuantizer::Rounding rounding_from_name(const std::string& key, const std::string& s) {
  if (s == "nearest") return GradQuantizer::Rounding::kNearest;
  if (s == "stochastic") return GradQuantizer::Rounding::kStochastic;
  throw ConfigError(key + ": expected nearest or stochastic: '" + s + "'");
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

using Fields = std::vector<Field>;

// `ref` is a generic lambda mapping a (const or mutable) config to the field.
template <class Ref>
void add_double(Fields& f, const char* key, Ref ref) {
  f.push_back({key, [ref](const ExperimentConfig& c) { return fmt_double(ref(c)); },
               [ref, key = std::string(key)](ExperimentConfig& c, const std::string& s) {
                 ref(c) = parse_double_value(key, s);
               }});
}

template <class Ref>
void add_int(Fields& f, const char* key, Ref ref) {
  f.push_back({key, [ref](const ExperimentConfig& c) { return fmt_int(ref(c)); },
               [ref, key = std::string(key)](ExperimentConfig& c, const std::string& s) {
                 ref(c) = parse_int_value(key, s);
               }});
}

template <class Ref>
void add_u64(Fields& f, const char* key, Ref ref) {
  f.push_back({key, [ref](const ExperimentConfig& c) { return fmt_u64(ref(c)); },
               [ref, key = std::string(key)](ExperimentConfig& c, const std::string& s) {
                 ref(c) = parse_u64_value(key, s);
               }});
}

template <class Ref>
void add_bool(Fields& f, const char* key, Ref ref) {
  f.push_back({key, [ref](const ExperimentConfig& c) { return fmt_bool(ref(c)); },
               [ref, key = std::string(key)](ExperimentConfig& c, const std::string& s) {
                 ref(c) = parse_bool_value(key, s);
               }});
}

template <class Ref>
void add_string(Fields& f, const char* key, Ref ref) {
  f.push_back({key, [ref](const ExperimentConfig& c) { return ref(c); },
               [ref](ExperimentConfig& c, const std::string& s) { ref(c) = s; }});
}

template <class Ref>
void add_int_list(Fields& f, const char* key, Ref ref) {
  f.push_back({key,
               [ref](const ExperimentConfig& c) {
                 return fmt_list(ref(c), [](int v) { return fmt_int(v); });
               },
               [ref, key = std::string(key)](ExperimentConfig& c, const std::string& s) {
                 std::vector<int> out;
                 for (const auto& item : split_list(key, s))
                   out.push_back(parse_int_value(key, item));
                 ref(c) = out;
               }});
}

template <class Ref>
void add_double_list(Fields& f, const char* key, Ref ref) {
  f.push_back({key,
               [ref](const ExperimentConfig& c) {
                 return fmt_list(ref(c), [](double v) { return fmt_double(v); });
               },
               [ref, key = std::string(key)](ExperimentConfig& c, const std::string& s) {
                 std::vector<double> out;
                 for (const auto& item : split_list(key, s))
                   out.push_back(parse_double_value(key, item));
                 ref(c) = out;
               }});
}

Fields build_fields() {
  Fields f;

  add_double(f, "device.g_max", [](auto& c) -> auto& { return c.device.g_max; });
  add_double(f, "device.g_min", [](auto& c) -> auto& { return c.device.g_min; });
  add_double(f, "device.delta0", [](auto& c) -> auto& { return c.device.delta0; });
  add_double(f, "device.delta_lin", [](auto& c) -> auto& { return c.device.delta_lin; });
  add_double(f, "device.sigma_write", [](auto& c) -> auto& { return c.device.sigma_write; });
  add_double(f, "device.sigma_read", [](auto& c) -> auto& { return c.device.sigma_read; });
  add_double(f, "device.nu_mean", [](auto& c) -> auto& { return c.device.nu_mean; });
  add_double(f, "device.nu_sigma", [](auto& c) -> auto& { return c.device.nu_sigma; });
  add_double(f, "device.t0", [](auto& c) -> auto& { return c.device.t0; });
  add_double(f, "device.g_high", [](auto& c) -> auto& { return c.device.g_high; });
  add_double(f, "device.g_threshold", [](auto& c) -> auto& { return c.device.g_threshold; });
  add_int(f, "device.pulses_per_cycle", [](auto& c) -> auto& { return c.device.pulses_per_cycle; });
  add_bool(f, "device.write_noise", [](auto& c) -> auto& { return c.device.write_noise; });
  add_bool(f, "device.read_noise", [](auto& c) -> auto& { return c.device.read_noise; });
  add_bool(f, "device.drift", [](auto& c) -> auto& { return c.device.drift; });
  add_bool(f, "device.nonlinear_prog", [](auto& c) -> auto& { return c.device.nonlinear_prog; });

  add_double(f, "scheme.w_max", [](auto& c) -> auto& { return c.scheme.w_max; });
  add_int(f, "scheme.levels", [](auto& c) -> auto& { return c.scheme.levels; });
  add_int(f, "scheme.lsb_bits", [](auto& c) -> auto& { return c.scheme.lsb_bits; });
  add_double(f, "scheme.g_unit", [](auto& c) -> auto& { return c.scheme.g_unit; });

  add_double(f, "policy.verify_tol_frac", [](auto& c) -> auto& { return c.policy.verify_tol_frac; });
  add_int(f, "policy.max_verify_pulses", [](auto& c) -> auto& { return c.policy.max_verify_pulses; });
  add_double(f, "policy.refresh_threshold", [](auto& c) -> auto& { return c.policy.refresh_threshold; });
  add_int(f, "policy.refresh_attempts", [](auto& c) -> auto& { return c.policy.refresh_attempts; });

  add_int(f, "crossbar.tile_rows", [](auto& c) -> auto& { return c.crossbar.tile_rows; });
  add_int(f, "crossbar.tile_cols", [](auto& c) -> auto& { return c.crossbar.tile_cols; });

  add_int(f, "converter.dac_bits", [](auto& c) -> auto& { return c.crossbar.converter.dac_bits; });
  add_int(f, "converter.adc_bits", [](auto& c) -> auto& { return c.crossbar.converter.adc_bits; });
  add_double(f, "converter.clip_percentile",
             [](auto& c) -> auto& { return c.crossbar.converter.clip_percentile; });
  add_int(f, "converter.warmup_batches",
          [](auto& c) -> auto& { return c.crossbar.converter.warmup_batches; });
  add_bool(f, "converter.enabled", [](auto& c) -> auto& { return c.crossbar.converter.enabled; });
  add_bool(f, "converter.quantize_backward",
           [](auto& c) -> auto& { return c.crossbar.converter.quantize_backward; });

  add_string(f, "network.arch", [](auto& c) -> auto& { return c.arch; });
  add_string(f, "network.backend", [](auto& c) -> auto& { return c.backend; });

  add_string(f, "run.mode", [](auto& c) -> auto& { return c.mode; });
  add_bool(f, "run.event_log", [](auto& c) -> auto& { return c.event_log; });

  add_double(f, "training.learning_rate",
             [](auto& c) -> auto& { return c.training.learning_rate; });
  add_double(f, "training.lr_decay_factor",
             [](auto& c) -> auto& { return c.training.lr_decay_factor; });
  add_int_list(f, "training.lr_decay_epochs",
               [](auto& c) -> auto& { return c.training.lr_decay_epochs; });
  add_int(f, "training.batch_size", [](auto& c) -> auto& { return c.training.batch_size; });
  add_int(f, "training.epochs", [](auto& c) -> auto& { return c.training.epochs; });
  add_int(f, "training.refresh_interval_batches",
          [](auto& c) -> auto& { return c.training.refresh_interval_batches; });
  add_double(f, "training.width_multiplier",
             [](auto& c) -> auto& { return c.training.width_multiplier; });
  add_u64(f, "training.seed", [](auto& c) -> auto& { return c.training.seed; });
  add_double(f, "training.seconds_per_batch",
             [](auto& c) -> auto& { return c.training.seconds_per_batch; });
  add_double(f, "training.adabs_fraction",
             [](auto& c) -> auto& { return c.training.adabs_fraction; });
  add_int(f, "training.threads", [](auto& c) -> auto& { return c.training.threads; });

  f.push_back({"quantizer.rounding",
               [](const ExperimentConfig& c) {
                 return std::string(rounding_name(c.training.quantizer.rounding));
               },
               [](ExperimentConfig& c, const std::string& s) {
                 c.training.quantizer.rounding = rounding_from_name("quantizer.rounding", s);
               }});
  add_int(f, "quantizer.clip_ticks",
          [](auto& c) -> auto& { return c.training.quantizer.clip_ticks; });

  f.push_back({"dataset.kind",
               [](const ExperimentConfig& c) {
                 return std::string(dataset_kind_name(c.dataset.kind));
               },
               [](ExperimentConfig& c, const std::string& s) {
                 try {
                   c.dataset.kind = dataset_kind_from_name(s);
                 } catch (const std::invalid_argument& e) {
                   throw ConfigError(std::string("dataset.kind: ") + e.what());
                 }
               }});
  add_int(f, "dataset.classes", [](auto& c) -> auto& { return c.dataset.classes; });
  add_int(f, "dataset.train_per_class",
          [](auto& c) -> auto& { return c.dataset.train_per_class; });
  add_int(f, "dataset.test_per_class",
          [](auto& c) -> auto& { return c.dataset.test_per_class; });
  add_double(f, "dataset.noise", [](auto& c) -> auto& { return c.dataset.noise; });
  add_u64(f, "dataset.seed", [](auto& c) -> auto& { return c.dataset.seed; });
  add_bool(f, "dataset.normalize", [](auto& c) -> auto& { return c.dataset.normalize; });
  add_string(f, "dataset.train_images", [](auto& c) -> auto& { return c.dataset.train_images; });
  add_string(f, "dataset.train_labels", [](auto& c) -> auto& { return c.dataset.train_labels; });
  add_string(f, "dataset.test_images", [](auto& c) -> auto& { return c.dataset.test_images; });
  add_string(f, "dataset.test_labels", [](auto& c) -> auto& { return c.dataset.test_labels; });
  add_string(f, "dataset.train_csv", [](auto& c) -> auto& { return c.dataset.train_csv; });
  add_string(f, "dataset.test_csv", [](auto& c) -> auto& { return c.dataset.test_csv; });

  add_double_list(f, "sweep.times", [](auto& c) -> auto& { return c.sweep_times; });
  add_int(f, "sweep.training_runs", [](auto& c) -> auto& { return c.sweep_training_runs; });
  add_int(f, "sweep.inference_runs", [](auto& c) -> auto& { return c.sweep_inference_runs; });

  add_int(f, "ablation.seeds", [](auto& c) -> auto& { return c.ablation_seeds; });

  return f;
}

const Fields& fields() {
  static const Fields f = build_fields();
  return f;
}

const std::map<std::string, const Field*>& field_index() {
  static const std::map<std::string, const Field*> idx = [] {
    std::map<std::string, const Field*> m;
    for (const Field& f : fields()) m.emplace(f.key, &f);
    return m;
  }();
  return idx;
}

std::string section_of(const std::string& key) {
  return key.substr(0, key.find('.'));
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    device.validate();
    scheme.validate(device);
    policy.validate();
    crossbar.validate();
    training.validate();
    dataset.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  backend_kind();
  read_mode();
  if (arch.empty()) throw ConfigError("network.arch must not be empty");
  if (sweep_times.empty()) throw ConfigError("sweep.times must not be empty");
  for (std::size_t i = 0; i < sweep_times.size(); ++i) {
    if (!(sweep_times[i] > 0.0))
      throw ConfigError("sweep.times entries must be positive");
    if (i > 0 && !(sweep_times[i] > sweep_times[i - 1]))
      throw ConfigError("sweep.times must be strictly increasing");
  }
  if (sweep_training_runs < 1) throw ConfigError("sweep.training_runs must be >= 1");
  if (sweep_inference_runs < 1) throw ConfigError("sweep.inference_runs must be >= 1");
  if (ablation_seeds < 1) throw ConfigError("ablation.seeds must be >= 1");
}

BackendConfig::Kind ExperimentConfig::backend_kind() const {
  if (backend == "hybrid") return BackendConfig::Kind::kHybrid;
  if (backend == "fixed-point") return BackendConfig::Kind::kFixedPoint;
  if (backend == "fp32") return BackendConfig::Kind::kFp32;
  throw ConfigError("network.backend: expected hybrid, fixed-point, or fp32: '" +
                    backend + "'");
}

ReadMode ExperimentConfig::read_mode() const {
  if (mode == "noisy") return ReadMode::kNoisy;
  if (mode == "ideal") return ReadMode::kIdeal;
  throw ConfigError("run.mode: expected noisy or ideal: '" + mode + "'");
}

BackendConfig ExperimentConfig::backend_config(EventLog* log) const {
  BackendConfig b;
  b.kind = backend_kind();
  b.scheme = scheme;
  b.device = device;
  b.policy = policy;
  b.crossbar = crossbar;
  b.seed = training.seed;
  b.log = log;
  return b;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.push_back(f.key);
  return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value) {
  const auto& idx = field_index();
  const auto it = idx.find(key);
  if (it == idx.end()) throw ConfigError("unknown key '" + key + "'");
  it->second->set(cfg, value);
}

std::string get_config_value(const ExperimentConfig& cfg, const std::string& key) {
  const auto& idx = field_index();
  const auto it = idx.find(key);
  if (it == idx.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second->get(cfg);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, int> seen;  // key -> first line
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": missing key");
    const auto prev = seen.find(key);
    if (prev != seen.end())
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key +
                        "' (first set on line " + std::to_string(prev->second) + ")");
    seen.emplace(key, lineno);
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw ConfigError("cannot open config file: " + path);
  std::string text;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), fp)) > 0) text.append(buf, n);
  const bool bad = std::ferror(fp) != 0;
  std::fclose(fp);
  if (bad) throw ConfigError("error reading config file: " + path);
  return parse_config(text);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    const std::string s = section_of(f.key);
    if (s != section) {
      if (!out.empty()) out += "\n";
      section = s;
    }
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += "\n";
  }
  return out;
}

void save_config_file(const std::string& path, const ExperimentConfig& cfg) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw ConfigError("cannot open config file for writing: " + path);
  const std::string text = serialize_config(cfg);
  const std::size_t n = std::fwrite(text.data(), 1, text.size(), fp);
  const bool bad = n != text.size();
  if (std::fclose(fp) != 0 || bad)
    throw ConfigError("error writing config file: " + path);
}

}  // namespace hicsim
