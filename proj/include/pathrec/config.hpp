#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace pathrec {

// Line-oriented `key = value` configuration with dotted keys and `#`
// comments. Unknown keys are rejected loudly so typos cannot silently fall
// back to defaults.
struct Config {
  std::string interactions;
  std::string metadata;
  std::string image_labels;
  std::string workdir;
  int min_item_count = 5;

  int d = 100;
  int d_se = 100;
  int d_proj = 100;
  std::string encoder = "recurrent";

  int pretrain_epochs = 100;
  double pretrain_lr = 0.01;
  double pretrain_margin = 1.0;

  double lr = 1e-3;
  double alpha = 0.01;
  double beta = 0.005;
  double gamma = 0.99;
  int epochs = 50;
  int batch = 256;
  int T = 5;
  uint64_t seed = 0;

  int width0 = 100;
  int width1 = 1;
  int K = 10;

  int a_max = 200;
  double dropout = 0.7;

  void set(const std::string& key, const std::string& value);
  void validate() const;
  std::map<std::string, std::string> entries() const;
  std::string canonical() const;
  std::string hash() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing junk");
    return d;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": not a number: " + v);
  }
}

inline long long parse_int(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing junk");
    return i;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": not an integer: " + v);
  }
}

inline std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

inline void Config::set(const std::string& key, const std::string& value) {
  using detail::parse_int;
  using detail::parse_real;
  static const std::vector<std::string> known = {
      "data.interactions", "data.metadata",     "data.image_labels",
      "data.workdir",      "data.min_item_count",
      "model.d",           "model.d_se",        "model.d_proj",
      "model.encoder",     "pretrain.epochs",   "pretrain.lr",
      "pretrain.margin",   "training.lr",       "training.alpha",
      "training.beta",     "training.gamma",    "training.epochs",
      "training.batch",    "training.T",        "training.seed",
      "inference.widths",  "inference.K",       "action.a_max",
      "action.dropout"};

  if (key == "data.interactions") interactions = value;
  else if (key == "data.metadata") metadata = value;
  else if (key == "data.image_labels") image_labels = value;
  else if (key == "data.workdir") workdir = value;
  else if (key == "data.min_item_count") min_item_count = static_cast<int>(parse_int(value, key));
  else if (key == "model.d") d = static_cast<int>(parse_int(value, key));
  else if (key == "model.d_se") d_se = static_cast<int>(parse_int(value, key));
  else if (key == "model.d_proj") d_proj = static_cast<int>(parse_int(value, key));
  else if (key == "model.encoder") encoder = value;
  else if (key == "pretrain.epochs") pretrain_epochs = static_cast<int>(parse_int(value, key));
  else if (key == "pretrain.lr") pretrain_lr = parse_real(value, key);
  else if (key == "pretrain.margin") pretrain_margin = parse_real(value, key);
  else if (key == "training.lr") lr = parse_real(value, key);
  else if (key == "training.alpha") alpha = parse_real(value, key);
  else if (key == "training.beta") beta = parse_real(value, key);
  else if (key == "training.gamma") gamma = parse_real(value, key);
  else if (key == "training.epochs") epochs = static_cast<int>(parse_int(value, key));
  else if (key == "training.batch") batch = static_cast<int>(parse_int(value, key));
  else if (key == "training.T") T = static_cast<int>(parse_int(value, key));
  else if (key == "training.seed") seed = static_cast<uint64_t>(parse_int(value, key));
  else if (key == "inference.widths") {
    size_t comma = value.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("inference.widths wants two comma-separated integers");
    }
    width0 = static_cast<int>(parse_int(detail::trim(value.substr(0, comma)), key));
    width1 = static_cast<int>(parse_int(detail::trim(value.substr(comma + 1)), key));
  }
  else if (key == "inference.K") K = static_cast<int>(parse_int(value, key));
  else if (key == "action.a_max") a_max = static_cast<int>(parse_int(value, key));
  else if (key == "action.dropout") dropout = parse_real(value, key);
  else {
    std::string list;
    for (const auto& k : known) list += "\n  " + k;
    throw std::runtime_error("unknown config key: " + key +
                             "\nvalid keys are:" + list);
  }
}

inline void Config::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::runtime_error("training.gamma must lie in (0, 1]");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::runtime_error("action.dropout must lie in [0, 1)");
  }
  if (d <= 0 || d_se <= 0 || d_proj <= 0) {
    throw std::runtime_error("model dims must be positive");
  }
  if (T < 1) throw std::runtime_error("training.T must be >= 1");
  if (K < 1) throw std::runtime_error("inference.K must be >= 1");
  if (width0 < 1 || width1 < 1) {
    throw std::runtime_error("inference.widths must be >= 1");
  }
  if (a_max < 1) throw std::runtime_error("action.a_max must be >= 1");
  if (batch < 1) throw std::runtime_error("training.batch must be >= 1");
  if (min_item_count < 1) {
    throw std::runtime_error("data.min_item_count must be >= 1");
  }
  if (encoder != "recurrent" && encoder != "attention") {
    throw std::runtime_error("model.encoder must be recurrent or attention");
  }
}

inline std::map<std::string, std::string> Config::entries() const {
  using detail::format_real;
  std::map<std::string, std::string> m;
  m["data.interactions"] = interactions;
  m["data.metadata"] = metadata;
  m["data.image_labels"] = image_labels;
  m["data.workdir"] = workdir;
  m["data.min_item_count"] = std::to_string(min_item_count);
  m["model.d"] = std::to_string(d);
  m["model.d_se"] = std::to_string(d_se);
  m["model.d_proj"] = std::to_string(d_proj);
  m["model.encoder"] = encoder;
  m["pretrain.epochs"] = std::to_string(pretrain_epochs);
  m["pretrain.lr"] = format_real(pretrain_lr);
  m["pretrain.margin"] = format_real(pretrain_margin);
  m["training.lr"] = format_real(lr);
  m["training.alpha"] = format_real(alpha);
  m["training.beta"] = format_real(beta);
  m["training.gamma"] = format_real(gamma);
  m["training.epochs"] = std::to_string(epochs);
  m["training.batch"] = std::to_string(batch);
  m["training.T"] = std::to_string(T);
  m["training.seed"] = std::to_string(seed);
  m["inference.widths"] = std::to_string(width0) + "," + std::to_string(width1);
  m["inference.K"] = std::to_string(K);
  m["action.a_max"] = std::to_string(a_max);
  m["action.dropout"] = format_real(dropout);
  return m;
}

inline std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

inline std::string Config::hash() const {
  uint64_t h = detail::fnv1a64(canonical());
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

inline Config parse_config_text(const std::string& text,
                                const std::string& origin = "<string>") {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected key = value");
    }
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": empty key");
    }
    cfg.set(key, value);
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

// `--set key=value` command-line overrides.
inline void apply_overrides(Config& cfg, const std::vector<std::string>& sets) {
  for (const std::string& s : sets) {
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("override must look like key=value: " + s);
    }
    cfg.set(detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
  }
}

// The manifest pins everything needed to reproduce a command bit-identically.
inline void write_manifest(const std::string& path, const std::string& command,
                           const Config& cfg,
                           const std::vector<std::string>& artifacts) {
  nlohmann::json j;
  j["command"] = command;
  j["config_hash"] = cfg.hash();
  j["config"] = cfg.entries();
  j["artifacts"] = artifacts;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace pathrec
