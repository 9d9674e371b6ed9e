#include "dfalab/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "dfalab/errors.hpp"

namespace dfalab {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::istringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

KvMap parse_kv_text(const std::string& text, const std::string& origin) {
  KvMap kv;
  std::istringstream stream(text);
  std::string line;
  int lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(lineno) +
                            ": expected key = value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (!kv.emplace(key, value).second) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                            key + "'");
    }
  }
  return kv;
}

KvMap parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_kv_text(text.str(), path);
}

std::string kv_get(const KvMap& kv, const std::string& key, const std::string& fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

std::string kv_require(const KvMap& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ValidationError("config is missing required key '" + key + "'");
  return it->second;
}

namespace {

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long parsed = 0;
  try {
    parsed = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw ValidationError("key '" + key + "' is not an integer: '" + value + "'");
  }
  if (used != value.size()) {
    throw ValidationError("key '" + key + "' is not an integer: '" + value + "'");
  }
  return parsed;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ValidationError("key '" + key + "' is not a number: '" + value + "'");
  }
  if (used != value.size()) {
    throw ValidationError("key '" + key + "' is not a number: '" + value + "'");
  }
  return parsed;
}

}  // namespace

long long kv_get_int(const KvMap& kv, const std::string& key, long long fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : parse_int(key, it->second);
}

double kv_get_double(const KvMap& kv, const std::string& key, double fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : parse_double(key, it->second);
}

namespace {

const std::set<std::string>& run_keys() {
  static const std::set<std::string> keys = {
      "mode",          "n_layer",       "d_model",   "n_head",
      "d_ff",          "vocab_size",    "context",   "residual_backward",
      "backward_derivative",            "lr",        "beta1",
      "beta2",         "eps",           "weight_decay",
      "clip_norm",     "warmup_steps",  "b_init_std",
      "seed",          "total_tokens",  "batch_size",
      "log_interval",  "alignment_interval"};
  return keys;
}

RunConfig run_config_from_kv_impl(const KvMap& kv, const std::set<std::string>& extra_ok) {
  for (const auto& [key, value] : kv) {
    (void)value;
    if (run_keys().count(key) == 0 && extra_ok.count(key) == 0) {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  RunConfig cfg;
  cfg.mode = feedback_mode_from_string(kv_get(kv, "mode", "bp"));
  cfg.model.n_layer = static_cast<int>(kv_get_int(kv, "n_layer", 2));
  cfg.model.d_model = static_cast<int>(kv_get_int(kv, "d_model", 64));
  cfg.model.n_head =
      static_cast<int>(kv_get_int(kv, "n_head", std::max(1, cfg.model.d_model / 32)));
  cfg.model.d_ff = static_cast<int>(kv_get_int(kv, "d_ff", 4LL * cfg.model.d_model));
  cfg.model.vocab_size = static_cast<int>(kv_get_int(kv, "vocab_size", 256));
  cfg.model.context = static_cast<int>(kv_get_int(kv, "context", 128));

  const std::string residual = kv_get(kv, "residual_backward", "asymmetric");
  if (residual == "asymmetric") {
    cfg.model.residual_backward = ResidualBackward::Asymmetric;
  } else if (residual == "symmetric") {
    cfg.model.residual_backward = ResidualBackward::Symmetric;
  } else {
    throw ValidationError("residual_backward must be symmetric or asymmetric, got '" +
                          residual + "'");
  }
  const std::string derivative = kv_get(kv, "backward_derivative", "tanh");
  if (derivative == "tanh") {
    cfg.model.backward_derivative = BackwardDerivative::Tanh;
  } else if (derivative == "relu") {
    cfg.model.backward_derivative = BackwardDerivative::Relu;
  } else {
    throw ValidationError("backward_derivative must be relu or tanh, got '" + derivative +
                          "'");
  }

  cfg.optim.lr = kv_get_double(kv, "lr", 1e-3);
  cfg.optim.beta1 = kv_get_double(kv, "beta1", 0.9);
  cfg.optim.beta2 = kv_get_double(kv, "beta2", 0.999);
  cfg.optim.eps = kv_get_double(kv, "eps", 1e-8);
  cfg.optim.weight_decay = kv_get_double(kv, "weight_decay", 0.0);
  cfg.optim.clip_norm = kv_get_double(kv, "clip_norm", 1.0);
  cfg.warmup_steps = static_cast<int>(kv_get_int(kv, "warmup_steps", 100));
  cfg.b_init_std = kv_get_double(kv, "b_init_std", 0.0);
  cfg.seed = static_cast<std::uint64_t>(kv_get_int(kv, "seed", 1));
  cfg.total_tokens = static_cast<std::uint64_t>(parse_int("total_tokens",
                                                          kv_require(kv, "total_tokens")));
  cfg.batch_size = static_cast<int>(kv_get_int(kv, "batch_size", 16));
  cfg.log_interval = static_cast<int>(kv_get_int(kv, "log_interval", 20));
  cfg.alignment_interval = static_cast<int>(kv_get_int(kv, "alignment_interval", 0));
  cfg.validate();
  return cfg;
}

}  // namespace

RunConfig run_config_from_kv(const KvMap& kv) {
  return run_config_from_kv_impl(kv, {});
}

std::vector<RunConfig> sweep_grid_from_kv(const KvMap& kv) {
  static const std::set<std::string> grid_keys = {"sizes", "modes", "lrs"};
  KvMap base = kv;
  const std::vector<std::string> sizes = split_list(kv_require(kv, "sizes"));
  const std::vector<std::string> modes = split_list(kv_require(kv, "modes"));
  const std::vector<std::string> lrs = split_list(kv_require(kv, "lrs"));
  if (sizes.empty() || modes.empty() || lrs.empty()) {
    throw ValidationError("sweep grid needs nonempty sizes, modes and lrs");
  }
  for (const std::string& key : grid_keys) base.erase(key);
  base.erase("mode");
  base.erase("n_layer");
  base.erase("d_model");
  base.erase("lr");

  std::vector<RunConfig> grid;
  for (const std::string& mode : modes) {
    for (const std::string& size : sizes) {
      const auto x = size.find('x');
      if (x == std::string::npos) {
        throw ValidationError("size '" + size + "' is not of the form n_layerxd_model");
      }
      for (const std::string& lr : lrs) {
        KvMap point = base;
        point["mode"] = mode;
        point["n_layer"] = size.substr(0, x);
        point["d_model"] = size.substr(x + 1);
        point["lr"] = lr;
        grid.push_back(run_config_from_kv_impl(point, {}));
      }
    }
  }
  return grid;
}

}  // namespace dfalab
