#include "koopcast/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "koopcast/koopman.hpp"

namespace koopcast {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct KeyValue {
  std::string value;
  int line = 0;
};

long to_long(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long out = 0;
  try {
    out = std::stol(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size())
    throw std::runtime_error("config: key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size())
    throw std::runtime_error("config: key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace

BenchmarkConfig parse_config_text(const std::string& text) {
  std::map<std::string, KeyValue> kv;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(line_no) +
                               " is not 'key = value': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto [it, inserted] = kv.emplace(key, KeyValue{value, line_no});
    if (!inserted)
      throw std::runtime_error("config: duplicate key '" + key + "' at lines " +
                               std::to_string(it->second.line) + " and " +
                               std::to_string(line_no));
  }

  BenchmarkConfig cfg;
  auto take = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    static thread_local std::string v;
    v = it->second.value;
    kv.erase(it);
    return &v;
  };

  if (const auto* v = take("data")) cfg.data = *v;
  if (const auto* v = take("synth_length")) cfg.synth_length = (std::size_t)to_long("synth_length", *v);
  if (const auto* v = take("synth_channels")) cfg.synth_channels = (std::size_t)to_long("synth_channels", *v);
  if (const auto* v = take("synth_seed")) cfg.synth_seed = (uint64_t)to_long("synth_seed", *v);
  if (const auto* v = take("synth_noise")) cfg.synth_noise = to_double("synth_noise", *v);
  if (const auto* v = take("P")) {
    cfg.input_lens.clear();
    for (const auto& s : split_list(*v)) cfg.input_lens.push_back((std::size_t)to_long("P", s));
  }
  if (const auto* v = take("H")) {
    cfg.horizons.clear();
    for (const auto& s : split_list(*v)) cfg.horizons.push_back((std::size_t)to_long("H", s));
  }
  if (const auto* v = take("variants")) {
    cfg.variants = split_list(*v);
    for (const auto& name : cfg.variants)
      if (name != "dlinear" && name != "ssm") variant_from_name(name);  // validates
  }
  if (const auto* v = take("steps")) cfg.steps = to_long("steps", *v);
  if (const auto* v = take("batch_size")) cfg.batch_size = (std::size_t)to_long("batch_size", *v);
  if (const auto* v = take("lr")) cfg.lr = to_double("lr", *v);
  if (const auto* v = take("lambda_lyap")) cfg.lambda_lyap = to_double("lambda_lyap", *v);
  if (const auto* v = take("rho_max")) cfg.rho_max = to_double("rho_max", *v);
  if (const auto* v = take("rho_min")) cfg.rho_min = to_double("rho_min", *v);
  if (const auto* v = take("d_model")) cfg.d_model = (std::size_t)to_long("d_model", *v);
  if (const auto* v = take("n_patches")) cfg.n_patches = (std::size_t)to_long("n_patches", *v);
  if (const auto* v = take("use_attention")) cfg.use_attention = to_bool("use_attention", *v);
  if (const auto* v = take("rank")) cfg.rank = (std::size_t)to_long("rank", *v);
  if (const auto* v = take("mlp_hidden")) cfg.mlp_hidden = (std::size_t)to_long("mlp_hidden", *v);
  if (const auto* v = take("ssm_hidden")) cfg.ssm_hidden = (std::size_t)to_long("ssm_hidden", *v);
  if (const auto* v = take("ssm_diagonal")) cfg.ssm_diagonal = to_bool("ssm_diagonal", *v);
  if (const auto* v = take("train_ratio")) cfg.train_ratio = to_double("train_ratio", *v);
  if (const auto* v = take("eval_every")) cfg.eval_every = to_long("eval_every", *v);
  if (const auto* v = take("spectral_log_every")) cfg.spectral_log_every = to_long("spectral_log_every", *v);
  if (const auto* v = take("seed")) cfg.seed = (uint64_t)to_long("seed", *v);
  if (const auto* v = take("out_dir")) cfg.out_dir = *v;
  if (const auto* v = take("workers")) cfg.workers = (int)to_long("workers", *v);

  if (!kv.empty()) {
    const auto& [key, rest] = *kv.begin();
    throw std::runtime_error("config: unknown key '" + key + "' at line " +
                             std::to_string(rest.line));
  }

  if (cfg.input_lens.empty() || cfg.horizons.empty() || cfg.variants.empty())
    throw std::runtime_error("config: P, H and variants must be nonempty");
  if (cfg.steps < 1 || cfg.batch_size < 1)
    throw std::runtime_error("config: steps and batch_size must be >= 1");
  if (!(cfg.rho_min >= 0.0 && cfg.rho_min < cfg.rho_max && cfg.rho_max < 1.0))
    throw std::runtime_error("config: require 0 <= rho_min < rho_max < 1");
  return cfg;
}

BenchmarkConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

void apply_worker_env(BenchmarkConfig& cfg) {
  if (const char* env = std::getenv("KOOPCAST_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) cfg.workers = w;
  }
}

}  // namespace koopcast
