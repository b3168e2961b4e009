#include "odm/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace odm {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  if (std::isnan(v)) return "auto";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "auto") return std::numeric_limits<double>::quiet_NaN();
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::string s = v;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(key, tok));
  return out;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field string_field(T RunConfig::*member) {
  return {[member](RunConfig& c, const std::string&, const std::string& v) { c.*member = v; },
          [member](const RunConfig& c) { return c.*member; }};
}

// Keys in manifest order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto dbl = [&](const char* name, auto getter) {
      t.emplace_back(name, Field{[getter](RunConfig& c, const std::string& k, const std::string& v) {
                                   getter(c) = to_double(k, v);
                                 },
                                 [getter](const RunConfig& c) { return fmt(getter(const_cast<RunConfig&>(c))); }});
    };
    auto lng = [&](const char* name, auto getter) {
      t.emplace_back(name, Field{[getter](RunConfig& c, const std::string& k, const std::string& v) {
                                   using T = std::remove_reference_t<decltype(getter(c))>;
                                   getter(c) = to_int<T>(k, v);
                                 },
                                 [getter](const RunConfig& c) {
                                   return std::to_string(getter(const_cast<RunConfig&>(c)));
                                 }});
    };
    auto bln = [&](const char* name, auto getter) {
      t.emplace_back(name, Field{[getter](RunConfig& c, const std::string& k, const std::string& v) {
                                   getter(c) = to_bool(k, v);
                                 },
                                 [getter](const RunConfig& c) {
                                   return std::string(getter(const_cast<RunConfig&>(c)) ? "true" : "false");
                                 }});
    };
    auto lst = [&](const char* name, std::vector<double> RunConfig::*member) {
      t.emplace_back(name, Field{[member](RunConfig& c, const std::string& k, const std::string& v) {
                                   c.*member = to_list(k, v);
                                 },
                                 [member](const RunConfig& c) { return fmt_list(c.*member); }});
    };

    t.emplace_back("task", string_field(&RunConfig::task));
    lng("seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; });
    t.emplace_back("text", string_field(&RunConfig::text));
    lng("text_chars", [](RunConfig& c) -> long& { return c.text_chars; });
    lng("segment_length", [](RunConfig& c) -> long& { return c.segment_length; });
    lng("dim", [](RunConfig& c) -> int& { return c.dim; });
    dbl("noise_sigma", [](RunConfig& c) -> double& { return c.noise_sigma; });
    dbl("prototype_scale", [](RunConfig& c) -> double& { return c.prototype_scale; });
    lst("transition", &RunConfig::transition);
    lst("initial", &RunConfig::initial);
    lst("means", &RunConfig::means);
    lng("num_sequences", [](RunConfig& c) -> long& { return c.num_sequences; });
    lng("sequence_length", [](RunConfig& c) -> long& { return c.sequence_length; });
    t.emplace_back("train_file", string_field(&RunConfig::train_file));
    t.emplace_back("test_file", string_field(&RunConfig::test_file));
    dbl("test_fraction", [](RunConfig& c) -> double& { return c.test_fraction; });
    t.emplace_back("lm", string_field(&RunConfig::lm));
    t.emplace_back("lm_path", string_field(&RunConfig::lm_path));
    lng("order", [](RunConfig& c) -> int& { return c.order; });
    dbl("lm_smoothing", [](RunConfig& c) -> double& { return c.lm_smoothing; });
    t.emplace_back("trainer", string_field(&RunConfig::trainer));
    dbl("mu_theta", [](RunConfig& c) -> double& { return c.train.mu_theta; });
    dbl("mu_v", [](RunConfig& c) -> double& { return c.train.mu_v; });
    lng("batch", [](RunConfig& c) -> int& { return c.train.batch; });
    lng("steps", [](RunConfig& c) -> long& { return c.train.steps; });
    dbl("adam_beta1", [](RunConfig& c) -> double& { return c.train.adam.beta1; });
    dbl("adam_beta2", [](RunConfig& c) -> double& { return c.train.adam.beta2; });
    dbl("adam_epsilon", [](RunConfig& c) -> double& { return c.train.adam.epsilon; });
    dbl("w_init", [](RunConfig& c) -> double& { return c.train.w_init; });
    dbl("gamma", [](RunConfig& c) -> double& { return c.train.gamma; });
    dbl("dual_init_lo", [](RunConfig& c) -> double& { return c.train.dual_init_lo; });
    dbl("dual_init_hi", [](RunConfig& c) -> double& { return c.train.dual_init_hi; });
    dbl("nu_ceiling", [](RunConfig& c) -> double& { return c.train.nu_ceiling; });
    lng("eval_every", [](RunConfig& c) -> long& { return c.train.eval_every; });
    lng("early_stop_patience", [](RunConfig& c) -> int& { return c.train.early_stop_patience; });
    bln("full_batch", [](RunConfig& c) -> bool& { return c.train.full_batch; });
    bln("check_duals", [](RunConfig& c) -> bool& { return c.train.check_duals; });
    lng("supervised_max_steps", [](RunConfig& c) -> long& { return c.supervised.max_steps; });
    dbl("supervised_lr", [](RunConfig& c) -> double& { return c.supervised.lr; });
    dbl("supervised_l2", [](RunConfig& c) -> double& { return c.supervised.l2; });
    dbl("supervised_tolerance", [](RunConfig& c) -> double& { return c.supervised.tolerance; });
    bln("supervised_backtracking", [](RunConfig& c) -> bool& { return c.supervised.backtracking; });
    t.emplace_back("output_dir", string_field(&RunConfig::output_dir));
    return t;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [name, f] : fields())
    if (name == key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  field(key).set(config, key, value);
  if (key == "seed") config.train.seed = config.seed;
  if (key == "gamma") config.supervised.gamma = config.train.gamma;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [name, f] : fields()) keys.push_back(name);
  return keys;
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(config) + "\n";
  return out;
}

RunConfig parse_run_config(std::istream& in, const std::string& source, RunConfig base) {
  RunConfig config = std::move(base);
  config.train.seed = config.seed;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (auto [it, fresh] = seen.emplace(key, lineno); !fresh)
      throw ConfigError(where + "duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")");
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_run_config(in, path.string(), std::move(base));
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (task != "cipher" && task != "markov-gaussian" && task != "file")
    fail("task must be cipher, markov-gaussian or file");
  if (order < 1) fail("order must be >= 1");
  if (!(lm_smoothing >= 0.0)) fail("lm_smoothing must be >= 0");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("test_fraction must be in (0,1)");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (trainer != "spdg" && trainer != "sgd" && trainer != "mode-seeking" && trainer != "supervised" &&
      trainer != "majority")
    fail("trainer must be one of spdg, sgd, mode-seeking, supervised, majority");
  if (lm != "in-domain" && lm != "out-of-domain" && lm != "corpus" && lm != "file")
    fail("lm must be in-domain, out-of-domain, corpus or file");
  if ((lm == "corpus" || lm == "file") && lm_path.empty()) fail("lm = " + lm + " needs lm_path");
  if (!lm_path.empty() && !std::filesystem::exists(lm_path)) fail("lm_path does not exist: " + lm_path);
  if (task == "cipher") {
    if (text != "builtin-a" && text != "builtin-b" && !std::filesystem::exists(text))
      fail("text must be builtin-a, builtin-b or an existing file: " + text);
    if (text_chars < 1 || segment_length < 1) fail("text_chars and segment_length must be positive");
    if (segment_length < order) fail("segment_length must be >= order");
    if (dim < 1) fail("dim must be positive");
  }
  if (task == "markov-gaussian") {
    const auto c = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(transition.size()))));
    if (c == 0 || c * c != transition.size()) fail("transition must hold C*C values");
    if (initial.size() != c) fail("initial must hold C values");
    if (means.empty() || means.size() % c != 0) fail("means must hold C*d values");
    if (num_sequences < 2 || sequence_length < order) fail("need >= 2 sequences of length >= order");
  }
  if (task == "file") {
    if (train_file.empty() || test_file.empty()) fail("task = file needs train_file and test_file");
    for (const auto& p : {train_file, test_file})
      if (!std::filesystem::exists(p)) fail("dataset file does not exist: " + p);
    if (lm == "in-domain") fail("task = file has no train labels; use lm = file or corpus");
  }
  if (lm == "out-of-domain" && task != "cipher") fail("lm = out-of-domain applies to the cipher task");
  try {
    train.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace odm
