#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "odm/spdg.hpp"

namespace odm {

/// Everything one `train` run needs. Read from a flat `key = value` file;
/// `#` starts a comment, blank lines are ignored, unknown keys are errors.
struct RunConfig {
  /// cipher | markov-gaussian | file
  std::string task = "cipher";
  std::uint64_t seed = 1;

  // cipher: English-like text enciphered as permuted one-hot prototypes plus noise.
  /// builtin-a, builtin-b, or the path of a UTF-8 text file.
  std::string text = "builtin-a";
  long text_chars = 65000;
  long segment_length = 100;
  int dim = 29;
  double noise_sigma = 0.1;
  double prototype_scale = 1.0;

  // markov-gaussian: row-major C x C transition table, initial law, one mean per class.
  std::vector<double> transition{0.9, 0.1, 0.2, 0.8};
  std::vector<double> initial{0.5, 0.5};
  /// Row-major C x d (one row per class).
  std::vector<double> means{1.0, 0.0, 0.0, 1.0};
  long num_sequences = 100;
  long sequence_length = 100;

  // file: pre-generated datasets (train may be labeled; its labels are never read).
  std::string train_file;
  std::string test_file;

  double test_fraction = 15000.0 / 65000.0;

  /// in-domain (train labels before they are dropped), out-of-domain (builtin-b text),
  /// corpus (estimate from lm_path text), or file (load lm_path).
  std::string lm = "in-domain";
  std::string lm_path;
  int order = 2;
  double lm_smoothing = 0.0;

  /// spdg | sgd | mode-seeking | supervised | majority
  std::string trainer = "spdg";
  TrainConfig train;
  SupervisedConfig supervised;

  std::string output_dir = "run";

  /// Throws ConfigError on inconsistent values and missing referenced files.
  void validate() const;
};

/// Parses `key = value` lines on top of `base`.
RunConfig parse_run_config(std::istream& in, const std::string& source, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Applies one `key=value` override.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Every key in a fixed order, formatted so that parsing the text gives back the same config.
std::string format_run_config(const RunConfig& config);

/// All recognized keys.
std::vector<std::string> config_keys();

}  // namespace odm
