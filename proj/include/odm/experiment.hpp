#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "odm/config.hpp"
#include "odm/dataset.hpp"
#include "odm/ngram.hpp"
#include "odm/spdg.hpp"

namespace odm {

/// A train/test pair. `train` carries no labels; `train_labels` is kept aside
/// only for the in-domain prior and the supervised oracle (empty for file tasks).
struct Task {
  Dataset train;
  Dataset test;
  std::vector<IdSequence> train_labels;
};

Task build_task(const RunConfig& config);

/// Text of `chars` symbols over the cipher alphabet: builtin-a / builtin-b are
/// resampled built-in passages, anything else is a file normalized to the alphabet.
IdSequence cipher_text(const std::string& source, long chars, std::uint64_t seed);

/// The prior named by config.lm, built for the task's vocabulary.
NGramModel build_prior(const RunConfig& config, const Task& task);

struct RunOutcome {
  std::string trainer;
  LinearClassifier<double> model;
  std::vector<MetricRow> log;
  double test_error = 0;
  /// J on the train split; NaN when the prior has a different order than the run.
  double train_j = 0;
  long steps = 0;
  bool stopped_early = false;
};

/// Runs config.trainer. The eval hook scores the labeled test split.
RunOutcome run_trainer(const RunConfig& config, const Task& task, const NGramModel& lm);

/// git's blob id: SHA-1 of "blob <size>\0" followed by the bytes.
std::string git_blob_hash(std::string_view bytes);
std::string git_blob_hash_file(const std::filesystem::path& path);

/// The whole `train` pipeline: writes the datasets (generated tasks), prior.lm,
/// model.txt, metrics.csv, report.csv and manifest.txt under config.output_dir.
RunOutcome run_experiment(const RunConfig& config);

/// Dual step size of the cipher presets. At the uniform start the optimal duals
/// are about -C^N, so the rate grows with the order.
double cipher_dual_rate(int order);

/// Hyperparameters of the cipher presets at a given seed and prior order (see README).
RunConfig cipher_preset(std::uint64_t seed, int order = 2);

struct TableRow {
  std::string method;
  std::uint64_t seed = 0;
  int order = 0;
  std::string prior;
  double test_error = 0;
  double train_j = 0;
};

struct Table1Options {
  bool with_large_batch_sgd = true;
  /// Step budget of the SGD baselines (0 = same as SPDG).
  long sgd_steps = 0;
};

/// SPDG, mode-seeking, SGD<10/100/1k>, supervised and majority on one seed.
std::vector<TableRow> cipher_table1(std::uint64_t seed, const Table1Options& options = {});

/// SPDG with 1/2/3-gram priors from in-domain and out-of-domain text on one seed.
std::vector<TableRow> cipher_table2(std::uint64_t seed);

void write_table_csv(const std::vector<TableRow>& rows, const std::filesystem::path& path);

}  // namespace odm
