#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "odm/experiment.hpp"

namespace odm {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// metrics.csv with the last (wall-clock) column removed.
std::string without_wall(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

RunConfig small_cipher(const fs::path& dir) {
  RunConfig c = cipher_preset(3);
  c.text_chars = 3000;
  c.train.steps = 300;
  c.train.eval_every = 100;
  c.output_dir = dir.string();
  return c;
}

TEST(BlobHash, MatchesGit) {
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Task, TrainSplitCarriesNoLabels) {
  RunConfig c = cipher_preset(1);
  c.text_chars = 2000;
  const Task t = build_task(c);
  EXPECT_FALSE(t.train.has_labels());
  EXPECT_TRUE(t.test.has_labels());
  EXPECT_EQ(t.train_labels.size(), t.train.num_sequences());
  EXPECT_EQ(t.train.num_sequences() + t.test.num_sequences(), 20u);
}

TEST(Task, MarkovGaussian) {
  RunConfig c;
  c.task = "markov-gaussian";
  c.num_sequences = 10;
  c.sequence_length = 30;
  const Task t = build_task(c);
  EXPECT_EQ(t.train.dim, 2);
  EXPECT_EQ(t.train.classes(), 2);
  EXPECT_FALSE(t.train.has_labels());
}

TEST(Preset, DualRateGrowsWithOrder) {
  EXPECT_DOUBLE_EQ(cipher_dual_rate(1), 0.3);
  EXPECT_DOUBLE_EQ(cipher_dual_rate(2), 3.0);
  EXPECT_DOUBLE_EQ(cipher_dual_rate(3), 30.0);
  EXPECT_EQ(cipher_preset(2, 3).train.mu_v, 30.0);
  EXPECT_EQ(cipher_preset(2, 3).train.seed, 2u);
}

TEST(Experiment, ManifestReproducesTheRun) {
  const fs::path a = fs::temp_directory_path() / "odm_exp_a", b = fs::temp_directory_path() / "odm_exp_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const RunOutcome first = run_experiment(small_cipher(a));
  for (const char* f : {"train.seqdata", "test.seqdata", "prior.lm", "model.txt", "metrics.csv", "report.csv",
                        "manifest.txt"})
    EXPECT_TRUE(fs::exists(a / f)) << f;

  RunConfig again = load_run_config(a / "manifest.txt");
  again.output_dir = b.string();
  const RunOutcome second = run_experiment(again);
  EXPECT_EQ(second.test_error, first.test_error);
  EXPECT_EQ(second.model.weights(), first.model.weights());
  for (const char* f : {"train.seqdata", "test.seqdata", "prior.lm", "model.txt", "report.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_EQ(without_wall(slurp(a / "metrics.csv")), without_wall(slurp(b / "metrics.csv")));

  const std::string man = slurp(a / "manifest.txt");
  EXPECT_NE(man.find("# output model.txt " + git_blob_hash_file(a / "model.txt")), std::string::npos);
  EXPECT_NE(man.find("# input text "), std::string::npos);
}

TEST(Experiment, SeedChangesTheData) {
  RunConfig c1 = cipher_preset(1), c2 = cipher_preset(2);
  c1.text_chars = c2.text_chars = 2000;
  EXPECT_NE(build_task(c1).train.features, build_task(c2).train.features);
}

TEST(Experiment, MajorityTrainerScoresTheConstantPredictor) {
  RunConfig c = small_cipher(fs::temp_directory_path() / "odm_exp_majority");
  c.trainer = "majority";
  const Task task = build_task(c);
  const NGramModel lm = build_prior(c, task);
  const RunOutcome r = run_trainer(c, task, lm);
  EXPECT_EQ(r.test_error, majority_baseline(lm, *task.test.labels).error);
  EXPECT_EQ(predict_all(r.model, task.test)[0][0], majority_class(lm));
}

}  // namespace
}  // namespace odm
