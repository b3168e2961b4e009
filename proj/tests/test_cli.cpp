#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "odm/dataset.hpp"
#include "odm/spdg.hpp"

namespace odm {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(ODM_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "odm_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "small.cfg") << "# tiny cipher run\n"
                                         "text_chars = 3000\n"
                                         "mu_theta = 1e-4\n"
                                         "mu_v = 3\n"
                                         "batch = 16\n"
                                         "steps = 200\n"
                                         "eval_every = 100\n"
                                      << "output_dir = " << (dir_ / "run").string() << "\n";
  }
  static fs::path dir_;
  std::string cfg() const { return (dir_ / "small.cfg").string(); }
};
fs::path Cli::dir_;

TEST_F(Cli, EstimateLm) {
  std::ofstream(dir_ / "corpus.txt") << "the cat sat on the mat. the dog, too.\n";
  const auto r = run("estimate-lm --corpus " + (dir_ / "corpus.txt").string() + " -N 2 --alphabet cipher -o " +
                     (dir_ / "corpus.lm").string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "corpus.lm"));
  EXPECT_NE(r.out.find("N=2 C=29"), std::string::npos) << r.out;
}

TEST_F(Cli, GenTrainEval) {
  const auto gen = run("gen-data -c " + cfg() + " -o " + (dir_ / "data").string());
  ASSERT_EQ(gen.code, 0) << gen.out;
  EXPECT_FALSE(load_dataset(dir_ / "data" / "train.seqdata").has_labels());
  EXPECT_TRUE(load_dataset(dir_ / "data" / "test.seqdata").has_labels());

  const auto train = run("train -c " + cfg());
  ASSERT_EQ(train.code, 0) << train.out;
  for (const char* f : {"model.txt", "metrics.csv", "report.csv", "manifest.txt"})
    EXPECT_TRUE(fs::exists(dir_ / "run" / f)) << f;

  const auto eval = run("eval -m " + (dir_ / "run" / "model.txt").string() + " -d " +
                        (dir_ / "run" / "test.seqdata").string());
  EXPECT_EQ(eval.code, 0) << eval.out;
  EXPECT_NE(eval.out.find("predictor,error"), std::string::npos);

  // The manifest is itself a config: training from it again gives the same model file.
  const auto again = run("train -c " + (dir_ / "run" / "manifest.txt").string() +
                         " --set output_dir=" + (dir_ / "run2").string());
  ASSERT_EQ(again.code, 0) << again.out;
  std::ifstream a(dir_ / "run" / "model.txt"), b(dir_ / "run2" / "model.txt");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
}

TEST_F(Cli, MajorityIsOneMinusTopFrequency) {
  ASSERT_EQ(run("gen-data -c " + cfg() + " -o " + (dir_ / "maj").string()).code, 0);
  const fs::path test = dir_ / "maj" / "test.seqdata";
  const auto r = run("eval --majority -d " + test.string() + " -o " + (dir_ / "maj.csv").string());
  ASSERT_EQ(r.code, 0) << r.out;

  const Dataset d = load_dataset(test);
  std::vector<double> count(static_cast<std::size_t>(d.classes()), 0.0);
  double total = 0;
  for (const auto& s : *d.labels)
    for (ClassId c : s) count[static_cast<std::size_t>(c)] += 1, total += 1;
  const double expected = 1.0 - *std::max_element(count.begin(), count.end()) / total;

  std::ifstream in(dir_ / "maj.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_NEAR(std::stod(row.substr(row.rfind(',') + 1)), expected, 1e-15);
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  std::ofstream(dir_ / "bad.cfg") << "order = 2\nnot_a_key = 1\n";
  const auto r = run("train -c " + (dir_ / "bad.cfg").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("bad.cfg:2:"), std::string::npos) << r.out;
  EXPECT_EQ(run("train -c " + cfg() + " --set bogus=1").code, 2);
  EXPECT_EQ(run("train -c " + cfg() + " --set order=0").code, 2);
  EXPECT_EQ(run("train --no-such-flag").code, 2);
  EXPECT_EQ(run("reproduce -p nothing -o " + (dir_ / "rep").string()).code, 2);
}

TEST_F(Cli, DivergenceExitsThree) {
  const auto r = run("train -c " + cfg() + " --set mu_theta=1e308 --set output_dir=" + (dir_ / "div").string());
  EXPECT_EQ(r.code, 3) << r.out;
}

TEST_F(Cli, MissingFilesExitFour) {
  EXPECT_EQ(run("train -c " + (dir_ / "absent.cfg").string()).code, 4);
  EXPECT_EQ(run("eval --majority -d " + (dir_ / "absent.seqdata").string()).code, 4);
  EXPECT_EQ(run("estimate-lm --corpus " + (dir_ / "absent.txt").string() + " -o x.lm").code, 4);
}

}  // namespace
}  // namespace odm
