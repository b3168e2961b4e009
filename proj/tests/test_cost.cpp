#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "odm/cost.hpp"
#include "test_util.hpp"

namespace odm {
namespace {

using testing::random_dataset;
using testing::random_model;
using testing::random_ngram;
using testing::uniform_ngram;

double entropy_of(const NGramModel& lm) {
  double h = 0;
  for (double p : lm.support_probs()) h -= p * std::log(p);
  return h;
}

// Dense p̄ by brute force over windows, written independently of the library's
// incremental tensor product.
std::vector<double> dense_pbar(const LinearClassifier<double>& m, const Dataset& d, int order) {
  const TupleSpace space(m.classes(), order);
  std::vector<double> out(static_cast<std::size_t>(space.size()), 0.0);
  double windows = 0;
  for (const auto& f : d.features) {
    const Eigen::MatrixXd post = posteriors(m, f);
    for (Eigen::Index t = order - 1; t < f.cols(); ++t, ++windows)
      for (TupleIndex i = 0; i < space.size(); ++i) {
        const auto tuple = space.decode(i);
        double p = 1;
        for (int k = 0; k < order; ++k) p *= post(tuple[static_cast<std::size_t>(k)], t - order + 1 + k);
        out[static_cast<std::size_t>(i)] += p;
      }
  }
  for (auto& v : out) v /= windows;
  return out;
}

/// Model whose posterior at the constant input x = (1) is `p` (gamma = 1).
LinearClassifier<double> model_with_posterior(const Eigen::VectorXd& p) {
  return LinearClassifier<double>(p.array().log().matrix(), 1.0);
}

Dataset constant_input_dataset(int classes, std::vector<int> lengths) {
  Dataset d;
  d.vocab = numeric_vocab(classes);
  d.dim = 1;
  for (int len : lengths) d.features.push_back(Eigen::MatrixXd::Ones(1, len));
  return d;
}

TEST(Frequency, UniformClassifierGivesUniformTable) {
  Rng rng = make_rng(1, "test.cost");
  const Dataset d = random_dataset(3, 4, {5, 7}, rng);
  const auto m = LinearClassifier<double>::constant(3, 4, 0.25, 10.0);
  const auto f = expected_ngram_freq(m, d, 2);
  EXPECT_EQ(f.windows, 10);
  for (double v : f.table) EXPECT_NEAR(v, 1.0 / 9, 1e-15);
}

TEST(Frequency, SumsToOneAndMatchesBruteForce) {
  Rng rng = make_rng(2, "test.cost");
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 2 + trial % 3, n = 1 + trial % 3, dim = 1 + trial % 4;
    const Dataset d = random_dataset(c, dim, {3 + trial % 5, 6, 2}, rng);
    const auto m = random_model(c, dim, 2.0, 10.0, rng);
    const auto f = expected_ngram_freq(m, d, n);
    double sum = 0;
    for (double v : f.table) {
      sum += v;
      EXPECT_GT(v, 0.0);
    }
    EXPECT_NEAR(sum, 1.0, 1e-10);
    const auto oracle = dense_pbar(m, d, n);
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(f.table[i], oracle[i], 1e-14);
  }
}

TEST(Frequency, NoWindowsIsAnError) {
  Rng rng = make_rng(3, "test.cost");
  const Dataset d = random_dataset(2, 2, {1, 1}, rng);
  EXPECT_THROW(expected_ngram_freq(random_model(2, 2, 1.0, 10.0, rng), d, 2), Error);
}

// Sampling output sequences from the posterior and counting window N-grams
// reproduces p̄ within three standard errors.
TEST(Frequency, MonteCarloCountsAgree) {
  Rng rng = make_rng(4, "test.cost");
  const int c = 3, n = 2;
  const Dataset d = random_dataset(c, 2, {5, 4}, rng);
  const auto m = random_model(c, 2, 0.5, 2.0, rng);
  const auto f = expected_ngram_freq(m, d, n);
  std::vector<Eigen::MatrixXd> post;
  for (const auto& x : d.features) post.push_back(posteriors(m, x));

  const int samples = 100000;
  const auto cells = f.table.size();
  std::vector<double> mean(cells, 0), sq(cells, 0), counts(cells);
  for (int s = 0; s < samples; ++s) {
    std::fill(counts.begin(), counts.end(), 0.0);
    for (const auto& p : post) {
      IdSequence y(static_cast<std::size_t>(p.cols()));
      for (Eigen::Index t = 0; t < p.cols(); ++t) {
        std::discrete_distribution<ClassId> draw(p.col(t).data(), p.col(t).data() + c);
        y[static_cast<std::size_t>(t)] = draw(rng);
      }
      for (std::size_t t = 1; t < y.size(); ++t) counts[static_cast<std::size_t>(y[t - 1] * c + y[t])] += 1.0;
    }
    for (std::size_t i = 0; i < cells; ++i) {
      const double freq = counts[i] / static_cast<double>(f.windows);
      mean[i] += freq;
      sq[i] += freq * freq;
    }
  }
  for (std::size_t i = 0; i < cells; ++i) {
    const double mu = mean[i] / samples;
    const double sd = std::sqrt(std::max(sq[i] / samples - mu * mu, 0.0));
    EXPECT_NEAR(mu, f.table[i], 3 * sd / std::sqrt(double(samples)) + 1e-12) << "tuple " << i;
  }
}

TEST(Frequency, CsvHasOneRowPerTuple) {
  const auto m = LinearClassifier<double>::constant(2, 1, 1.0, 10.0);
  const auto f = expected_ngram_freq(m, constant_input_dataset(2, {3}), 2);
  const auto path = std::filesystem::temp_directory_path() / "odm_freq.csv";
  write_frequency_csv(f, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "i_1,i_2,value");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0,0.25");
}

TEST(OdmCost, UniformClassifierGivesNLnC) {
  Rng rng = make_rng(5, "test.cost");
  for (int n = 1; n <= 3; ++n) {
    const Dataset d = random_dataset(4, 3, {6, 6}, rng);
    const auto m = LinearClassifier<double>(Eigen::MatrixXd::Zero(4, 3), 10.0);
    EXPECT_NEAR(empirical_odm_cost(m, d, random_ngram(4, n, 0.5, rng)), n * std::log(4.0), 1e-12);
  }
}

// J = H(p_LM) + KL(p_LM || p̄), with KL recomputed on the dense table.
TEST(OdmCost, EntropyPlusKl) {
  Rng rng = make_rng(6, "test.cost");
  for (int trial = 0; trial < 30; ++trial) {
    const int c = 2 + trial % 3, n = 1 + trial % 2;
    const Dataset d = random_dataset(c, 3, {8, 5}, rng);
    const auto m = random_model(c, 3, 1.0, 5.0, rng);
    const NGramModel lm = random_ngram(c, n, 0.6, rng);
    const auto pbar = dense_pbar(m, d, n);
    double kl = 0;
    for (std::size_t s = 0; s < lm.support_size(); ++s) {
      const double p = lm.support_probs()[s];
      kl += p * std::log(p / pbar[static_cast<std::size_t>(lm.support()[s])]);
    }
    const double j = empirical_odm_cost(m, d, lm);
    EXPECT_NEAR(j, entropy_of(lm) + kl, 1e-10);
    EXPECT_GE(j, entropy_of(lm) - 1e-12);
    EXPECT_NEAR(j, empirical_odm_cost(expected_ngram_freq(m, d, n), lm), 1e-12);
  }
}

TEST(OdmCost, GibbsEqualityWhenTablesMatch) {
  Eigen::VectorXd p(3);
  p << 0.2, 0.3, 0.5;
  const NGramModel lm(numeric_vocab(3), 1, {{0, 0.2}, {1, 0.3}, {2, 0.5}});
  const double j = empirical_odm_cost(model_with_posterior(p), constant_input_dataset(3, {4}), lm);
  EXPECT_NEAR(j, entropy_of(lm), 1e-8);
}

TEST(OdmCost, OrderMismatchIsAnError) {
  const auto m = LinearClassifier<double>::constant(2, 1, 1.0, 10.0);
  const auto f = expected_ngram_freq(m, constant_input_dataset(2, {3}), 2);
  EXPECT_THROW(empirical_odm_cost(f, uniform_ngram(2, 1)), Error);
}

TEST(OdmGradient, ZeroAtTheUniformMatch) {
  Rng rng = make_rng(7, "test.cost");
  const Dataset d = random_dataset(3, 4, {10, 10}, rng);
  const auto g = odm_full_gradient(LinearClassifier<double>(Eigen::MatrixXd::Zero(3, 4), 10.0), d, uniform_ngram(3, 2));
  EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(OdmGradient, MatchesFiniteDifferences) {
  Rng rng = make_rng(8, "test.cost");
  for (int trial = 0; trial < 20; ++trial) {
    const int c = 2 + trial % 3, n = 1 + trial % 3, dim = 2 + trial % 3;
    const Dataset d = random_dataset(c, dim, {4, 6, 3}, rng);
    const auto m = random_model(c, dim, 0.5, trial % 4 ? 2.0 : 10.0, rng);
    const NGramModel lm = random_ngram(c, n, 0.7, rng);
    const auto numeric = testing::numeric_gradient(
        [&](const Eigen::MatrixXd& w) { return empirical_odm_cost(LinearClassifier<double>(w, m.gamma()), d, lm); },
        m.weights(), 1e-5);
    EXPECT_LT(testing::relative_error(odm_full_gradient(m, d, lm), numeric), 1e-4) << "trial " << trial;
  }
}

TEST(OdmGradient, InvariantToSequenceOrder) {
  Rng rng = make_rng(9, "test.cost");
  const Dataset d = random_dataset(3, 2, {5, 7, 4, 6}, rng);
  Dataset r = d;
  std::reverse(r.features.begin(), r.features.end());
  const auto m = random_model(3, 2, 1.0, 10.0, rng);
  const NGramModel lm = random_ngram(3, 2, 0.8, rng);
  EXPECT_LT(testing::relative_error(odm_full_gradient(m, d, lm), odm_full_gradient(m, r, lm)), 1e-12);
}

TEST(ModeSeeking, UniformConditionalsGiveLnC) {
  Rng rng = make_rng(10, "test.cost");
  const Dataset d = random_dataset(3, 2, {6, 5}, rng);
  const auto cost = mode_seeking_cost(random_model(3, 2, 1.0, 10.0, rng), d, uniform_ngram(3, 2));
  EXPECT_NEAR(cost.value, std::log(3.0), 1e-12);
  EXPECT_EQ(cost.skipped_mass, 0.0);
}

TEST(ModeSeeking, UniformClassifierOnTwoSymbolPrior) {
  const NGramModel lm(numeric_vocab(2), 2, {{0, 0.4}, {1, 0.1}, {2, 0.2}, {3, 0.3}});
  // p(0|0) = 0.8, p(1|0) = 0.2, p(0|1) = 0.4, p(1|1) = 0.6
  const double expected = -0.25 * (std::log(0.8) + std::log(0.2) + std::log(0.4) + std::log(0.6));
  const auto m = LinearClassifier<double>(Eigen::MatrixXd::Zero(2, 1), 10.0);
  EXPECT_NEAR(mode_seeking_cost(m, constant_input_dataset(2, {5}), lm).value, expected, 1e-14);
}

TEST(ModeSeeking, UnseenContextsAreSkippedAndReported) {
  // Context 1 never occurs: tuples (1,*) are skipped.
  const NGramModel lm(numeric_vocab(2), 2, {{0, 0.7}, {1, 0.3}});
  Eigen::VectorXd p(2);
  p << 0.6, 0.4;
  const auto m = model_with_posterior(p);
  const auto cost = mode_seeking_cost(m, constant_input_dataset(2, {3}), lm);
  EXPECT_NEAR(cost.skipped_mass, 0.4, 1e-14);
  EXPECT_NEAR(cost.value, -(0.36 * std::log(0.7) + 0.24 * std::log(0.3)), 1e-14);
}

TEST(BruteForceOracle, SingleSequenceOfFour) {
  Rng rng = make_rng(11, "test.cost");
  const Dataset d = random_dataset(2, 2, {4}, rng);
  const auto m = random_model(2, 2, 0.7, 3.0, rng);
  const NGramModel lm = random_ngram(2, 2, 1.0, rng);
  EXPECT_NEAR(nll_bruteforce_oracle(m, d, lm), 3 * mode_seeking_cost(m, d, lm).value, 1e-9);
}

TEST(BruteForceOracle, MatchesWindowsTimesModeSeekingCost) {
  Rng rng = make_rng(12, "test.cost");
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> len(2, 6);
    const Dataset d = random_dataset(2, 3, {len(rng), len(rng), len(rng)}, rng);
    const auto m = random_model(2, 3, 1.0, 3.0, rng);
    const NGramModel lm = random_ngram(2, 2, 1.0, rng);
    const double t = static_cast<double>(d.window_count(2));
    EXPECT_NEAR(nll_bruteforce_oracle(m, d, lm), t * mode_seeking_cost(m, d, lm).value, 1e-9);
  }
}

TEST(BruteForceOracle, OneHotPosteriorDecodesOneSequence) {
  // gamma large enough that every posterior is 1 to double precision.
  Eigen::MatrixXd w(2, 1);
  w << 1, -1;
  Dataset d = constant_input_dataset(2, {4});
  d.features[0] << 1, -1, -1, 1;  // decodes to 0 1 1 0
  const NGramModel lm(numeric_vocab(2), 2, {{0, 0.4}, {1, 0.1}, {2, 0.2}, {3, 0.3}});
  const double expected = -(std::log(0.2) + std::log(0.6) + std::log(0.4));
  EXPECT_NEAR(nll_bruteforce_oracle(LinearClassifier<double>(w, 1000.0), d, lm), expected, 1e-12);
}

TEST(BruteForceOracle, UniformPriorGivesWindowsLnC) {
  Rng rng = make_rng(13, "test.cost");
  const Dataset d = random_dataset(3, 2, {4, 5}, rng);
  EXPECT_NEAR(nll_bruteforce_oracle(random_model(3, 2, 1.0, 10.0, rng), d, uniform_ngram(3, 2)), 7 * std::log(3.0),
              1e-10);
}

TEST(BruteForceOracle, EnumerationBound) {
  Rng rng = make_rng(14, "test.cost");
  const Dataset d = random_dataset(2, 1, {30}, rng);
  EXPECT_THROW(nll_bruteforce_oracle(random_model(2, 1, 1.0, 10.0, rng), d, uniform_ngram(2, 2)), Error);
}

TEST(MarginalCheck, TwoFeatureValues) {
  Rng rng = make_rng(15, "test.cost");
  Dataset d;
  d.vocab = numeric_vocab(3);
  d.dim = 2;
  const Eigen::Vector2d a(0.3, -1), b(1.5, 0.2);
  std::bernoulli_distribution coin(0.5);
  Eigen::MatrixXd f(2, 11);  // 10 windows at N = 2
  for (Eigen::Index t = 0; t < 11; ++t) f.col(t) = coin(rng) ? a : b;
  d.features.push_back(f);
  const auto m = random_model(3, 2, 1.0, 3.0, rng);
  const auto report = empirical_marginal_check(m, d, 2);
  EXPECT_TRUE(report.holds) << report.max_abs_diff;
  EXPECT_EQ(report.distinct_inputs, 2u);

  Dataset shuffled = d;
  shuffled.features = {f.rightCols(6), f.leftCols(5)};
  EXPECT_TRUE(empirical_marginal_check(m, shuffled, 2).holds);
}

TEST(MarginalCheck, SingleRepeatedInputIsAProduct) {
  Rng rng = make_rng(16, "test.cost");
  Dataset d = constant_input_dataset(3, {6});
  const auto m = random_model(3, 1, 1.0, 3.0, rng);
  const auto report = empirical_marginal_check(m, d, 2);
  EXPECT_TRUE(report.holds);
  EXPECT_EQ(report.distinct_input_tuples, 1u);
  const Eigen::VectorXd p = posterior(m, Eigen::VectorXd::Ones(1));
  const auto f = expected_ngram_freq(m, d, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(f.table[static_cast<std::size_t>(i * 3 + j)], p(i) * p(j), 1e-15);
}

// Driving one side of a tuple's probability to zero blows up one cost and not the other.
TEST(Asymmetry, CoverageVersusMode) {
  const double q = 0.3;
  Eigen::VectorXd pq(2);
  pq << 1 - q, q;
  const auto fixed_model = model_with_posterior(pq);
  const Dataset d = constant_input_dataset(2, {5});
  double last_mode = 0, last_cov = INFINITY;
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    const NGramModel lm(numeric_vocab(2), 1, {{0, 1 - eps}, {1, eps}});
    const double mode = mode_seeking_cost(fixed_model, d, lm).value;
    const double cov_term = -eps * std::log(q);
    EXPECT_NEAR(mode, -(1 - q) * std::log(1 - eps) - q * std::log(eps), 1e-12);
    EXPECT_NEAR(empirical_odm_cost(fixed_model, d, lm), -(1 - eps) * std::log(1 - q) + cov_term, 1e-12);
    EXPECT_GT(mode, last_mode);
    EXPECT_LT(cov_term, last_cov);
    last_mode = mode;
    last_cov = cov_term;
  }

  const NGramModel half(numeric_vocab(2), 1, {{0, 0.5}, {1, 0.5}});
  double last_j = 0, last_mode_term = INFINITY;
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    Eigen::VectorXd pe(2);
    pe << 1 - eps, eps;
    const auto m = model_with_posterior(pe);
    const double j = empirical_odm_cost(m, d, half);
    const double mode_term = -eps * std::log(0.5);
    EXPECT_NEAR(mode_seeking_cost(m, d, half).value, std::log(2.0), 1e-12);
    EXPECT_GT(j, last_j);
    EXPECT_LT(mode_term, last_mode_term);
    last_j = j;
    last_mode_term = mode_term;
  }
  EXPECT_GT(last_j, 0.5 * -std::log(1e-6) - 1e-9);
}

// Expectation over single-window draws, computed by enumerating every window.
TEST(Bias, FullySampledEstimatorIsBiased) {
  Rng rng = make_rng(17, "test.cost");
  const Dataset d = random_dataset(3, 3, {4, 5}, rng);
  const auto m = random_model(3, 3, 0.8, 3.0, rng);
  const NGramModel lm = random_ngram(3, 2, 0.8, rng);
  const TupleTable table = support_table(lm);
  const auto windows = enumerate_windows(d, 2);
  const Eigen::VectorXd den = support_frequency(m, d, lm);
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(3, 3), half = Eigen::MatrixXd::Zero(3, 3);
  for (const auto& w : windows) {
    const std::span<const Window> one(&w, 1);
    full += odm_gradient_estimate<double>(m, d, table, one, nullptr);
    half += odm_gradient_estimate<double>(m, d, table, one, &den);
  }
  full /= static_cast<double>(windows.size());
  half /= static_cast<double>(windows.size());
  const Eigen::MatrixXd truth = odm_full_gradient(m, d, lm);
  EXPECT_GT(testing::relative_error(full, truth), 0.1);
  EXPECT_LT(testing::relative_error(half, truth), 1e-10);
}

}  // namespace
}  // namespace odm
