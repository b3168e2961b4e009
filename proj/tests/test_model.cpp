#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "odm/builtin_text.hpp"
#include "odm/model.hpp"
#include "odm/spdg.hpp"
#include "odm/synthdata.hpp"
#include "test_util.hpp"

namespace odm {
namespace {

using testing::random_model;

Eigen::VectorXd random_input(int d, double scale, Rng& rng) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::VectorXd x(d);
  for (Eigen::Index i = 0; i < d; ++i) x(i) = n(rng);
  return x;
}

TEST(Posterior, EqualLogitsAreUniform) {
  const auto zero = LinearClassifier<double>(Eigen::MatrixXd::Zero(4, 3), 10.0);
  const auto flat = LinearClassifier<double>::constant(4, 3, 1.0 / 3, 10.0);
  const Eigen::Vector3d x(0.3, -2, 5);
  for (const auto& m : {zero, flat}) {
    const Eigen::VectorXd p = posterior(m, x);
    for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(p(i), 0.25, 1e-15);
  }
}

TEST(Posterior, ClosedFormTwoClass) {
  Eigen::MatrixXd w(2, 1);
  w << 1, 0;
  const Eigen::VectorXd p = posterior(LinearClassifier<double>(w, 1.0), Eigen::VectorXd::Constant(1, std::log(3.0)));
  EXPECT_NEAR(p(0), 0.75, 1e-15);
  EXPECT_NEAR(p(1), 0.25, 1e-15);
}

TEST(Posterior, NormalizedAndStableOnRandomInputs) {
  Rng rng = make_rng(1, "test.model");
  for (int i = 0; i < 10000; ++i) {
    const auto m = random_model(5, 4, 3.0, 10.0, rng);
    const Eigen::VectorXd p = posterior(m, random_input(4, i % 2 ? 1.0 : 50.0, rng));
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_TRUE((p.array() >= 0.0).all() && (p.array() <= 1.0).all());
  }
}

TEST(Posterior, ShiftAndTemperatureInvariance) {
  Rng rng = make_rng(2, "test.model");
  for (int i = 0; i < 100; ++i) {
    const auto m = random_model(4, 6, 1.0, 10.0, rng);
    const Eigen::VectorXd x = random_input(6, 1.0, rng);
    const Eigen::RowVectorXd shift = random_input(6, 2.0, rng).transpose();
    const LinearClassifier<double> shifted(m.weights().rowwise() + shift, 10.0);
    const LinearClassifier<double> hotter(m.weights() / 2, 20.0);
    EXPECT_LT((posterior(m, x) - posterior(shifted, x)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((posterior(m, x) - posterior(hotter, x)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Posterior, NonFiniteInputIsAnError) {
  const auto m = LinearClassifier<double>::constant(2, 2, 0.5, 10.0);
  EXPECT_THROW(posterior(m, Eigen::Vector2d(std::nan(""), 0)), Error);
  EXPECT_THROW(posterior(m, Eigen::Vector2d(INFINITY, 0)), Error);
  EXPECT_THROW(posterior(m, Eigen::Vector3d(1, 1, 1)), Error);
  EXPECT_THROW(LinearClassifier<double>(Eigen::MatrixXd::Zero(2, 2), 0.0), Error);
}

TEST(Jacobian, UniformTwoClassClosedForm) {
  const auto m = LinearClassifier<double>(Eigen::MatrixXd::Zero(2, 3), 10.0);
  const Eigen::Vector3d x(1, -2, 0.5);
  const auto jac = posterior_jacobian(m, x);
  EXPECT_LT((jac[0].row(0).transpose() - 10.0 / 4 * x).norm(), 1e-15);
  EXPECT_LT((jac[0].row(1).transpose() + 10.0 / 4 * x).norm(), 1e-15);
}

TEST(Jacobian, ColumnsSumToZero) {
  Rng rng = make_rng(3, "test.model");
  const auto m = random_model(5, 3, 1.0, 10.0, rng);
  const auto jac = posterior_jacobian(m, random_input(3, 1.0, rng));
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(5, 3);
  for (const auto& j : jac) sum += j;
  EXPECT_LT(sum.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  Rng rng = make_rng(4, "test.model");
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 2 + trial % 4, d = 1 + trial % 5;
    const auto m = random_model(c, d, 0.3, 2.0, rng);
    const Eigen::VectorXd x = random_input(d, 1.0, rng);
    const auto jac = posterior_jacobian(m, x);
    for (int i = 0; i < c; ++i) {
      const auto numeric = testing::numeric_gradient(
          [&](const Eigen::MatrixXd& w) { return posterior(LinearClassifier<double>(w, m.gamma()), x)(i); }, m.weights(),
          1e-5);
      EXPECT_LT(testing::relative_error(jac[static_cast<std::size_t>(i)], numeric), 1e-6);
    }
  }
}

TEST(Predict, TiesGoToTheSmallestId) {
  const auto m = LinearClassifier<double>(Eigen::MatrixXd::Zero(3, 2), 10.0);
  EXPECT_EQ(predict(m, Eigen::Vector2d(1, 2)), 0);
}

TEST(Predict, IsArgmaxAndScaleInvariant) {
  Rng rng = make_rng(5, "test.model");
  for (int i = 0; i < 200; ++i) {
    const auto m = random_model(6, 3, 1.0, 10.0, rng);
    const Eigen::VectorXd x = random_input(3, 1.0, rng);
    Eigen::Index best = 0;
    posterior(m, x).maxCoeff(&best);
    EXPECT_EQ(predict(m, x), best);
    EXPECT_EQ(predict(LinearClassifier<double>(m.weights() * 7.5, 1.0), x), best);
  }
}

// Supervised weights on separable cipher data agree with nearest-prototype decoding.
TEST(Predict, SupervisedMatchesNearestPrototype) {
  const Vocabulary v = cipher_vocab();
  const auto text = chop(builtin_text(builtin_passage_a(), 6000, 2), 100);
  const Dataset data = gen_cipher_dataset(text, v, 29, 0.1, 2);
  const Eigen::MatrixXd means = cipher_prototypes(29, 29, 1.0, 2);
  const auto fit = supervised_train(data, SupervisedConfig{});
  std::size_t agree = 0, total = 0;
  for (const auto& f : data.features)
    for (Eigen::Index t = 0; t < f.cols(); ++t, ++total) {
      Eigen::Index nearest = 0;
      (means.colwise() - f.col(t)).colwise().squaredNorm().minCoeff(&nearest);
      agree += predict(fit.model, f.col(t)) == nearest;
    }
  EXPECT_GE(static_cast<double>(agree) / static_cast<double>(total), 0.995);
}

TEST(EvalError, ConstantPredictorOnOcrMarginal) {
  // 153,221 positions, the most frequent class occurring 25,499 times.
  IdSequence labels(153221, 1);
  std::fill(labels.begin(), labels.begin() + 25499, 0);
  EXPECT_NEAR(constant_predictor_error(0, {labels}), 1.0 - 25499.0 / 153221.0, 1e-15);
  // The published 83.37% is 1.2e-4 above the ratio it quotes.
  EXPECT_NEAR(1.0 - 25499.0 / 153221.0, 0.83358, 5e-6);
}

TEST(EvalError, PerfectAndConstant) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(3, 3);
  Dataset d;
  d.vocab = numeric_vocab(3);
  d.dim = 3;
  d.features.push_back(Eigen::MatrixXd::Identity(3, 3));
  d.labels = std::vector<IdSequence>{{0, 1, 2}};
  EXPECT_EQ(eval_error(LinearClassifier<double>(w, 10.0), d), 0.0);
  EXPECT_NEAR(eval_error(LinearClassifier<double>(Eigen::MatrixXd::Zero(3, 3), 10.0), d), 2.0 / 3, 1e-15);
  EXPECT_THROW(eval_error(LinearClassifier<double>(w, 10.0), d.without_labels()), Error);
}

TEST(EvalError, ConstantPredictorOnCoinFlips) {
  Rng rng = make_rng(6, "test.model");
  const Dataset d = testing::random_dataset(2, 1, {20000}, rng);
  const double e = eval_error(LinearClassifier<double>(Eigen::MatrixXd::Zero(2, 1), 10.0), d);
  EXPECT_NEAR(e, 0.5, 3 * std::sqrt(0.25 / 20000));
}

TEST(ModelFile, RoundTripIsExact) {
  Rng rng = make_rng(7, "test.model");
  const auto m = random_model(4, 3, 1.0, 10.0, rng);
  const auto path = std::filesystem::temp_directory_path() / "odm_model_roundtrip.txt";
  save_model(m, path);
  const auto back = load_model(path);
  EXPECT_EQ(back.weights(), m.weights());
  EXPECT_EQ(back.gamma(), m.gamma());
}

TEST(ModelFile, MalformedFilesNameTheLine) {
  const auto path = std::filesystem::temp_directory_path() / "odm_model_bad.txt";
  std::ofstream(path) << "linmodel 2 2 10\n1,2\n3,x\n";
  try {
    load_model(path);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  std::ofstream(path) << "model 2 2 10\n";
  EXPECT_THROW(load_model(path), IoError);
}

}  // namespace
}  // namespace odm
