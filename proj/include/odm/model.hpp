#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "odm/dataset.hpp"

namespace odm {

/// Softmax classifier p(y = i | x) = exp(gamma w_i.x) / sum_j exp(gamma w_j.x).
///
/// W is C x d with one row per class. There is no bias term; append a
/// constant feature if one is needed. gamma is a fixed inverse temperature.
template <typename Scalar>
class LinearClassifier {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  LinearClassifier() = default;
  LinearClassifier(Matrix weights, Scalar gamma) : weights_(std::move(weights)), gamma_(gamma) {
    if (!(gamma_ > Scalar(0)) || !std::isfinite(static_cast<double>(gamma_)))
      throw Error("gamma must be positive and finite");
    if (weights_.rows() < 1 || weights_.cols() < 1) throw Error("weight matrix must be non-empty");
  }

  /// Every weight set to `value` (1/d is the usual choice), giving a uniform posterior.
  static LinearClassifier constant(int classes, int dim, Scalar value, Scalar gamma) {
    return LinearClassifier(Matrix::Constant(classes, dim, value), gamma);
  }

  int classes() const { return static_cast<int>(weights_.rows()); }
  int dim() const { return static_cast<int>(weights_.cols()); }
  Scalar gamma() const { return gamma_; }
  const Matrix& weights() const { return weights_; }
  Matrix& weights() { return weights_; }

  template <typename Other>
  LinearClassifier<Other> cast() const {
    return LinearClassifier<Other>(weights_.template cast<Other>(), static_cast<Other>(gamma_));
  }

 private:
  Matrix weights_;
  Scalar gamma_ = Scalar(10);
};

/// In-place column-wise softmax with max-logit subtraction.
template <typename Derived>
void softmax_columns(Eigen::MatrixBase<Derived>& logits) {
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    auto col = logits.col(j);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

/// Posteriors for every column of X (d x T); result is C x T.
template <typename Scalar, typename Derived>
typename LinearClassifier<Scalar>::Matrix posteriors(const LinearClassifier<Scalar>& model,
                                                     const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != model.dim()) throw Error("input dimension does not match model");
  if (!x.allFinite()) throw Error("non-finite input to classifier");
  typename LinearClassifier<Scalar>::Matrix out = model.gamma() * (model.weights() * x);
  softmax_columns(out);
  return out;
}

template <typename Scalar, typename Derived>
typename LinearClassifier<Scalar>::Vector posterior(const LinearClassifier<Scalar>& model,
                                                    const Eigen::MatrixBase<Derived>& x) {
  return posteriors(model, x).col(0);
}

/// Backpropagates a gradient g w.r.t. the posterior p to the logits gamma W x:
/// dz = p .* (g - <p, g>).
template <typename P, typename G>
auto softmax_backward(const Eigen::MatrixBase<P>& p, const Eigen::MatrixBase<G>& g) {
  using Scalar = typename P::Scalar;
  const Scalar dot = p.dot(g);
  return (p.array() * (g.array() - dot)).matrix().eval();
}

/// Jacobian of the posterior w.r.t. W. Entry i is dp_i/dW (C x d):
/// dp_i/dw_j = gamma p_i (delta_ij - p_j) x.
template <typename Scalar, typename Derived>
std::vector<typename LinearClassifier<Scalar>::Matrix> posterior_jacobian(
    const LinearClassifier<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  using Vector = typename LinearClassifier<Scalar>::Vector;
  const Vector p = posterior(model, x);
  std::vector<typename LinearClassifier<Scalar>::Matrix> jac;
  jac.reserve(static_cast<std::size_t>(model.classes()));
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Vector coef = -p(i) * p;
    coef(i) += p(i);
    jac.push_back(model.gamma() * coef * x.transpose());
  }
  return jac;
}

/// Argmax of the posterior, ties to the smallest id.
template <typename Scalar, typename Derived>
ClassId predict(const LinearClassifier<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  const typename LinearClassifier<Scalar>::Vector logits = model.weights() * x;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i)
    if (logits(i) > logits(best)) best = i;
  return static_cast<ClassId>(best);
}

template <typename Scalar>
std::vector<IdSequence> predict_all(const LinearClassifier<Scalar>& model, const SequenceDataset<Scalar>& data) {
  std::vector<IdSequence> out;
  out.reserve(data.num_sequences());
  for (const auto& f : data.features) {
    IdSequence y(static_cast<std::size_t>(f.cols()));
    for (Eigen::Index t = 0; t < f.cols(); ++t) y[static_cast<std::size_t>(t)] = predict(model, f.col(t));
    out.push_back(std::move(y));
  }
  return out;
}

/// Fraction of positions whose labels differ between two parallel label sets.
inline double label_error(const std::vector<IdSequence>& predicted, const std::vector<IdSequence>& truth) {
  if (predicted.size() != truth.size()) throw Error("sequence count mismatch");
  std::size_t wrong = 0, total = 0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (predicted[n].size() != truth[n].size()) throw Error("sequence length mismatch");
    for (std::size_t t = 0; t < truth[n].size(); ++t) wrong += predicted[n][t] != truth[n][t];
    total += truth[n].size();
  }
  if (total == 0) throw Error("no labeled positions");
  return static_cast<double>(wrong) / static_cast<double>(total);
}

template <typename Scalar>
double eval_error(const LinearClassifier<Scalar>& model, const SequenceDataset<Scalar>& data) {
  if (!data.has_labels()) throw Error("dataset has no labels");
  return label_error(predict_all(model, data), *data.labels);
}

template <typename Scalar>
void save_model(const LinearClassifier<Scalar>& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(model.gamma()));
  out << "linmodel " << model.classes() << ' ' << model.dim() << ' ' << buf << '\n';
  for (Eigen::Index i = 0; i < model.weights().rows(); ++i) {
    for (Eigen::Index k = 0; k < model.weights().cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(model.weights()(i, k)));
      out << (k ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

template <typename Scalar = double>
LinearClassifier<Scalar> load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  auto fail = [&](std::size_t lineno, const std::string& what) {
    throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(in, line)) fail(1, "missing header");
  std::istringstream header(line);
  std::string magic;
  long long c = 0, d = 0;
  double gamma = 0;
  if (!(header >> magic >> c >> d >> gamma) || magic != "linmodel" || c < 1 || d < 1)
    fail(1, "expected 'linmodel <C> <d> <gamma>'");
  typename LinearClassifier<Scalar>::Matrix w(c, d);
  for (long long i = 0; i < c; ++i) {
    const auto lineno = static_cast<std::size_t>(i + 2);
    if (!std::getline(in, line)) fail(lineno, "missing weight row");
    std::istringstream row(line);
    std::string cell;
    long long k = 0;
    while (std::getline(row, cell, ',')) {
      if (k >= d) fail(lineno, "too many weights");
      std::size_t used = 0;
      try {
        w(i, k) = static_cast<Scalar>(std::stod(cell, &used));
      } catch (const std::logic_error&) {
        used = 0;
      }
      if (used == 0 || used != cell.size()) fail(lineno, "bad weight '" + cell + "'");
      ++k;
    }
    if (k != d) fail(lineno, "expected " + std::to_string(d) + " weights");
  }
  return LinearClassifier<Scalar>(std::move(w), static_cast<Scalar>(gamma));
}

}  // namespace odm
