#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "odm/dataset.hpp"
#include "odm/model.hpp"
#include "odm/ngram.hpp"

namespace odm {

/// A list of N-tuples decoded once, each with a weight. Tuples keep the order
/// they were added in (lexicographic when built from a model or the full space).
struct TupleTable {
  int order = 0;
  int classes = 0;
  std::vector<ClassId> ids;     // size() x order, row-major
  std::vector<double> weights;  // one per tuple

  std::size_t size() const { return weights.size(); }
  ClassId at(std::size_t s, int k) const { return ids[s * static_cast<std::size_t>(order) + static_cast<std::size_t>(k)]; }
  void add(std::span<const ClassId> tuple, double weight) {
    ids.insert(ids.end(), tuple.begin(), tuple.end());
    weights.push_back(weight);
  }
};

/// Support tuples of `lm`, weighted by their prior probability.
inline TupleTable support_table(const NGramModel& lm) {
  TupleTable table{lm.order(), lm.classes(), {}, {}};
  table.ids.reserve(lm.support_size() * static_cast<std::size_t>(lm.order()));
  table.weights.reserve(lm.support_size());
  std::vector<ClassId> tuple(static_cast<std::size_t>(lm.order()));
  for (std::size_t s = 0; s < lm.support_size(); ++s) {
    lm.space().decode(lm.support()[s], tuple);
    table.add(tuple, lm.support_probs()[s]);
  }
  return table;
}

/// All C^N tuples in lexicographic order with unit weight.
inline TupleTable full_table(int classes, int order) {
  const TupleSpace space(classes, order);
  if (space.size() > NGramModel::kDenseLimit) throw Error("C^N too large for a dense tuple table");
  TupleTable table{order, classes, {}, {}};
  std::vector<ClassId> tuple(static_cast<std::size_t>(order));
  for (TupleIndex i = 0; i < space.size(); ++i) {
    space.decode(i, tuple);
    table.add(tuple, 1.0);
  }
  return table;
}

namespace detail {

/// prods[s] = prod_k post(table(s,k), k) for a C x N block of window posteriors.
template <typename Derived, typename Scalar>
void window_products(const Eigen::MatrixBase<Derived>& post, const TupleTable& table, std::span<Scalar> prods) {
  const int n = table.order;
  for (std::size_t s = 0; s < table.size(); ++s) {
    Scalar p = post(table.at(s, 0), 0);
    for (int k = 1; k < n; ++k) p *= post(table.at(s, k), k);
    prods[s] = p;
  }
}

/// grad(:, k)[i_k] += coef[s] * prod_{j != k} post(i_j, j) for every tuple s.
template <typename Derived, typename Scalar, typename GradDerived>
void window_backward(const Eigen::MatrixBase<Derived>& post, const TupleTable& table, std::span<const Scalar> coef,
                     Eigen::MatrixBase<GradDerived>& grad) {
  const int n = table.order;
  if (n == 1) {
    for (std::size_t s = 0; s < table.size(); ++s) grad(table.at(s, 0), 0) += coef[s];
    return;
  }
  if (n == 2) {
    for (std::size_t s = 0; s < table.size(); ++s) {
      const ClassId a = table.at(s, 0), b = table.at(s, 1);
      grad(a, 0) += coef[s] * post(b, 1);
      grad(b, 1) += coef[s] * post(a, 0);
    }
    return;
  }
  std::vector<Scalar> prefix(static_cast<std::size_t>(n) + 1);
  for (std::size_t s = 0; s < table.size(); ++s) {
    prefix[0] = Scalar(1);
    for (int k = 0; k < n; ++k) prefix[static_cast<std::size_t>(k) + 1] = prefix[static_cast<std::size_t>(k)] * post(table.at(s, k), k);
    Scalar suffix = Scalar(1);
    for (int k = n - 1; k >= 0; --k) {
      grad(table.at(s, k), k) += coef[s] * prefix[static_cast<std::size_t>(k)] * suffix;
      suffix *= post(table.at(s, k), k);
    }
  }
}

/// Chain rule through the softmax: returns gamma * DZ * X^T where DZ holds
/// the logit gradients of each column of `post` given posterior gradients `grad`.
template <typename Scalar, typename P, typename G, typename X>
typename LinearClassifier<Scalar>::Matrix backprop_to_weights(const LinearClassifier<Scalar>& model,
                                                              const Eigen::MatrixBase<P>& post,
                                                              const Eigen::MatrixBase<G>& grad,
                                                              const Eigen::MatrixBase<X>& x) {
  typename LinearClassifier<Scalar>::Matrix dz(post.rows(), post.cols());
  for (Eigen::Index k = 0; k < post.cols(); ++k) dz.col(k) = softmax_backward(post.col(k), grad.col(k));
  return model.gamma() * (dz * x.transpose());
}

}  // namespace detail

/// Per-sequence posterior matrices (C x T_n).
template <typename Scalar>
std::vector<typename LinearClassifier<Scalar>::Matrix> compute_posteriors(const LinearClassifier<Scalar>& model,
                                                                          const SequenceDataset<Scalar>& data) {
  std::vector<typename LinearClassifier<Scalar>::Matrix> out;
  out.reserve(data.num_sequences());
  for (const auto& f : data.features) out.push_back(posteriors(model, f));
  return out;
}

}  // namespace odm
