#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "odm/dataset.hpp"
#include "odm/model.hpp"
#include "odm/ngram.hpp"
#include "odm/tuples.hpp"

namespace odm {

/// Probabilities are clamped here before any logarithm or reciprocal.
inline constexpr double kProbFloor = 1e-300;

/// Expected N-gram frequency of the classifier's outputs over all windows,
/// as a dense table indexed like TupleSpace.
template <typename Scalar>
struct NGramFrequency {
  int order = 0;
  int classes = 0;
  Eigen::Index windows = 0;
  std::vector<Scalar> table;

  Scalar at(TupleIndex index) const { return table[static_cast<std::size_t>(index)]; }
  Scalar operator()(std::span<const ClassId> tuple) const { return at(TupleSpace(classes, order).encode(tuple)); }
};

template <typename Scalar>
void write_frequency_csv(const NGramFrequency<Scalar>& freq, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (int k = 1; k <= freq.order; ++k) out << "i_" << k << ',';
  out << "value\n";
  const TupleSpace space(freq.classes, freq.order);
  std::vector<ClassId> tuple(static_cast<std::size_t>(freq.order));
  char buf[64];
  for (TupleIndex i = 0; i < space.size(); ++i) {
    space.decode(i, tuple);
    for (ClassId c : tuple) out << c << ',';
    std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(freq.at(i)));
    out << buf << '\n';
  }
}

/// p̄(i_1..i_N) = (1/T) sum over windows of prod_k p(y_{t-k} = i_{N-k} | x_{t-k}).
template <typename Scalar>
NGramFrequency<Scalar> expected_ngram_freq(const LinearClassifier<Scalar>& model, const SequenceDataset<Scalar>& data,
                                           int order) {
  const Eigen::Index windows = data.window_count(order);
  if (windows == 0) throw Error("no valid windows");
  const TupleSpace space(model.classes(), order);
  if (space.size() > NGramModel::kDenseLimit) throw Error("C^N too large for a dense frequency table");
  const auto c = static_cast<std::size_t>(model.classes());
  const auto size = static_cast<std::size_t>(space.size());

  NGramFrequency<Scalar> freq{order, model.classes(), windows, std::vector<Scalar>(size, Scalar(0))};
  std::vector<Scalar> cur(size), next(size);
  for (std::size_t n = 0; n < data.num_sequences(); ++n) {
    const auto post = posteriors(model, data.features[n]);
    for (Eigen::Index t = order - 1; t < post.cols(); ++t) {
      std::size_t len = c;
      for (std::size_t i = 0; i < c; ++i) cur[i] = post(static_cast<Eigen::Index>(i), t - order + 1);
      for (int k = 1; k < order; ++k) {
        const auto col = post.col(t - order + 1 + k);
        for (std::size_t a = 0; a < len; ++a)
          for (std::size_t b = 0; b < c; ++b) next[a * c + b] = cur[a] * col(static_cast<Eigen::Index>(b));
        len *= c;
        std::swap(cur, next);
      }
      for (std::size_t i = 0; i < size; ++i) freq.table[i] += cur[i];
    }
  }
  for (auto& v : freq.table) v /= static_cast<Scalar>(windows);
  return freq;
}

/// Average over all windows of each table tuple's product of posteriors.
template <typename Scalar>
typename LinearClassifier<Scalar>::Vector table_frequency(const LinearClassifier<Scalar>& model,
                                                          const SequenceDataset<Scalar>& data,
                                                          const TupleTable& table) {
  const int order = table.order;
  const Eigen::Index windows = data.window_count(order);
  if (windows == 0) throw Error("no valid windows");
  typename LinearClassifier<Scalar>::Vector acc = LinearClassifier<Scalar>::Vector::Zero(static_cast<Eigen::Index>(table.size()));
  std::vector<Scalar> prods(table.size());
  for (std::size_t n = 0; n < data.num_sequences(); ++n) {
    const auto post = posteriors(model, data.features[n]);
    for (Eigen::Index t = order - 1; t < post.cols(); ++t) {
      detail::window_products(post.middleCols(t - order + 1, order), table, std::span<Scalar>(prods));
      for (std::size_t s = 0; s < prods.size(); ++s) acc(static_cast<Eigen::Index>(s)) += prods[s];
    }
  }
  return acc / static_cast<Scalar>(windows);
}

/// p̄ on the prior's support, aligned with lm.support().
template <typename Scalar>
typename LinearClassifier<Scalar>::Vector support_frequency(const LinearClassifier<Scalar>& model,
                                                            const SequenceDataset<Scalar>& data,
                                                            const NGramModel& lm) {
  return table_frequency(model, data, support_table(lm));
}

/// -sum p_LM ln p̄ from a support-aligned p̄. Zero-prior tuples are absent and contribute 0.
template <typename Scalar, typename Derived>
Scalar odm_cost_from_support(const NGramModel& lm, const Eigen::MatrixBase<Derived>& pbar) {
  Scalar j = Scalar(0);
  for (std::size_t s = 0; s < lm.support_size(); ++s)
    j -= static_cast<Scalar>(lm.support_probs()[s]) *
         std::log(std::max(pbar(static_cast<Eigen::Index>(s)), static_cast<Scalar>(kProbFloor)));
  return j;
}

/// Empirical-ODM cost J = -sum p_LM ln p̄.
template <typename Scalar>
Scalar empirical_odm_cost(const LinearClassifier<Scalar>& model, const SequenceDataset<Scalar>& data,
                          const NGramModel& lm) {
  return odm_cost_from_support<Scalar>(lm, support_frequency(model, data, lm));
}

template <typename Scalar>
Scalar empirical_odm_cost(const NGramFrequency<Scalar>& freq, const NGramModel& lm) {
  if (freq.order != lm.order() || freq.classes != lm.classes()) throw Error("n-gram order mismatch");
  Scalar j = Scalar(0);
  for (std::size_t s = 0; s < lm.support_size(); ++s)
    j -= static_cast<Scalar>(lm.support_probs()[s]) * std::log(std::max(freq.at(lm.support()[s]), static_cast<Scalar>(kProbFloor)));
  return j;
}

/// Full-batch gradient of J w.r.t. W:
///   -sum_s p_LM(s) [ (1/T) sum_t grad prod_s,t ] / [ (1/T) sum_t prod_s,t ].
/// The denominators are computed in a first pass; the numerator average is then
/// accumulated with each tuple pre-weighted by -p_LM(s) / denominator(s).
template <typename Scalar>
typename LinearClassifier<Scalar>::Matrix odm_full_gradient(const LinearClassifier<Scalar>& model,
                                                            const SequenceDataset<Scalar>& data,
                                                            const NGramModel& lm) {
  using Matrix = typename LinearClassifier<Scalar>::Matrix;
  const TupleTable table = support_table(lm);
  const int order = table.order;
  const auto pbar = table_frequency(model, data, table);
  const auto windows = static_cast<Scalar>(data.window_count(order));
  std::vector<Scalar> coef(table.size());
  for (std::size_t s = 0; s < table.size(); ++s)
    coef[s] = -static_cast<Scalar>(table.weights[s]) /
              std::max(pbar(static_cast<Eigen::Index>(s)), static_cast<Scalar>(kProbFloor)) / windows;

  Matrix grad = Matrix::Zero(model.classes(), model.dim());
  for (std::size_t n = 0; n < data.num_sequences(); ++n) {
    const auto& x = data.features[n];
    if (x.cols() < order) continue;
    const Matrix post = posteriors(model, x);
    Matrix g = Matrix::Zero(post.rows(), post.cols());
    for (Eigen::Index t = order - 1; t < post.cols(); ++t) {
      auto gb = g.middleCols(t - order + 1, order);
      detail::window_backward(post.middleCols(t - order + 1, order), table, std::span<const Scalar>(coef), gb);
    }
    grad += detail::backprop_to_weights(model, post, g, x);
  }
  return grad;
}

/// Minibatch estimate of grad J. With `denominator` (support-aligned full p̄)
/// only the numerator is sampled, which is unbiased; with nullptr both the
/// numerator and denominator come from the batch, which is biased.
template <typename Scalar>
typename LinearClassifier<Scalar>::Matrix odm_gradient_estimate(
    const LinearClassifier<Scalar>& model, const SequenceDataset<Scalar>& data, const TupleTable& table,
    std::span<const Window> batch, const typename LinearClassifier<Scalar>::Vector* denominator) {
  using Matrix = typename LinearClassifier<Scalar>::Matrix;
  const int order = table.order;
  if (batch.empty()) throw Error("empty minibatch");
  std::vector<Matrix> posts;
  posts.reserve(batch.size());
  for (const auto& w : batch) posts.push_back(posteriors(model, data.features[w.sequence].middleCols(w.end - order + 1, order)));

  std::vector<Scalar> den(table.size(), Scalar(0));
  if (denominator) {
    for (std::size_t s = 0; s < table.size(); ++s) den[s] = (*denominator)(static_cast<Eigen::Index>(s));
  } else {
    std::vector<Scalar> prods(table.size());
    for (const auto& post : posts) {
      detail::window_products(post, table, std::span<Scalar>(prods));
      for (std::size_t s = 0; s < prods.size(); ++s) den[s] += prods[s];
    }
    for (auto& v : den) v /= static_cast<Scalar>(batch.size());
  }
  std::vector<Scalar> coef(table.size());
  for (std::size_t s = 0; s < table.size(); ++s)
    coef[s] = -static_cast<Scalar>(table.weights[s]) / std::max(den[s], static_cast<Scalar>(kProbFloor)) /
              static_cast<Scalar>(batch.size());

  Matrix grad = Matrix::Zero(model.classes(), model.dim());
  Matrix g(model.classes(), order);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    g.setZero();
    detail::window_backward(posts[b], table, std::span<const Scalar>(coef), g);
    grad += detail::backprop_to_weights(model, posts[b], g,
                                        data.features[batch[b].sequence].middleCols(batch[b].end - order + 1, order));
  }
  return grad;
}

/// Tuples split by whether the prior defines p(i_N | i_1..i_{N-1}).
/// `scored` carries -ln max(conditional, floor); `skipped` has unseen contexts.
struct ModeSeekingTables {
  TupleTable scored;
  TupleTable skipped;
};

inline ModeSeekingTables mode_seeking_tables(const NGramModel& lm) {
  const int order = lm.order();
  const int c = lm.classes();
  ModeSeekingTables out{{order, c, {}, {}}, {order, c, {}, {}}};
  const TupleTable all = full_table(c, order);
  std::vector<ClassId> tuple(static_cast<std::size_t>(order));
  for (std::size_t s = 0; s < all.size(); ++s) {
    for (int k = 0; k < order; ++k) tuple[static_cast<std::size_t>(k)] = all.at(s, k);
    const std::span<const ClassId> ctx(tuple.data(), tuple.size() - 1);
    const double mass = lm.context_mass(ctx);
    if (mass <= 0.0) {
      out.skipped.add(tuple, 1.0);
      continue;
    }
    out.scored.add(tuple, -std::log(std::max(lm.joint(tuple) / mass, kProbFloor)));
  }
  return out;
}

template <typename Scalar>
struct ModeSeekingCost {
  Scalar value = 0;
  /// p̄ mass on tuples whose context has zero prior mass (left out of `value`).
  Scalar skipped_mass = 0;
};

/// -sum p̄(i_1..i_N) ln p_LM(i_N | i_1..i_{N-1}) over tuples with a defined conditional.
template <typename Scalar>
ModeSeekingCost<Scalar> mode_seeking_cost(const LinearClassifier<Scalar>& model, const SequenceDataset<Scalar>& data,
                                          const NGramModel& lm) {
  const auto tables = mode_seeking_tables(lm);
  ModeSeekingCost<Scalar> out;
  if (tables.scored.size()) {
    const auto f = table_frequency(model, data, tables.scored);
    for (std::size_t s = 0; s < tables.scored.size(); ++s)
      out.value += f(static_cast<Eigen::Index>(s)) * static_cast<Scalar>(tables.scored.weights[s]);
  }
  if (tables.skipped.size()) out.skipped_mass = table_frequency(model, data, tables.skipped).sum();
  return out;
}

/// Gradient of the mode-seeking cost averaged over `batch` (unbiased: the cost is linear in p̄).
template <typename Scalar>
typename LinearClassifier<Scalar>::Matrix mode_seeking_gradient(const LinearClassifier<Scalar>& model,
                                                                const SequenceDataset<Scalar>& data,
                                                                const TupleTable& scored,
                                                                std::span<const Window> batch) {
  using Matrix = typename LinearClassifier<Scalar>::Matrix;
  const int order = scored.order;
  if (batch.empty()) throw Error("empty minibatch");
  std::vector<Scalar> coef(scored.size());
  for (std::size_t s = 0; s < scored.size(); ++s)
    coef[s] = static_cast<Scalar>(scored.weights[s]) / static_cast<Scalar>(batch.size());
  Matrix grad = Matrix::Zero(model.classes(), model.dim());
  Matrix g(model.classes(), order);
  for (const auto& w : batch) {
    const auto x = data.features[w.sequence].middleCols(w.end - order + 1, order);
    const Matrix post = posteriors(model, x);
    g.setZero();
    detail::window_backward(post, scored, std::span<const Scalar>(coef), g);
    grad += detail::backprop_to_weights(model, post, g, x);
  }
  return grad;
}

/// Exact E[-sum_n sum_{t >= N} ln p_LM(y_t | y_{t-N+1..t-1})] under the
/// factorized posterior, by enumerating every output sequence. Positions whose
/// context has zero prior mass are skipped.
template <typename Scalar>
Scalar nll_bruteforce_oracle(const LinearClassifier<Scalar>& model, const SequenceDataset<Scalar>& data,
                             const NGramModel& lm, double enumeration_bound = 1e6) {
  const int order = lm.order();
  const int c = model.classes();
  double total_sequences = 0;
  for (const auto& f : data.features) total_sequences += std::pow(static_cast<double>(c), static_cast<double>(f.cols()));
  if (total_sequences > enumeration_bound) throw Error("enumeration bound exceeded");

  Scalar total = Scalar(0);
  std::vector<ClassId> tuple(static_cast<std::size_t>(order));
  for (const auto& f : data.features) {
    const auto post = posteriors(model, f);
    const auto len = static_cast<std::size_t>(f.cols());
    std::vector<ClassId> y(len, 0);
    while (true) {
      Scalar prob = Scalar(1);
      for (std::size_t t = 0; t < len; ++t) prob *= post(y[t], static_cast<Eigen::Index>(t));
      Scalar nll = Scalar(0);
      for (std::size_t t = static_cast<std::size_t>(order - 1); t < len; ++t) {
        std::copy(y.begin() + static_cast<std::ptrdiff_t>(t + 1) - order, y.begin() + static_cast<std::ptrdiff_t>(t),
                  tuple.begin());
        try {
          nll -= static_cast<Scalar>(
              std::log(std::max(lm.conditional(std::span<const ClassId>(tuple.data(), tuple.size() - 1), y[t]), kProbFloor)));
        } catch (const Error&) {
          // unseen context: no defined conditional
        }
      }
      total += prob * nll;
      std::size_t pos = 0;
      while (pos < len && ++y[pos] == c) y[pos++] = 0;
      if (pos == len) break;
    }
  }
  return total;
}

struct MarginalCheckReport {
  bool holds = false;
  double max_abs_diff = 0;
  std::size_t distinct_inputs = 0;
  std::size_t distinct_input_tuples = 0;
};

/// Checks p̄ = sum over input tuples of prod_k p(i_k | x_k) * p̂(x_1..x_N),
/// where p̂ is the empirical frequency of input N-tuples. Inputs must come
/// from a finite set (compared exactly).
template <typename Scalar>
MarginalCheckReport empirical_marginal_check(const LinearClassifier<Scalar>& model, const SequenceDataset<Scalar>& data,
                                             int order, double tolerance = 1e-10) {
  using Vector = typename LinearClassifier<Scalar>::Vector;
  std::map<std::vector<Scalar>, int> input_ids;
  std::vector<Vector> distinct;
  std::vector<std::vector<int>> coded(data.num_sequences());
  for (std::size_t n = 0; n < data.num_sequences(); ++n) {
    const auto& f = data.features[n];
    for (Eigen::Index t = 0; t < f.cols(); ++t) {
      std::vector<Scalar> key(f.col(t).data(), f.col(t).data() + f.rows());
      auto [it, fresh] = input_ids.emplace(std::move(key), static_cast<int>(distinct.size()));
      if (fresh) distinct.push_back(f.col(t));
      coded[n].push_back(it->second);
    }
  }
  std::map<std::vector<int>, std::size_t> tuple_counts;
  std::size_t windows = 0;
  for (const auto& seq : coded)
    for (std::size_t t = static_cast<std::size_t>(order - 1); t < seq.size(); ++t, ++windows)
      ++tuple_counts[std::vector<int>(seq.begin() + static_cast<std::ptrdiff_t>(t + 1) - order,
                                      seq.begin() + static_cast<std::ptrdiff_t>(t + 1))];
  if (windows == 0) throw Error("no valid windows");

  std::vector<Vector> post;
  for (const auto& x : distinct) post.push_back(posterior(model, x));
  const TupleSpace space(model.classes(), order);
  std::vector<Scalar> rhs(static_cast<std::size_t>(space.size()), Scalar(0));
  std::vector<ClassId> tuple(static_cast<std::size_t>(order));
  for (const auto& [xs, count] : tuple_counts) {
    const Scalar weight = static_cast<Scalar>(count) / static_cast<Scalar>(windows);
    for (TupleIndex i = 0; i < space.size(); ++i) {
      space.decode(i, tuple);
      Scalar p = weight;
      for (int k = 0; k < order; ++k) p *= post[static_cast<std::size_t>(xs[static_cast<std::size_t>(k)])](tuple[static_cast<std::size_t>(k)]);
      rhs[static_cast<std::size_t>(i)] += p;
    }
  }
  const auto lhs = expected_ngram_freq(model, data, order);
  MarginalCheckReport report;
  for (std::size_t i = 0; i < rhs.size(); ++i)
    report.max_abs_diff = std::max(report.max_abs_diff, std::fabs(static_cast<double>(lhs.table[i] - rhs[i])));
  report.holds = report.max_abs_diff <= tolerance;
  report.distinct_inputs = distinct.size();
  report.distinct_input_tuples = tuple_counts.size();
  return report;
}

}  // namespace odm
