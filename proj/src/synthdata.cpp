#include "odm/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "odm/rng.hpp"

namespace odm {

std::vector<IdSequence> gen_markov_labels(const Eigen::MatrixXd& transition, const Eigen::VectorXd& initial,
                                          const std::vector<std::size_t>& lengths, std::uint64_t seed) {
  const Eigen::Index c = transition.rows();
  if (c < 1 || transition.cols() != c) throw Error("transition table must be square");
  if (initial.size() != c) throw Error("initial distribution size mismatch");
  for (Eigen::Index i = 0; i < c; ++i) {
    if ((transition.row(i).array() < 0.0).any() || std::fabs(transition.row(i).sum() - 1.0) > 1e-12)
      throw Error("transition row " + std::to_string(i) + " is not stochastic");
  }
  if ((initial.array() < 0.0).any() || std::fabs(initial.sum() - 1.0) > 1e-12)
    throw Error("initial distribution is not stochastic");

  Rng rng = make_rng(seed, "synthdata.markov");
  std::discrete_distribution<ClassId> start(initial.data(), initial.data() + c);
  std::vector<std::discrete_distribution<ClassId>> rows;
  for (Eigen::Index i = 0; i < c; ++i) {
    const Eigen::VectorXd r = transition.row(i).transpose();
    rows.emplace_back(r.data(), r.data() + c);
  }
  std::vector<IdSequence> out;
  out.reserve(lengths.size());
  for (std::size_t len : lengths) {
    IdSequence seq;
    seq.reserve(len);
    if (len > 0) seq.push_back(start(rng));
    while (seq.size() < len) seq.push_back(rows[static_cast<std::size_t>(seq.back())](rng));
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<Eigen::MatrixXd> gen_gaussian_features(const std::vector<IdSequence>& labels, const Eigen::MatrixXd& means,
                                                   double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw Error("noise_sigma must be >= 0");
  Rng rng = make_rng(seed, "synthdata.noise");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(labels.size());
  for (const auto& seq : labels) {
    Eigen::MatrixXd f(means.rows(), static_cast<Eigen::Index>(seq.size()));
    for (std::size_t t = 0; t < seq.size(); ++t) {
      if (seq[t] < 0 || seq[t] >= means.cols()) throw Error("label has no class mean (d/C mismatch)");
      auto col = f.col(static_cast<Eigen::Index>(t));
      col = means.col(seq[t]);
      if (noise_sigma > 0.0)
        for (Eigen::Index k = 0; k < col.size(); ++k) col(k) += noise_sigma * normal(rng);
    }
    out.push_back(std::move(f));
  }
  return out;
}

Eigen::MatrixXd cipher_prototypes(int classes, int dim, double scale, std::uint64_t seed) {
  if (dim < classes) throw Error("cipher prototypes need d >= C");
  std::vector<int> perm(static_cast<std::size_t>(classes));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed, "synthdata.cipher");
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(dim, classes);
  for (int c = 0; c < classes; ++c) means(perm[static_cast<std::size_t>(c)], c) = scale;
  return means;
}

Dataset gen_cipher_dataset(const std::vector<IdSequence>& text, const Vocabulary& vocab, int dim, double noise_sigma,
                           std::uint64_t seed, int order, double scale) {
  if (text.empty()) throw Error("empty text");
  for (const auto& seq : text)
    if (static_cast<int>(seq.size()) < order) throw Error("text sequence shorter than the n-gram order");
  const Eigen::MatrixXd means = cipher_prototypes(vocab.size(), dim, scale, seed);
  Dataset data;
  data.features = gen_gaussian_features(text, means, noise_sigma, seed);
  data.labels = text;
  data.vocab = vocab;
  data.dim = dim;
  data.validate();
  return data;
}

Dataset gen_markov_gaussian_dataset(const Eigen::MatrixXd& transition, const Eigen::VectorXd& initial,
                                    const Eigen::MatrixXd& means, const std::vector<std::size_t>& lengths,
                                    double noise_sigma, std::uint64_t seed) {
  if (means.cols() != transition.rows()) throw Error("one mean per class required");
  Dataset data;
  data.labels = gen_markov_labels(transition, initial, lengths, seed);
  data.features = gen_gaussian_features(*data.labels, means, noise_sigma, seed);
  data.vocab = numeric_vocab(static_cast<int>(transition.rows()));
  data.dim = static_cast<int>(means.rows());
  data.validate();
  return data;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t m, double test_fraction,
                                                                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test_fraction must be in (0,1)");
  if (m < 2) throw Error("need at least 2 sequences to split");
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(m)));
  n_test = std::clamp<std::size_t>(n_test, 1, m - 1);

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, "synthdata.split");
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {std::move(train_idx), std::move(test_idx)};
}

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  const auto [train_idx, test_idx] = split_indices(data.num_sequences(), test_fraction, seed);
  auto take = [&](const std::vector<std::size_t>& idx, bool keep_labels) {
    Dataset out;
    out.vocab = data.vocab;
    out.dim = data.dim;
    if (keep_labels && data.has_labels()) out.labels.emplace();
    for (std::size_t i : idx) {
      out.features.push_back(data.features[i]);
      if (out.labels) out.labels->push_back((*data.labels)[i]);
    }
    return out;
  };
  return {take(train_idx, false), take(test_idx, true)};
}

std::vector<IdSequence> chop(const IdSequence& ids, std::size_t length) {
  if (length == 0) throw Error("segment length must be positive");
  std::vector<IdSequence> out;
  for (std::size_t i = 0; i + length <= ids.size(); i += length)
    out.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(i), ids.begin() + static_cast<std::ptrdiff_t>(i + length));
  return out;
}

}  // namespace odm
