#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "odm/dataset.hpp"

namespace odm {

/// Label sequences from a first-order Markov chain.
/// `transition(i, j)` = p(next = j | current = i); rows must sum to 1 within 1e-12.
std::vector<IdSequence> gen_markov_labels(const Eigen::MatrixXd& transition, const Eigen::VectorXd& initial,
                                          const std::vector<std::size_t>& lengths, std::uint64_t seed);

/// x = means.col(label) + sigma * N(0, I). `means` is d x C.
std::vector<Eigen::MatrixXd> gen_gaussian_features(const std::vector<IdSequence>& labels, const Eigen::MatrixXd& means,
                                                   double noise_sigma, std::uint64_t seed);

/// Class prototypes for the substitution cipher: class c maps to scale * e_{perm(c)}
/// (padded with zeros to d) for a seed-determined random permutation. Returns d x C.
Eigen::MatrixXd cipher_prototypes(int classes, int dim, double scale, std::uint64_t seed);

/// Labels are the text; features are the permuted one-hot prototype of each
/// symbol plus Gaussian noise. Throws if any sequence is shorter than `order`.
Dataset gen_cipher_dataset(const std::vector<IdSequence>& text, const Vocabulary& vocab, int dim, double noise_sigma,
                           std::uint64_t seed, int order = 1, double scale = 1.0);

/// Markov labels with Gaussian class clouds.
Dataset gen_markov_gaussian_dataset(const Eigen::MatrixXd& transition, const Eigen::VectorXd& initial,
                                    const Eigen::MatrixXd& means, const std::vector<std::size_t>& lengths,
                                    double noise_sigma, std::uint64_t seed);

/// Sequence indices of a split: (train, test), each sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t num_sequences,
                                                                          double test_fraction, std::uint64_t seed);

/// Sequence-level split. The train part has its labels removed; the test part keeps them.
/// The test share is round(test_fraction * M), clamped to [1, M-1].
std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed);

/// Cuts one long id sequence into consecutive segments of `length` (a shorter tail is dropped).
std::vector<IdSequence> chop(const IdSequence& ids, std::size_t length);

}  // namespace odm
