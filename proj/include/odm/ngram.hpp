#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "odm/rng.hpp"
#include "odm/vocabulary.hpp"

namespace odm {

using TupleIndex = std::uint64_t;

/// Lexicographic base-C numbering of the C^N tuples (first position most significant).
class TupleSpace {
 public:
  TupleSpace() = default;
  TupleSpace(int classes, int order);

  int classes() const { return classes_; }
  int order() const { return order_; }
  TupleIndex size() const { return size_; }

  TupleIndex encode(std::span<const ClassId> tuple) const;
  void decode(TupleIndex index, std::span<ClassId> out) const;
  std::vector<ClassId> decode(TupleIndex index) const;

 private:
  int classes_ = 0;
  int order_ = 0;
  TupleIndex size_ = 0;
};

/// Order-N joint probability table over id tuples. Immutable once built.
///
/// Only tuples with positive probability are stored in `support()` (sorted by
/// index, hence in lexicographic id order). A dense copy is kept for lookups
/// when C^N <= kDenseLimit.
class NGramModel {
 public:
  static constexpr TupleIndex kDenseLimit = 1'000'000;
  static constexpr double kSumTolerance = 1e-12;

  NGramModel() = default;
  /// Entries need not be sorted; zero-probability entries are dropped.
  NGramModel(Vocabulary vocab, int order, std::vector<std::pair<TupleIndex, double>> entries);

  int order() const { return space_.order(); }
  int classes() const { return space_.classes(); }
  const Vocabulary& vocab() const { return vocab_; }
  const TupleSpace& space() const { return space_; }

  std::span<const TupleIndex> support() const { return support_; }
  std::span<const double> support_probs() const { return probs_; }
  std::size_t support_size() const { return support_.size(); }

  double joint(TupleIndex index) const;
  double joint(std::span<const ClassId> tuple) const { return joint(space_.encode(tuple)); }

  /// Sum over the last position of the joint, for an (N-1)-tuple context.
  double context_mass(std::span<const ClassId> context) const;
  /// p(next | context) by the chain rule; throws "unseen context" on zero mass.
  double conditional(std::span<const ClassId> context, ClassId next) const;

  /// Marginal distribution of the last tuple position.
  Eigen::VectorXd unigram() const;
  /// Shannon entropy of the joint, in nats.
  double entropy() const;

  friend bool operator==(const NGramModel& a, const NGramModel& b) {
    return a.vocab_ == b.vocab_ && a.space_.order() == b.space_.order() && a.support_ == b.support_ &&
           a.probs_ == b.probs_;
  }

 private:
  Vocabulary vocab_;
  TupleSpace space_;
  std::vector<TupleIndex> support_;
  std::vector<double> probs_;
  std::vector<double> dense_;
};

/// Sliding-window counts with add-k smoothing:
/// joint(t) = (count(t) + k) / (W + k C^N). Sequences shorter than N are skipped.
NGramModel estimate_ngram(const std::vector<IdSequence>& sequences, const Vocabulary& vocab, int order,
                          double add_k = 0.0);

void save_ngram(const NGramModel& model, const std::filesystem::path& path);
NGramModel load_ngram(const std::filesystem::path& path);

/// Draws a symbol sequence from the chain defined by the model's conditionals.
/// The first N-1 symbols come from the context marginal; an unseen context
/// restarts from that marginal.
IdSequence sample_text(const NGramModel& model, std::size_t length, Rng& rng);

/// Lowercases and maps everything outside `alphabet` to a space, collapsing runs of spaces.
std::string normalize_text(std::string_view text, std::string_view alphabet);

}  // namespace odm
