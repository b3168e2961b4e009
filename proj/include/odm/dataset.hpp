#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "odm/vocabulary.hpp"

namespace odm {

/// A length-N span of one sequence: positions end-N+1 .. end (0-based, inclusive).
struct Window {
  std::size_t sequence = 0;
  Eigen::Index end = 0;

  friend bool operator==(const Window&, const Window&) = default;
};

/// M sequences of d-dimensional feature vectors, optionally with labels.
/// Feature sequence n is stored as a d x T_n matrix, one column per position.
template <typename Scalar>
struct SequenceDataset {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::vector<Matrix> features;
  std::optional<std::vector<IdSequence>> labels;
  Vocabulary vocab;
  int dim = 0;

  int classes() const { return vocab.size(); }
  std::size_t num_sequences() const { return features.size(); }
  bool has_labels() const { return labels.has_value(); }

  Eigen::Index total_positions() const {
    Eigen::Index total = 0;
    for (const auto& f : features) total += f.cols();
    return total;
  }

  /// T = sum_n max(T_n - N + 1, 0).
  Eigen::Index window_count(int order) const {
    Eigen::Index total = 0;
    for (const auto& f : features) total += std::max<Eigen::Index>(f.cols() - order + 1, 0);
    return total;
  }

  /// Throws if any structural invariant is broken.
  void validate() const {
    if (dim < 1) throw Error("dataset dimension must be positive");
    for (const auto& f : features)
      if (f.rows() != dim) throw Error("feature vector dimension mismatch");
    if (!labels) return;
    if (labels->size() != features.size()) throw Error("label/feature sequence count mismatch");
    for (std::size_t n = 0; n < features.size(); ++n) {
      if (static_cast<Eigen::Index>((*labels)[n].size()) != features[n].cols())
        throw Error("label sequence length differs from feature sequence length");
      for (ClassId c : (*labels)[n])
        if (c < 0 || c >= classes()) throw Error("label id out of range");
    }
  }

  SequenceDataset without_labels() const {
    SequenceDataset out = *this;
    out.labels.reset();
    return out;
  }
};

using Dataset = SequenceDataset<double>;

/// Every valid window of length N, sequence-major, in increasing end position.
template <typename Scalar>
std::vector<Window> enumerate_windows(const SequenceDataset<Scalar>& data, int order) {
  std::vector<Window> out;
  out.reserve(static_cast<std::size_t>(data.window_count(order)));
  for (std::size_t n = 0; n < data.features.size(); ++n)
    for (Eigen::Index t = order - 1; t < data.features[n].cols(); ++t) out.push_back({n, t});
  return out;
}

/// Vocabulary "0".."C-1" for datasets whose symbols are not known.
inline Vocabulary numeric_vocab(int classes) {
  std::vector<std::string> symbols;
  for (int i = 0; i < classes; ++i) symbols.push_back(std::to_string(i));
  return Vocabulary(std::move(symbols));
}

template <typename Scalar>
void save_dataset(const SequenceDataset<Scalar>& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "seqdata " << data.num_sequences() << ' ' << data.dim << ' ' << data.classes() << ' '
      << (data.has_labels() ? 1 : 0) << '\n';
  char buf[64];
  for (std::size_t n = 0; n < data.num_sequences(); ++n) {
    const auto& f = data.features[n];
    out << "len " << f.cols() << '\n';
    for (Eigen::Index t = 0; t < f.cols(); ++t) {
      for (Eigen::Index k = 0; k < f.rows(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(f(k, t)));
        out << (k ? "," : "") << buf;
      }
      out << '\n';
    }
    if (data.has_labels()) {
      const auto& y = (*data.labels)[n];
      for (std::size_t t = 0; t < y.size(); ++t) out << (t ? " " : "") << y[t];
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

template <typename Scalar = double>
SequenceDataset<Scalar> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::size_t lineno = 0;
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) throw IoError(path.string() + ":" + std::to_string(lineno + 1) + ": missing " + what);
    ++lineno;
  };
  auto fail = [&](const std::string& what) {
    throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + what);
  };

  next_line("header");
  std::istringstream header(line);
  std::string magic;
  long long m = -1, d = -1, c = -1, has_labels = -1;
  if (!(header >> magic >> m >> d >> c >> has_labels) || magic != "seqdata" || m < 0 || d < 1 || c < 1 ||
      (has_labels != 0 && has_labels != 1))
    fail("expected 'seqdata <M> <d> <C> <has_labels>'");

  SequenceDataset<Scalar> data;
  data.dim = static_cast<int>(d);
  data.vocab = numeric_vocab(static_cast<int>(c));
  if (has_labels) data.labels.emplace();
  for (long long n = 0; n < m; ++n) {
    next_line("'len' line");
    std::istringstream len_line(line);
    std::string tag;
    long long len = -1;
    if (!(len_line >> tag >> len) || tag != "len" || len < 0) fail("expected 'len <T_n>'");
    typename SequenceDataset<Scalar>::Matrix f(d, len);
    for (long long t = 0; t < len; ++t) {
      next_line("feature row");
      std::istringstream row(line);
      std::string cell;
      long long k = 0;
      while (std::getline(row, cell, ',')) {
        if (k >= d) fail("too many feature values");
        try {
          std::size_t used = 0;
          f(k, t) = static_cast<Scalar>(std::stod(cell, &used));
          if (used != cell.size()) fail("bad feature value '" + cell + "'");
        } catch (const std::logic_error&) {
          fail("bad feature value '" + cell + "'");
        }
        ++k;
      }
      if (k != d) fail("expected " + std::to_string(d) + " feature values");
    }
    data.features.push_back(std::move(f));
    if (has_labels) {
      IdSequence y;
      next_line("label line");
      std::istringstream ids(line);
      long long v;
      while (ids >> v) {
        if (v < 0 || v >= c) fail("label id " + std::to_string(v) + " out of range");
        y.push_back(static_cast<ClassId>(v));
      }
      if (!ids.eof()) fail("bad label id");
      if (static_cast<long long>(y.size()) != len) fail("label count does not match len");
      data.labels->push_back(std::move(y));
    }
  }
  data.validate();
  return data;
}

}  // namespace odm
