#include "odm/ngram.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace odm {

TupleSpace::TupleSpace(int classes, int order) : classes_(classes), order_(order) {
  if (classes < 1) throw Error("tuple space needs at least one class");
  if (order < 1) throw Error("n-gram order must be >= 1");
  size_ = 1;
  for (int k = 0; k < order; ++k) {
    if (size_ > std::numeric_limits<TupleIndex>::max() / static_cast<TupleIndex>(classes))
      throw Error("tuple space C^N overflows 64 bits");
    size_ *= static_cast<TupleIndex>(classes);
  }
}

TupleIndex TupleSpace::encode(std::span<const ClassId> tuple) const {
  if (static_cast<int>(tuple.size()) != order_) throw Error("tuple length does not match order");
  TupleIndex index = 0;
  for (ClassId c : tuple) {
    if (c < 0 || c >= classes_) throw Error("class id " + std::to_string(c) + " out of range");
    index = index * static_cast<TupleIndex>(classes_) + static_cast<TupleIndex>(c);
  }
  return index;
}

void TupleSpace::decode(TupleIndex index, std::span<ClassId> out) const {
  for (int k = order_ - 1; k >= 0; --k) {
    out[static_cast<std::size_t>(k)] = static_cast<ClassId>(index % static_cast<TupleIndex>(classes_));
    index /= static_cast<TupleIndex>(classes_);
  }
}

std::vector<ClassId> TupleSpace::decode(TupleIndex index) const {
  std::vector<ClassId> out(static_cast<std::size_t>(order_));
  decode(index, out);
  return out;
}

NGramModel::NGramModel(Vocabulary vocab, int order, std::vector<std::pair<TupleIndex, double>> entries)
    : vocab_(std::move(vocab)), space_(vocab_.size(), order) {
  std::sort(entries.begin(), entries.end());
  long double total = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto [index, p] = entries[i];
    if (index >= space_.size()) throw Error("tuple index out of range");
    if (i && entries[i - 1].first == index) throw Error("duplicate tuple in n-gram table");
    if (!(p >= 0.0 && p <= 1.0)) throw Error("n-gram probability outside [0,1]");
    if (p == 0.0) continue;
    support_.push_back(index);
    probs_.push_back(p);
    total += p;
  }
  if (std::fabs(static_cast<double>(total) - 1.0) > kSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "n-gram probabilities sum to " << static_cast<double>(total) << ", not 1";
    throw Error(msg.str());
  }
  if (space_.size() <= kDenseLimit) {
    dense_.assign(static_cast<std::size_t>(space_.size()), 0.0);
    for (std::size_t i = 0; i < support_.size(); ++i) dense_[support_[i]] = probs_[i];
  }
}

double NGramModel::joint(TupleIndex index) const {
  if (index >= space_.size()) throw Error("tuple index out of range");
  if (!dense_.empty()) return dense_[index];
  auto it = std::lower_bound(support_.begin(), support_.end(), index);
  if (it == support_.end() || *it != index) return 0.0;
  return probs_[static_cast<std::size_t>(it - support_.begin())];
}

double NGramModel::context_mass(std::span<const ClassId> context) const {
  if (static_cast<int>(context.size()) != order() - 1) throw Error("context length must be N-1");
  TupleIndex base = 0;
  for (ClassId c : context) {
    if (c < 0 || c >= classes()) throw Error("class id out of range");
    base = base * static_cast<TupleIndex>(classes()) + static_cast<TupleIndex>(c);
  }
  base *= static_cast<TupleIndex>(classes());
  auto lo = std::lower_bound(support_.begin(), support_.end(), base);
  auto hi = std::lower_bound(lo, support_.end(), base + static_cast<TupleIndex>(classes()));
  double mass = 0.0;
  for (auto it = lo; it != hi; ++it) mass += probs_[static_cast<std::size_t>(it - support_.begin())];
  return mass;
}

double NGramModel::conditional(std::span<const ClassId> context, ClassId next) const {
  const double mass = context_mass(context);
  if (mass <= 0.0) throw Error("unseen context");
  std::vector<ClassId> tuple(context.begin(), context.end());
  tuple.push_back(next);
  return joint(tuple) / mass;
}

Eigen::VectorXd NGramModel::unigram() const {
  Eigen::VectorXd marginal = Eigen::VectorXd::Zero(classes());
  for (std::size_t i = 0; i < support_.size(); ++i)
    marginal(static_cast<Eigen::Index>(support_[i] % static_cast<TupleIndex>(classes()))) += probs_[i];
  return marginal;
}

double NGramModel::entropy() const {
  double h = 0.0;
  for (double p : probs_) h -= p * std::log(p);
  return h;
}

NGramModel estimate_ngram(const std::vector<IdSequence>& sequences, const Vocabulary& vocab, int order,
                          double add_k) {
  if (order < 1) throw Error("n-gram order must be >= 1");
  if (!(add_k >= 0.0)) throw Error("add-k constant must be >= 0");
  const TupleSpace space(vocab.size(), order);
  std::map<TupleIndex, std::uint64_t> counts;
  std::uint64_t windows = 0;
  const auto n = static_cast<std::size_t>(order);
  for (const auto& seq : sequences) {
    if (seq.size() < n) continue;
    for (std::size_t t = n - 1; t < seq.size(); ++t) {
      ++counts[space.encode(std::span<const ClassId>(seq).subspan(t + 1 - n, n))];
      ++windows;
    }
  }
  if (windows == 0) throw Error("no windows");

  std::vector<std::pair<TupleIndex, double>> entries;
  if (add_k == 0.0) {
    for (const auto& [index, count] : counts)
      entries.emplace_back(index, static_cast<double>(count) / static_cast<double>(windows));
  } else {
    if (space.size() > NGramModel::kDenseLimit) throw Error("add-k smoothing needs C^N <= 1e6");
    const double denom = static_cast<double>(windows) + add_k * static_cast<double>(space.size());
    entries.reserve(static_cast<std::size_t>(space.size()));
    for (TupleIndex i = 0; i < space.size(); ++i) {
      auto it = counts.find(i);
      const double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
      entries.emplace_back(i, (c + add_k) / denom);
    }
  }
  return NGramModel(vocab, order, std::move(entries));
}

void save_ngram(const NGramModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "ngram " << model.order() << ' ' << model.classes() << '\n';
  out << escape_symbols(model.vocab()) << '\n';
  std::vector<ClassId> tuple(static_cast<std::size_t>(model.order()));
  char buf[64];
  for (std::size_t i = 0; i < model.support_size(); ++i) {
    model.space().decode(model.support()[i], tuple);
    for (std::size_t k = 0; k < tuple.size(); ++k) out << (k ? " " : "") << tuple[k];
    std::snprintf(buf, sizeof buf, "%.17g", model.support_probs()[i]);
    out << '\t' << buf << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  throw IoError(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

NGramModel load_ngram(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) parse_fail(path, lineno, "missing header");
  std::istringstream header(line);
  std::string magic;
  int order = 0, classes = 0;
  if (!(header >> magic >> order >> classes) || magic != "ngram" || order < 1 || classes < 1)
    parse_fail(path, lineno, "expected 'ngram <N> <C>'");
  ++lineno;
  if (!std::getline(in, line)) parse_fail(path, lineno, "missing vocabulary line");
  Vocabulary vocab;
  try {
    vocab = unescape_symbols(line);
  } catch (const Error& e) {
    parse_fail(path, lineno, e.what());
  }
  if (vocab.size() != classes) parse_fail(path, lineno, "vocabulary size does not match C");
  const TupleSpace space(classes, order);

  std::vector<std::pair<TupleIndex, double>> entries;
  std::vector<ClassId> tuple(static_cast<std::size_t>(order));
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) parse_fail(path, lineno, "expected '<ids>\\t<probability>'");
    std::istringstream ids(line.substr(0, tab));
    for (auto& c : tuple) {
      long long v = -1;
      if (!(ids >> v)) parse_fail(path, lineno, "expected " + std::to_string(order) + " ids");
      if (v < 0 || v >= classes) parse_fail(path, lineno, "symbol id " + std::to_string(v) + " out of range");
      c = static_cast<ClassId>(v);
    }
    std::string extra;
    if (ids >> extra) parse_fail(path, lineno, "too many ids");
    const std::string prob_text = line.substr(tab + 1);
    double p = 0.0;
    const auto [ptr, ec] = std::from_chars(prob_text.data(), prob_text.data() + prob_text.size(), p);
    if (ec != std::errc() || ptr != prob_text.data() + prob_text.size())
      parse_fail(path, lineno, "bad probability '" + prob_text + "'");
    if (!(p > 0.0 && p <= 1.0)) parse_fail(path, lineno, "probability must be in (0,1]");
    entries.emplace_back(space.encode(tuple), p);
  }
  try {
    return NGramModel(std::move(vocab), order, std::move(entries));
  } catch (const Error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

IdSequence sample_text(const NGramModel& model, std::size_t length, Rng& rng) {
  const int n = model.order();
  const int c = model.classes();
  // Context marginal over the first N-1 positions, as a cumulative table over support.
  std::vector<double> weights(model.support_probs().begin(), model.support_probs().end());
  std::discrete_distribution<std::size_t> start(weights.begin(), weights.end());

  IdSequence out;
  out.reserve(length);
  std::vector<ClassId> tuple(static_cast<std::size_t>(n));
  auto restart = [&] {
    model.space().decode(model.support()[start(rng)], tuple);
    for (int k = 0; k + 1 < n && out.size() < length; ++k) out.push_back(tuple[static_cast<std::size_t>(k)]);
  };
  restart();
  std::vector<double> next(static_cast<std::size_t>(c));
  while (out.size() < length) {
    std::span<const ClassId> ctx(out.data() + out.size() - static_cast<std::size_t>(n - 1),
                                 static_cast<std::size_t>(n - 1));
    std::copy(ctx.begin(), ctx.end(), tuple.begin());
    double mass = 0.0;
    for (ClassId j = 0; j < c; ++j) {
      tuple.back() = j;
      next[static_cast<std::size_t>(j)] = model.joint(tuple);
      mass += next[static_cast<std::size_t>(j)];
    }
    if (mass <= 0.0) {
      restart();
      continue;
    }
    std::discrete_distribution<ClassId> pick(next.begin(), next.end());
    out.push_back(pick(rng));
  }
  return out;
}

std::string normalize_text(std::string_view text, std::string_view alphabet) {
  std::string out;
  out.reserve(text.size());
  for (char raw : text) {
    char ch = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (alphabet.find(ch) == std::string_view::npos) ch = ' ';
    if (ch == ' ' && !out.empty() && out.back() == ' ') continue;
    out += ch;
  }
  return out;
}

}  // namespace odm
