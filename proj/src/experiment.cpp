#include "odm/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

#include "odm/builtin_text.hpp"
#include "odm/cost.hpp"
#include "odm/rng.hpp"
#include "odm/synthdata.hpp"

namespace odm {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Eigen::MatrixXd row_major(const std::vector<double>& values, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

/// One sequence per non-empty line of whitespace-separated ids.
std::vector<IdSequence> read_id_corpus(const std::filesystem::path& path, int classes) {
  std::istringstream in(read_file(path));
  std::vector<IdSequence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ids(line);
    IdSequence seq;
    long long v;
    while (ids >> v) {
      if (v < 0 || v >= classes)
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": class id " + std::to_string(v) + " out of range");
      seq.push_back(static_cast<ClassId>(v));
    }
    if (!ids.eof()) throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad class id");
    if (!seq.empty()) out.push_back(std::move(seq));
  }
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

IdSequence cipher_text(const std::string& source, long chars, std::uint64_t seed) {
  if (chars < 1) throw ConfigError("text length must be positive");
  const auto n = static_cast<std::size_t>(chars);
  if (source == "builtin-a") return builtin_text(builtin_passage_a(), n, seed);
  if (source == "builtin-b") return builtin_text(builtin_passage_b(), n, seed);
  const std::string text = normalize_text(read_file(source), kCipherAlphabet);
  IdSequence ids = cipher_vocab().encode(text);
  if (ids.empty()) throw IoError(source + ": no symbols of the cipher alphabet");
  if (ids.size() > n) ids.resize(n);
  return ids;
}

Task build_task(const RunConfig& config) {
  config.validate();
  Task task;
  if (config.task == "file") {
    task.train = load_dataset(config.train_file).without_labels();
    task.test = load_dataset(config.test_file);
    if (!task.test.has_labels()) throw ConfigError("test_file must be labeled");
    if (task.test.dim != task.train.dim || task.test.classes() != task.train.classes())
      throw ConfigError("train and test datasets disagree on d or C");
    return task;
  }

  Dataset all;
  if (config.task == "cipher") {
    const IdSequence text = cipher_text(config.text, config.text_chars, config.seed);
    all = gen_cipher_dataset(chop(text, static_cast<std::size_t>(config.segment_length)), cipher_vocab(), config.dim,
                             config.noise_sigma, config.seed, config.order, config.prototype_scale);
  } else {
    const auto c = static_cast<Eigen::Index>(config.initial.size());
    const auto d = static_cast<Eigen::Index>(config.means.size()) / c;
    const Eigen::MatrixXd means = row_major(config.means, c, d).transpose();
    const std::vector<std::size_t> lengths(static_cast<std::size_t>(config.num_sequences),
                                           static_cast<std::size_t>(config.sequence_length));
    all = gen_markov_gaussian_dataset(row_major(config.transition, c, c),
                                      Eigen::Map<const Eigen::VectorXd>(config.initial.data(), c), means, lengths,
                                      config.noise_sigma, config.seed);
  }
  const auto [train_idx, test_idx] = split_indices(all.num_sequences(), config.test_fraction, config.seed);
  for (std::size_t i : train_idx) task.train_labels.push_back((*all.labels)[i]);
  std::tie(task.train, task.test) = split(all, config.test_fraction, config.seed);
  return task;
}

NGramModel build_prior(const RunConfig& config, const Task& task) {
  const Vocabulary& vocab = task.train.vocab;
  if (config.lm == "in-domain") {
    if (task.train_labels.empty()) throw ConfigError("no train labels for an in-domain prior");
    return estimate_ngram(task.train_labels, vocab, config.order, config.lm_smoothing);
  }
  if (config.lm == "file") return load_ngram(config.lm_path);
  if (config.lm == "out-of-domain")
    return estimate_ngram({cipher_text("builtin-b", config.text_chars, config.seed)}, vocab, config.order,
                          config.lm_smoothing);
  // corpus
  if (config.task == "cipher")
    return estimate_ngram({cipher_text(config.lm_path, std::numeric_limits<long>::max(), config.seed)}, vocab,
                          config.order, config.lm_smoothing);
  return estimate_ngram(read_id_corpus(config.lm_path, vocab.size()), vocab, config.order, config.lm_smoothing);
}

RunOutcome run_trainer(const RunConfig& config, const Task& task, const NGramModel& lm) {
  if (lm.classes() != task.train.classes())
    throw ConfigError("prior has " + std::to_string(lm.classes()) + " classes but the data has " +
                      std::to_string(task.train.classes()));
  TrainConfig train = config.train;
  train.seed = config.seed;
  const EvalHook<double> hook = [&](const LinearClassifier<double>& m) {
    EvalMetrics e;
    e.test_error = eval_error(m, task.test);
    return e;
  };

  RunOutcome out;
  out.trainer = config.trainer;
  if (config.trainer == "spdg" || config.trainer == "sgd" || config.trainer == "mode-seeking") {
    TrainResult<double> r;
    if (config.trainer == "spdg")
      r = spdg_train(train, task.train, lm, hook);
    else if (config.trainer == "sgd")
      r = sgd_biased_train(train, task.train, lm, hook);
    else
      r = mode_seeking_train(train, task.train, lm, hook);
    out.model = std::move(r.model);
    out.log = std::move(r.log);
    out.steps = r.steps_run;
    out.stopped_early = r.stopped_early;
    out.test_error = eval_error(out.model, task.test);
  } else if (config.trainer == "supervised") {
    if (task.train_labels.empty()) throw ConfigError("the supervised oracle needs generated train labels");
    Dataset labeled = task.train;
    labeled.labels = task.train_labels;
    SupervisedConfig sc = config.supervised;
    sc.gamma = train.gamma;
    auto r = supervised_train(labeled, sc);
    out.model = std::move(r.model);
    out.steps = r.steps;
    out.test_error = eval_error(out.model, task.test);
  } else {
    const ClassId c = majority_class(lm);
    const double w = std::isnan(train.w_init) ? 1.0 / task.train.dim : train.w_init;
    out.model = constant_output_model<double>(task.train.classes(), task.train.dim, c, train.gamma, 1.0, w);
    out.test_error = constant_predictor_error(c, *task.test.labels);
  }
  out.train_j = static_cast<double>(empirical_odm_cost(out.model, task.train, lm));
  return out;
}

std::string git_blob_hash(std::string_view bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-1 failed");
  }
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string git_blob_hash_file(const std::filesystem::path& path) { return git_blob_hash(read_file(path)); }

namespace {

/// metrics.csv without its wall-clock column, the part a re-run reproduces exactly.
std::string strip_wall_ms(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

}  // namespace

RunOutcome run_experiment(const RunConfig& config) {
  config.validate();
  const std::filesystem::path dir = config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const Task task = build_task(config);
  const NGramModel lm = build_prior(config, task);
  const RunOutcome out = run_trainer(config, task, lm);

  std::vector<std::string> outputs;
  if (config.task != "file") {
    save_dataset(task.train, dir / "train.seqdata");
    save_dataset(task.test, dir / "test.seqdata");
    outputs = {"train.seqdata", "test.seqdata"};
  }
  save_ngram(lm, dir / "prior.lm");
  save_model(out.model, dir / "model.txt");
  write_metrics_csv(out.log, dir / "metrics.csv");
  {
    std::ofstream rep(dir / "report.csv");
    if (!rep) throw IoError("cannot write " + (dir / "report.csv").string());
    rep << "trainer,order,prior,steps,train_J,test_error\n"
        << out.trainer << ',' << config.order << ',' << config.lm << ',' << out.steps << ',' << num(out.train_j)
        << ',' << num(out.test_error) << '\n';
  }
  outputs.insert(outputs.end(), {"prior.lm", "model.txt", "report.csv"});

  std::ofstream man(dir / "manifest.txt");
  if (!man) throw IoError("cannot write " + (dir / "manifest.txt").string());
  man << "# run manifest; load it with `odm train --config` to repeat the run\n";
  man << "# rng " << kRngName << '\n';
  std::vector<std::pair<std::string, std::string>> inputs;
  if (config.task == "cipher") {
    if (config.text == "builtin-a")
      inputs.emplace_back("text", git_blob_hash(builtin_passage_a()));
    else if (config.text == "builtin-b")
      inputs.emplace_back("text", git_blob_hash(builtin_passage_b()));
    else
      inputs.emplace_back("text " + config.text, git_blob_hash_file(config.text));
  }
  if (config.lm == "out-of-domain") inputs.emplace_back("lm text", git_blob_hash(builtin_passage_b()));
  if (!config.lm_path.empty()) inputs.emplace_back("lm_path " + config.lm_path, git_blob_hash_file(config.lm_path));
  if (config.task == "file") {
    inputs.emplace_back("train_file " + config.train_file, git_blob_hash_file(config.train_file));
    inputs.emplace_back("test_file " + config.test_file, git_blob_hash_file(config.test_file));
  }
  for (const auto& [what, hash] : inputs) man << "# input " << what << ' ' << hash << '\n';
  for (const auto& name : outputs) man << "# output " << name << ' ' << git_blob_hash_file(dir / name) << '\n';
  man << "# output metrics.csv (without wall_ms) "
      << git_blob_hash(strip_wall_ms(read_file(dir / "metrics.csv"))) << '\n';
  man << format_run_config(config);
  if (!man) throw IoError("write failed for " + (dir / "manifest.txt").string());
  return out;
}

double cipher_dual_rate(int order) { return 3.0 * std::pow(10.0, order - 2); }

RunConfig cipher_preset(std::uint64_t seed, int order) {
  RunConfig c;
  c.task = "cipher";
  c.seed = seed;
  c.text = "builtin-a";
  c.text_chars = 65000;
  c.segment_length = 100;
  c.test_fraction = 15000.0 / 65000.0;
  c.dim = 29;
  c.noise_sigma = 0.1;
  c.order = order;
  c.lm = "in-domain";
  c.train.seed = seed;
  c.train.mu_theta = 1e-4;
  c.train.mu_v = cipher_dual_rate(order);
  c.train.batch = 16;
  c.train.steps = 50000;
  c.train.eval_every = 5000;
  return c;
}

std::vector<TableRow> cipher_table1(std::uint64_t seed, const Table1Options& options) {
  RunConfig base = cipher_preset(seed);
  const Task task = build_task(base);
  const NGramModel lm = build_prior(base, task);
  std::vector<TableRow> rows;
  auto run = [&](const std::string& label, RunConfig c) {
    const RunOutcome r = run_trainer(c, task, lm);
    rows.push_back({label, seed, c.order, c.lm, r.test_error, r.train_j});
  };
  run("SPDG", base);
  {
    RunConfig c = base;
    c.trainer = "mode-seeking";
    run("mode-seeking", c);
  }
  std::vector<int> batches{10};
  if (options.with_large_batch_sgd) batches.insert(batches.end(), {100, 1000});
  for (int b : batches) {
    RunConfig c = base;
    c.trainer = "sgd";
    c.train.batch = b;
    if (options.sgd_steps > 0) c.train.steps = options.sgd_steps;
    run("SGD<" + (b == 1000 ? std::string("1k") : std::to_string(b)) + ">", c);
  }
  {
    RunConfig c = base;
    c.trainer = "supervised";
    run("supervised", c);
  }
  {
    RunConfig c = base;
    c.trainer = "majority";
    run("majority", c);
  }
  return rows;
}

std::vector<TableRow> cipher_table2(std::uint64_t seed) {
  std::vector<TableRow> rows;
  for (const char* prior : {"in-domain", "out-of-domain"})
    for (int order : {1, 2, 3}) {
      RunConfig c = cipher_preset(seed, order);
      c.lm = prior;
      const Task task = build_task(c);
      const NGramModel lm = build_prior(c, task);
      const RunOutcome r = run_trainer(c, task, lm);
      rows.push_back({"SPDG", seed, order, prior, r.test_error, r.train_j});
    }
  return rows;
}

void write_table_csv(const std::vector<TableRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "method,seed,order,prior,test_error,train_J\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.seed << ',' << r.order << ',' << r.prior << ',' << num(r.test_error) << ','
        << num(r.train_j) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace odm
