// Command-line front end: estimate-lm, gen-data, train, eval, landscape, reproduce.
//
// Exit codes: 0 success, 2 bad configuration or input, 3 numerical divergence, 4 I/O failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "odm/builtin_text.hpp"
#include "odm/config.hpp"
#include "odm/cost.hpp"
#include "odm/experiment.hpp"
#include "odm/landscape.hpp"
#include "odm/rng.hpp"

namespace {

using namespace odm;

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig config = path.empty() ? RunConfig{} : load_run_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw ConfigError("bad seed '" + tok + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("no seeds given");
  return seeds;
}

// estimate-lm -------------------------------------------------------------

struct EstimateArgs {
  std::string corpus, out, alphabet = "auto";
  int order = 2;
  double smoothing = 0.0;
};

int cmd_estimate_lm(const EstimateArgs& a) {
  std::string text = read_text(a.corpus);
  Vocabulary vocab;
  if (a.alphabet == "cipher") {
    text = normalize_text(text, kCipherAlphabet);
    vocab = cipher_vocab();
  } else {
    vocab = build_vocab(text);
  }
  const NGramModel lm = estimate_ngram({vocab.encode(text)}, vocab, a.order, a.smoothing);
  save_ngram(lm, a.out);
  std::cout << "wrote " << a.out << ": N=" << lm.order() << " C=" << lm.classes() << " support=" << lm.support_size()
            << " entropy=" << lm.entropy() << "\n";
  return 0;
}

// gen-data ----------------------------------------------------------------

int cmd_gen_data(const RunConfig& config, const std::string& out_dir) {
  if (config.task == "file") throw ConfigError("gen-data needs a generated task (cipher or markov-gaussian)");
  const std::filesystem::path dir = out_dir.empty() ? config.output_dir : out_dir;
  ensure_dir(dir);
  const Task task = build_task(config);
  save_dataset(task.train, dir / "train.seqdata");
  save_dataset(task.test, dir / "test.seqdata");
  RunConfig in_domain = config;
  in_domain.lm = "in-domain";
  save_ngram(build_prior(in_domain, task), dir / "prior.lm");
  {
    std::ofstream cfg(dir / "gen-data.cfg");
    if (!cfg) throw IoError("cannot write " + (dir / "gen-data.cfg").string());
    cfg << format_run_config(config);
  }
  std::cout << "wrote " << (dir / "train.seqdata").string() << " (" << task.train.num_sequences()
            << " unlabeled sequences), " << (dir / "test.seqdata").string() << " (" << task.test.num_sequences()
            << " labeled), " << (dir / "prior.lm").string() << "\n";
  return 0;
}

// train -------------------------------------------------------------------

int cmd_train(const RunConfig& config) {
  const RunOutcome r = run_experiment(config);
  std::cout << r.trainer << ": steps=" << r.steps << " train_J=" << num(r.train_j) << " test_error=" << num(r.test_error)
            << "\nartifacts in " << config.output_dir << "\n";
  return 0;
}

// eval --------------------------------------------------------------------

struct EvalArgs {
  std::string model, data, lm, out;
  bool majority = false;
};

int cmd_eval(const EvalArgs& a) {
  const Dataset data = load_dataset(a.data);
  if (!data.has_labels()) throw ConfigError(a.data + " has no labels");
  double error = 0;
  std::string what;
  if (a.majority) {
    ClassId c = 0;
    if (!a.lm.empty()) {
      const NGramModel lm = load_ngram(a.lm);
      if (lm.classes() != data.classes()) throw ConfigError("prior and dataset disagree on C");
      c = majority_class(lm);
    } else {
      c = majority_class(*data.labels, data.classes());
    }
    error = constant_predictor_error(c, *data.labels);
    what = "majority(" + std::to_string(c) + ")";
  } else {
    if (a.model.empty()) throw ConfigError("eval needs --model or --majority");
    error = eval_error(load_model(a.model), data);
    what = a.model;
  }
  std::cout << "predictor,error\n" << what << ',' << num(error) << "\n";
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw IoError("cannot write " + a.out);
    out << "predictor,error\n" << what << ',' << num(error) << "\n";
  }
  return 0;
}

// landscape ---------------------------------------------------------------

struct LandscapeArgs {
  std::string model = "supervised", data, lm, out = "landscape";
  std::uint64_t seed = 1;
  double lo = -2, hi = 2, dual_lo = -1, dual_hi = 1;
  int points = 41, dual_points = 41;
};

int cmd_landscape(const LandscapeArgs& a) {
  const Dataset data = load_dataset(a.data);
  const NGramModel lm = load_ngram(a.lm);
  if (lm.classes() != data.classes()) throw ConfigError("prior and dataset disagree on C");
  LinearClassifier<double> theta_star;
  if (a.model == "supervised") {
    if (!data.has_labels()) throw ConfigError("--model supervised needs a labeled dataset");
    theta_star = supervised_train(data, SupervisedConfig{}).model;
  } else {
    theta_star = load_model(a.model);
  }
  const std::filesystem::path dir = a.out;
  ensure_dir(dir);

  Rng rng = make_rng(a.seed, "landscape.directions");
  const auto theta1 = random_direction(theta_star, rng);
  const auto theta2 = random_direction(theta_star, rng);
  const auto v1 = random_dual_direction<double>(lm, rng);
  const auto v_star = dual_closed_form(theta_star, data, lm);

  const GridSpec primal{{a.lo, a.hi, a.points}, {a.lo, a.hi, a.points}};
  const GridSpec saddle{{a.lo, a.hi, a.points}, {a.dual_lo, a.dual_hi, a.dual_points}};
  const ProfileGrid gj = profile_J(data, lm, theta_star, theta1, theta2, primal);
  const ProfileGrid gl = profile_L(data, lm, theta_star, v_star, theta1, v1, saddle);
  const auto line = line_profile(data, lm, theta_star, theta1, primal.axis1.values());
  write_profile_csv(gj, dir / "profile_J.csv");
  write_profile_csv(gl, dir / "profile_L.csv");
  write_line_csv(line, dir / "line.csv");
  save_model(theta_star, dir / "theta_star.txt");

  const auto barrier = compare_barriers(line, 0.0, 1.0);
  std::ofstream meta(dir / "landscape_meta.txt");
  if (!meta) throw IoError("cannot write " + (dir / "landscape_meta.txt").string());
  meta << "anchor = " << (a.model == "supervised" ? "supervised solution on " + a.data : a.model) << "\n"
       << "data = " << a.data << " " << git_blob_hash_file(a.data) << "\n"
       << "lm = " << a.lm << " " << git_blob_hash_file(a.lm) << "\n"
       << "direction_seed = " << a.seed << "\n"
       << "rng = " << kRngName << "\n"
       << "profile_J = " << gj.anchor << "\n"
       << "profile_L = " << gl.anchor << "\n"
       << "line = J and L(., V*) along theta* + lp (theta1 - theta*)\n"
       << "J(theta*) = " << num(empirical_odm_cost(theta_star, data, lm)) << "\n"
       << "flagged_L_cells = " << gl.flagged_count() << "\n"
       << "dual_axis_max_at_origin = " << (dual_axis_max_at_origin(gl) ? "true" : "false") << "\n"
       << "line_max_J_on_[0,1] = " << num(barrier.max_j) << "\n"
       << "line_max_L_on_[0,1] = " << num(barrier.max_l) << "\n";
  std::cout << "wrote profiles to " << dir.string() << " (dual-axis maximum at origin: "
            << (dual_axis_max_at_origin(gl) ? "yes" : "no") << ")\n";
  return 0;
}

// reproduce ---------------------------------------------------------------

struct ReproduceArgs {
  std::string preset, out = "reproduce", seeds = "1,2,3";
  long sgd_steps = 0;
  bool small = false;
};

int cmd_reproduce(const ReproduceArgs& a) {
  const auto seeds = parse_seeds(a.seeds);
  const std::filesystem::path dir = a.out;
  ensure_dir(dir);
  std::vector<TableRow> rows;
  for (auto seed : seeds) {
    std::vector<TableRow> part;
    if (a.preset == "cipher-table1") {
      Table1Options opt;
      opt.with_large_batch_sgd = !a.small;
      opt.sgd_steps = a.sgd_steps;
      part = cipher_table1(seed, opt);
    } else if (a.preset == "cipher-table2") {
      part = cipher_table2(seed);
    } else {
      throw ConfigError("unknown preset '" + a.preset + "' (cipher-table1, cipher-table2)");
    }
    for (const auto& r : part)
      std::cout << r.method << " seed=" << r.seed << " N=" << r.order << " prior=" << r.prior
                << " test_error=" << num(r.test_error) << "\n";
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_table_csv(rows, dir / (a.preset + ".csv"));
  std::ofstream man(dir / (a.preset + ".manifest.txt"));
  if (!man) throw IoError("cannot write manifest");
  man << "# preset " << a.preset << " seeds " << a.seeds << "\n# rng " << kRngName << "\n"
      << "# output " << a.preset << ".csv " << git_blob_hash_file(dir / (a.preset + ".csv")) << "\n"
      << "# base config (per seed; the rows vary trainer, batch, order and prior)\n"
      << format_run_config(cipher_preset(seeds.front()));
  std::cout << "wrote " << (dir / (a.preset + ".csv")).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised sequence classification by output-distribution matching"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate-lm", "Estimate an N-gram prior from a text corpus");
  c_est->add_option("--corpus", est.corpus, "UTF-8 text file")->required();
  c_est->add_option("--order,-N", est.order, "n-gram order")->check(CLI::PositiveNumber);
  c_est->add_option("--smoothing,-k", est.smoothing, "add-k constant");
  c_est->add_option("--alphabet", est.alphabet, "auto (first appearance) or cipher (a-z, space, comma, period)")
      ->check(CLI::IsMember({"auto", "cipher"}));
  c_est->add_option("--out,-o", est.out, "output LM file")->required();

  std::string config_path, gen_out;
  std::vector<std::string> overrides;
  auto* c_gen = app.add_subcommand("gen-data", "Generate train (unlabeled) and test (labeled) datasets");
  c_gen->add_option("--config,-c", config_path, "run config file");
  c_gen->add_option("--set", overrides, "override a config key: key=value");
  c_gen->add_option("--out,-o", gen_out, "output directory (default: output_dir)");

  auto* c_train = app.add_subcommand("train", "Train one model as described by a run config");
  c_train->add_option("--config,-c", config_path, "run config file (a manifest.txt works too)")
      ;
  c_train->add_option("--set", overrides, "override a config key: key=value");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Error rate of a model on a labeled dataset");
  c_eval->add_option("--data,-d", ev.data, "labeled dataset file")->required();
  auto* model_opt = c_eval->add_option("--model,-m", ev.model, "model file");
  auto* maj_opt = c_eval->add_flag("--majority", ev.majority, "score the constant majority-class predictor");
  c_eval->add_option("--lm", ev.lm, "prior whose unigram mode is the majority class");
  c_eval->add_option("--out,-o", ev.out, "also write the report CSV here");
  model_opt->excludes(maj_opt);

  LandscapeArgs ls;
  auto* c_land = app.add_subcommand("landscape", "Profiles of J and L around an anchor model");
  c_land->add_option("--model,-m", ls.model, "model file, or 'supervised' to fit one on --data");
  c_land->add_option("--data,-d", ls.data, "dataset file")->required();
  c_land->add_option("--lm", ls.lm, "prior LM file")->required();
  c_land->add_option("--out,-o", ls.out, "output directory");
  c_land->add_option("--seed", ls.seed, "direction seed");
  c_land->add_option("--lo", ls.lo, "lower end of the primal axes");
  c_land->add_option("--hi", ls.hi, "upper end of the primal axes");
  c_land->add_option("--points", ls.points, "points per primal axis")->check(CLI::PositiveNumber);
  c_land->add_option("--dual-lo", ls.dual_lo, "lower end of the dual axis");
  c_land->add_option("--dual-hi", ls.dual_hi, "upper end of the dual axis");
  c_land->add_option("--dual-points", ls.dual_points, "points on the dual axis")->check(CLI::PositiveNumber);

  ReproduceArgs rp;
  auto* c_rep = app.add_subcommand("reproduce", "Run a table preset over several seeds");
  c_rep->add_option("--preset,-p", rp.preset, "cipher-table1 or cipher-table2")->required();
  c_rep->add_option("--seeds", rp.seeds, "comma-separated seeds");
  c_rep->add_option("--out,-o", rp.out, "output directory");
  c_rep->add_option("--sgd-steps", rp.sgd_steps, "step budget of the SGD baselines (default: same as SPDG)");
  c_rep->add_flag("--small", rp.small, "skip SGD<100> and SGD<1k>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*c_est) return cmd_estimate_lm(est);
    if (*c_gen) return cmd_gen_data(resolve_config(config_path, overrides), gen_out);
    if (*c_train) return cmd_train(resolve_config(config_path, overrides));
    if (*c_eval) return cmd_eval(ev);
    if (*c_land) return cmd_landscape(ls);
    if (*c_rep) return cmd_reproduce(rp);
  } catch (const DivergenceError& e) {
    std::cerr << "error: numerical divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
