#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "odm/cost.hpp"
#include "odm/dataset.hpp"
#include "odm/model.hpp"
#include "odm/ngram.hpp"
#include "odm/rng.hpp"
#include "odm/tuples.hpp"

namespace odm {

/// Training stopped because a cost or gradient became non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

template <typename Scalar>
struct ConjugateResult {
  Scalar value;
  Scalar argmax;
};

/// max over nu < 0 of (u nu + 1 + ln(-nu)), attained at nu = -1/u; equals -ln u.
template <typename Scalar>
ConjugateResult<Scalar> conjugate_neg_log(Scalar u) {
  if (!(u > Scalar(0))) throw Error("conjugate of -ln u needs u > 0");
  const Scalar nu = Scalar(-1) / u;
  return {u * nu + Scalar(1) + std::log(-nu), nu};
}

/// One strictly negative dual per tuple of the prior's support, aligned with lm.support().
template <typename Scalar>
class DualVariables {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  DualVariables() = default;
  DualVariables(const NGramModel& lm, Vector values) : order_(lm.order()), values_(std::move(values)) {
    if (values_.size() != static_cast<Eigen::Index>(lm.support_size()))
      throw Error("dual count does not match the prior's support");
    check_negative();
  }

  static DualVariables constant(const NGramModel& lm, Scalar value) {
    return DualVariables(lm, Vector::Constant(static_cast<Eigen::Index>(lm.support_size()), value));
  }

  /// Uniform on [lo, hi), clamped to at most `ceiling`.
  static DualVariables uniform(const NGramModel& lm, Scalar lo, Scalar hi, Scalar ceiling, Rng& rng) {
    if (!(lo < hi) || !(hi <= Scalar(0))) throw Error("dual init range must lie in the negative reals");
    std::uniform_real_distribution<double> draw(static_cast<double>(lo), static_cast<double>(hi));
    Vector v(static_cast<Eigen::Index>(lm.support_size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::min(static_cast<Scalar>(draw(rng)), ceiling);
    return DualVariables(lm, std::move(v));
  }

  int order() const { return order_; }
  Eigen::Index size() const { return values_.size(); }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  void check_negative() const {
    for (Eigen::Index i = 0; i < values_.size(); ++i)
      if (!(values_(i) < Scalar(0))) throw Error("dual variable " + std::to_string(i) + " is not negative");
  }

 private:
  int order_ = 0;
  Vector values_;
};

/// L_t = sum_s p_LM(s) nu_s prod_k p(y_{t-k} = i_{N-k} | x_{t-k}) for one window (d x N features).
template <typename Scalar, typename Derived>
Scalar component_fn(const LinearClassifier<Scalar>& model, const DualVariables<Scalar>& duals,
                    const Eigen::MatrixBase<Derived>& window, const NGramModel& lm) {
  if (window.cols() != lm.order()) throw Error("window length must equal the n-gram order");
  const TupleTable table = support_table(lm);
  const auto post = posteriors(model, window);
  std::vector<Scalar> prods(table.size());
  detail::window_products(post, table, std::span<Scalar>(prods));
  Scalar sum = Scalar(0);
  for (std::size_t s = 0; s < table.size(); ++s)
    sum += static_cast<Scalar>(table.weights[s]) * duals.values()(static_cast<Eigen::Index>(s)) * prods[s];
  return sum;
}

/// sum_s p_LM(s) ln(-nu_s).
template <typename Scalar>
Scalar dual_barrier(const DualVariables<Scalar>& duals, const NGramModel& lm) {
  Scalar b = Scalar(0);
  for (std::size_t s = 0; s < lm.support_size(); ++s)
    b += static_cast<Scalar>(lm.support_probs()[s]) * std::log(-duals.values()(static_cast<Eigen::Index>(s)));
  return b;
}

/// L(theta, V) = (1/T) sum_t L_t + sum_s p_LM(s) (1 + ln(-nu_s)).
/// The constant keeps L(theta, -1/p̄) equal to J(theta); it has no effect on gradients.
template <typename Scalar>
Scalar lagrangian(const LinearClassifier<Scalar>& model, const DualVariables<Scalar>& duals,
                  const SequenceDataset<Scalar>& data, const NGramModel& lm) {
  if (duals.order() != lm.order() || duals.size() != static_cast<Eigen::Index>(lm.support_size()))
    throw Error("duals do not match the prior");
  duals.check_negative();
  const auto pbar = support_frequency(model, data, lm);
  Scalar sum = Scalar(0);
  for (std::size_t s = 0; s < lm.support_size(); ++s) {
    const auto i = static_cast<Eigen::Index>(s);
    sum += static_cast<Scalar>(lm.support_probs()[s]) * duals.values()(i) * pbar(i);
  }
  return sum + Scalar(1) + dual_barrier(duals, lm);
}

template <typename Scalar>
struct SaddleGradient {
  typename LinearClassifier<Scalar>::Matrix theta;
  typename LinearClassifier<Scalar>::Vector duals;
};

/// Minibatch gradients of L: the window average of dL_t/dtheta and dL_t/dV,
/// plus the barrier term p_LM / nu for V. Unbiased for uniform window sampling.
template <typename Scalar>
SaddleGradient<Scalar> stochastic_grads(const LinearClassifier<Scalar>& model, const DualVariables<Scalar>& duals,
                                        const SequenceDataset<Scalar>& data, const TupleTable& table,
                                        std::span<const Window> batch) {
  using Matrix = typename LinearClassifier<Scalar>::Matrix;
  using Vector = typename LinearClassifier<Scalar>::Vector;
  if (batch.empty()) throw Error("empty minibatch");
  const int order = table.order;
  const auto inv_b = Scalar(1) / static_cast<Scalar>(batch.size());

  std::vector<Scalar> coef(table.size());
  for (std::size_t s = 0; s < table.size(); ++s)
    coef[s] = static_cast<Scalar>(table.weights[s]) * duals.values()(static_cast<Eigen::Index>(s)) * inv_b;

  SaddleGradient<Scalar> out{Matrix::Zero(model.classes(), model.dim()), Vector::Zero(duals.size())};
  std::vector<Scalar> prods(table.size());
  Matrix g(model.classes(), order);
  for (const auto& w : batch) {
    const auto x = data.features[w.sequence].middleCols(w.end - order + 1, order);
    const Matrix post = posteriors(model, x);
    detail::window_products(post, table, std::span<Scalar>(prods));
    for (std::size_t s = 0; s < table.size(); ++s) out.duals(static_cast<Eigen::Index>(s)) += prods[s];
    g.setZero();
    detail::window_backward(post, table, std::span<const Scalar>(coef), g);
    out.theta += detail::backprop_to_weights(model, post, g, x);
  }
  for (std::size_t s = 0; s < table.size(); ++s) {
    const auto i = static_cast<Eigen::Index>(s);
    const auto p = static_cast<Scalar>(table.weights[s]);
    out.duals(i) = p * out.duals(i) * inv_b + p / duals.values()(i);
  }
  return out;
}

/// Exact gradients of L (every window, once).
template <typename Scalar>
SaddleGradient<Scalar> lagrangian_gradient(const LinearClassifier<Scalar>& model, const DualVariables<Scalar>& duals,
                                           const SequenceDataset<Scalar>& data, const NGramModel& lm) {
  const auto windows = enumerate_windows(data, lm.order());
  return stochastic_grads(model, duals, data, support_table(lm), std::span<const Window>(windows));
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moment accumulators for one parameter block.
template <typename MatrixType>
class Adam {
 public:
  using Scalar = typename MatrixType::Scalar;

  Adam() = default;
  Adam(Eigen::Index rows, Eigen::Index cols, AdamConfig config)
      : config_(config), m_(MatrixType::Zero(rows, cols)), v_(MatrixType::Zero(rows, cols)) {}

  /// param -= lr * m_hat / (sqrt(v_hat) + eps)
  template <typename P, typename G>
  void descend(Eigen::MatrixBase<P>& param, const Eigen::MatrixBase<G>& grad, double lr) {
    ++t_;
    const auto b1 = static_cast<Scalar>(config_.beta1), b2 = static_cast<Scalar>(config_.beta2);
    m_ = b1 * m_ + (Scalar(1) - b1) * grad;
    v_ = b2 * v_ + (Scalar(1) - b2) * grad.cwiseAbs2();
    const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(t_));
    const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(t_));
    param -= (static_cast<Scalar>(lr) * (m_.array() / c1) /
              ((v_.array() / c2).sqrt() + static_cast<Scalar>(config_.epsilon)))
                 .matrix();
  }

  long steps() const { return t_; }

 private:
  AdamConfig config_;
  MatrixType m_;
  MatrixType v_;
  long t_ = 0;
};

struct TrainConfig {
  double mu_theta = 1e-6;
  double mu_v = 1e-4;
  int batch = 64;
  long steps = 1000;
  std::uint64_t seed = 0;
  AdamConfig adam;
  /// Initial value of every weight; NaN means 1/d.
  double w_init = std::numeric_limits<double>::quiet_NaN();
  double gamma = 10.0;
  double dual_init_lo = -1.0;
  double dual_init_hi = 0.0;
  double nu_ceiling = -1e-8;
  /// Metrics are logged every `eval_every` steps and at the last step.
  long eval_every = 1000;
  /// Stop when the moving average of J has not improved for this many evaluations (0 = never).
  int early_stop_patience = 0;
  /// Biased-SGD baseline only: use every window every step.
  bool full_batch = false;
  /// Re-verify dual negativity after every update.
  bool check_duals = false;

  void validate() const {
    if (steps < 0) throw Error("steps must be >= 0");
    if (batch < 1) throw Error("batch must be >= 1");
    if (!(dual_init_lo < dual_init_hi) || !(dual_init_hi <= 0.0)) throw Error("dual init range must be negative");
    if (!(nu_ceiling < 0.0)) throw Error("nu_ceiling must be negative");
    if (!(gamma > 0.0)) throw Error("gamma must be positive");
    if (!(mu_theta >= 0.0) || !(mu_v >= 0.0)) throw Error("learning rates must be >= 0");
    if (eval_every < 1) throw Error("eval_every must be >= 1");
  }
};

struct EvalMetrics {
  std::optional<double> train_error;
  std::optional<double> test_error;
};

struct MetricRow {
  long step = 0;
  double j = 0;
  double l = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> train_error;
  std::optional<double> test_error;
  double grad_norm_theta = 0;
  double grad_norm_v = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0;
};

void write_metrics_csv(const std::vector<MetricRow>& log, const std::filesystem::path& path);

template <typename Scalar>
using EvalHook = std::function<EvalMetrics(const LinearClassifier<Scalar>&)>;

template <typename Scalar>
struct TrainResult {
  LinearClassifier<Scalar> model;
  std::optional<DualVariables<Scalar>> duals;
  std::vector<MetricRow> log;
  long steps_run = 0;
  bool stopped_early = false;
};

namespace detail {

template <typename Scalar>
LinearClassifier<Scalar> initial_model(const TrainConfig& config, const SequenceDataset<Scalar>& data) {
  const double w = std::isnan(config.w_init) ? 1.0 / data.dim : config.w_init;
  return LinearClassifier<Scalar>::constant(data.classes(), data.dim, static_cast<Scalar>(w),
                                            static_cast<Scalar>(config.gamma));
}

inline void sample_batch(const std::vector<Window>& windows, int batch, Rng& rng, std::vector<Window>& out) {
  std::uniform_int_distribution<std::size_t> pick(0, windows.size() - 1);
  out.resize(static_cast<std::size_t>(batch));
  for (auto& w : out) w = windows[pick(rng)];
}

/// Moving-average stall detector for early stopping.
class StallDetector {
 public:
  explicit StallDetector(int patience) : patience_(patience) {}
  bool update(double j) {
    if (patience_ <= 0) return false;
    recent_.push_back(j);
    if (recent_.size() > 5) recent_.erase(recent_.begin());
    double avg = 0;
    for (double v : recent_) avg += v;
    avg /= static_cast<double>(recent_.size());
    if (avg < best_ - 1e-9 * std::max(1.0, std::fabs(best_))) {
      best_ = avg;
      stalled_ = 0;
      return false;
    }
    return ++stalled_ >= patience_;
  }

 private:
  int patience_;
  std::vector<double> recent_;
  double best_ = std::numeric_limits<double>::infinity();
  int stalled_ = 0;
};

template <typename Scalar>
class MetricLogger {
 public:
  MetricLogger(const SequenceDataset<Scalar>& data, const NGramModel& lm, const EvalHook<Scalar>& hook)
      : data_(data), lm_(lm), hook_(hook), start_(std::chrono::steady_clock::now()) {}

  MetricRow log(long step, const LinearClassifier<Scalar>& model, const DualVariables<Scalar>* duals,
                double grad_theta, double grad_v) {
    MetricRow row;
    row.step = step;
    row.j = static_cast<double>(empirical_odm_cost(model, data_, lm_));
    if (duals) row.l = static_cast<double>(lagrangian(model, *duals, data_, lm_));
    if (!std::isfinite(row.j) || (duals && !std::isfinite(row.l)))
      throw DivergenceError("non-finite cost at step " + std::to_string(step) + " (J=" + std::to_string(row.j) +
                            ", L=" + std::to_string(row.l) + ")");
    if (hook_) {
      const EvalMetrics m = hook_(model);
      row.train_error = m.train_error;
      row.test_error = m.test_error;
    }
    row.grad_norm_theta = grad_theta;
    row.grad_norm_v = grad_v;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    rows_.push_back(row);
    return row;
  }

  std::vector<MetricRow>& rows() { return rows_; }

 private:
  const SequenceDataset<Scalar>& data_;
  const NGramModel& lm_;
  const EvalHook<Scalar>& hook_;
  std::chrono::steady_clock::time_point start_;
  std::vector<MetricRow> rows_;
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& g, long step, const char* what) {
  if (!g.allFinite()) throw DivergenceError(std::string("non-finite ") + what + " at step " + std::to_string(step));
}

}  // namespace detail

/// Stochastic primal-dual gradient training: Adam descent on W and Adam ascent
/// on the duals over uniformly sampled windows (with replacement). Duals are
/// clamped to at most nu_ceiling after every update. Labels in `data` are ignored.
template <typename Scalar>
TrainResult<Scalar> spdg_train(const TrainConfig& config, const SequenceDataset<Scalar>& data, const NGramModel& lm,
                               const EvalHook<Scalar>& hook = {},
                               std::optional<LinearClassifier<Scalar>> init = std::nullopt) {
  using Matrix = typename LinearClassifier<Scalar>::Matrix;
  using Vector = typename LinearClassifier<Scalar>::Vector;
  config.validate();
  if (lm.classes() != data.classes()) throw Error("prior and dataset disagree on the class count");
  const auto windows = enumerate_windows(data, lm.order());
  if (windows.empty()) throw Error("no valid windows");
  const TupleTable table = support_table(lm);

  TrainResult<Scalar> result{init ? *init : detail::initial_model(config, data), std::nullopt, {}, 0, false};
  auto& model = result.model;
  Rng dual_rng = make_rng(config.seed, "spdg.dual_init");
  DualVariables<Scalar> duals = DualVariables<Scalar>::uniform(
      lm, static_cast<Scalar>(config.dual_init_lo), static_cast<Scalar>(config.dual_init_hi),
      static_cast<Scalar>(config.nu_ceiling), dual_rng);
  Adam<Matrix> adam_theta(model.classes(), model.dim(), config.adam);
  Adam<Vector> adam_v(duals.size(), 1, config.adam);
  Rng rng = make_rng(config.seed, "spdg.sampling");
  detail::MetricLogger<Scalar> logger(data, lm, hook);
  detail::StallDetector stall(config.early_stop_patience);
  const auto ceiling = static_cast<Scalar>(config.nu_ceiling);

  logger.log(0, model, &duals, 0.0, 0.0);
  std::vector<Window> batch;
  for (long step = 1; step <= config.steps; ++step) {
    detail::sample_batch(windows, config.batch, rng, batch);
    const auto grad = stochastic_grads(model, duals, data, table, std::span<const Window>(batch));
    detail::require_finite(grad.theta, step, "primal gradient");
    detail::require_finite(grad.duals, step, "dual gradient");
    adam_theta.descend(model.weights(), grad.theta, config.mu_theta);
    detail::require_finite(model.weights(), step, "weights");
    const Vector ascent = -grad.duals;
    adam_v.descend(duals.values(), ascent, config.mu_v);
    duals.values() = duals.values().cwiseMin(ceiling);
    detail::require_finite(duals.values(), step, "duals");
    if (config.check_duals) duals.check_negative();
    result.steps_run = step;
    if (step % config.eval_every == 0 || step == config.steps) {
      const auto row = logger.log(step, model, &duals, static_cast<double>(grad.theta.norm()),
                                  static_cast<double>(grad.duals.norm()));
      if (stall.update(row.j)) {
        result.stopped_early = true;
        break;
      }
    }
  }
  result.duals = std::move(duals);
  result.log = std::move(logger.rows());
  return result;
}

/// Plain SGD (Adam) on J using the fully sampled ratio estimator, whose
/// denominator comes from the minibatch. With full_batch the estimator is exact.
template <typename Scalar>
TrainResult<Scalar> sgd_biased_train(const TrainConfig& config, const SequenceDataset<Scalar>& data,
                                     const NGramModel& lm, const EvalHook<Scalar>& hook = {}) {
  using Matrix = typename LinearClassifier<Scalar>::Matrix;
  config.validate();
  if (lm.classes() != data.classes()) throw Error("prior and dataset disagree on the class count");
  const auto windows = enumerate_windows(data, lm.order());
  if (windows.empty()) throw Error("no valid windows");
  const TupleTable table = support_table(lm);

  TrainResult<Scalar> result{detail::initial_model(config, data), std::nullopt, {}, 0, false};
  auto& model = result.model;
  Adam<Matrix> adam(model.classes(), model.dim(), config.adam);
  Rng rng = make_rng(config.seed, "sgd.sampling");
  detail::MetricLogger<Scalar> logger(data, lm, hook);
  detail::StallDetector stall(config.early_stop_patience);

  logger.log(0, model, nullptr, 0.0, std::numeric_limits<double>::quiet_NaN());
  std::vector<Window> batch;
  for (long step = 1; step <= config.steps; ++step) {
    Matrix grad;
    if (config.full_batch) {
      grad = odm_full_gradient(model, data, lm);
    } else {
      detail::sample_batch(windows, config.batch, rng, batch);
      grad = odm_gradient_estimate<Scalar>(model, data, table, std::span<const Window>(batch), nullptr);
    }
    detail::require_finite(grad, step, "primal gradient");
    adam.descend(model.weights(), grad, config.mu_theta);
    detail::require_finite(model.weights(), step, "weights");
    result.steps_run = step;
    if (step % config.eval_every == 0 || step == config.steps) {
      const auto row = logger.log(step, model, nullptr, static_cast<double>(grad.norm()),
                                  std::numeric_limits<double>::quiet_NaN());
      if (stall.update(row.j)) {
        result.stopped_early = true;
        break;
      }
    }
  }
  result.log = std::move(logger.rows());
  return result;
}

/// Minibatch Adam on the mode-seeking (expected negative log-likelihood) cost.
template <typename Scalar>
TrainResult<Scalar> mode_seeking_train(const TrainConfig& config, const SequenceDataset<Scalar>& data,
                                       const NGramModel& lm, const EvalHook<Scalar>& hook = {},
                                       std::optional<LinearClassifier<Scalar>> init = std::nullopt) {
  using Matrix = typename LinearClassifier<Scalar>::Matrix;
  config.validate();
  if (lm.classes() != data.classes()) throw Error("prior and dataset disagree on the class count");
  const auto windows = enumerate_windows(data, lm.order());
  if (windows.empty()) throw Error("no valid windows");
  const auto tables = mode_seeking_tables(lm);

  TrainResult<Scalar> result{init ? *init : detail::initial_model(config, data), std::nullopt, {}, 0, false};
  auto& model = result.model;
  Adam<Matrix> adam(model.classes(), model.dim(), config.adam);
  Rng rng = make_rng(config.seed, "mode_seeking.sampling");
  detail::MetricLogger<Scalar> logger(data, lm, hook);

  logger.log(0, model, nullptr, 0.0, std::numeric_limits<double>::quiet_NaN());
  std::vector<Window> batch;
  for (long step = 1; step <= config.steps; ++step) {
    detail::sample_batch(windows, config.batch, rng, batch);
    const Matrix grad = mode_seeking_gradient(model, data, tables.scored, std::span<const Window>(batch));
    detail::require_finite(grad, step, "primal gradient");
    adam.descend(model.weights(), grad, config.mu_theta);
    detail::require_finite(model.weights(), step, "weights");
    result.steps_run = step;
    if (step % config.eval_every == 0 || step == config.steps)
      logger.log(step, model, nullptr, static_cast<double>(grad.norm()), std::numeric_limits<double>::quiet_NaN());
  }
  result.log = std::move(logger.rows());
  return result;
}

struct SupervisedConfig {
  long max_steps = 2000;
  /// Initial step for the backtracking line search.
  double lr = 1.0;
  /// L2 penalty (l2 / 2) ||W||^2; keeps the optimum finite on separable data.
  double l2 = 1e-3;
  /// Stop once ||grad|| < tolerance.
  double tolerance = 1e-4;
  double gamma = 10.0;
  /// When false, every step uses exactly `lr`.
  bool backtracking = true;
};

template <typename Scalar>
struct SupervisedResult {
  LinearClassifier<Scalar> model;
  std::vector<double> loss_history;
  double grad_norm = 0;
  long steps = 0;
};

/// Mean per-position softmax cross-entropy plus the L2 term, and its gradient.
template <typename Scalar>
std::pair<Scalar, typename LinearClassifier<Scalar>::Matrix> supervised_loss(
    const LinearClassifier<Scalar>& model, const typename LinearClassifier<Scalar>::Matrix& x,
    const std::vector<ClassId>& y, double l2) {
  using Matrix = typename LinearClassifier<Scalar>::Matrix;
  Matrix post = posteriors(model, x);
  Scalar loss = Scalar(0);
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    loss -= std::log(std::max(post(y[static_cast<std::size_t>(t)], t), static_cast<Scalar>(kProbFloor)));
    post(y[static_cast<std::size_t>(t)], t) -= Scalar(1);
  }
  const auto count = static_cast<Scalar>(x.cols());
  const auto lambda = static_cast<Scalar>(l2);
  loss = loss / count + lambda / 2 * model.weights().squaredNorm();
  Matrix grad = model.gamma() / count * (post * x.transpose()) + lambda * model.weights();
  return {loss, std::move(grad)};
}

/// Full-batch gradient descent on the convex supervised objective.
template <typename Scalar>
SupervisedResult<Scalar> supervised_train(const SequenceDataset<Scalar>& data, const SupervisedConfig& config,
                                          std::optional<LinearClassifier<Scalar>> init = std::nullopt) {
  using Matrix = typename LinearClassifier<Scalar>::Matrix;
  if (!data.has_labels()) throw Error("supervised training needs labels");
  Matrix x(data.dim, data.total_positions());
  std::vector<ClassId> y;
  y.reserve(static_cast<std::size_t>(x.cols()));
  Eigen::Index col = 0;
  for (std::size_t n = 0; n < data.num_sequences(); ++n) {
    x.middleCols(col, data.features[n].cols()) = data.features[n];
    col += data.features[n].cols();
    y.insert(y.end(), (*data.labels)[n].begin(), (*data.labels)[n].end());
  }
  if (x.cols() == 0) throw Error("no labeled positions");

  SupervisedResult<Scalar> out{init ? *init
                                    : LinearClassifier<Scalar>(Matrix::Zero(data.classes(), data.dim),
                                                               static_cast<Scalar>(config.gamma)),
                               {}, 0, 0};
  auto [loss, grad] = supervised_loss(out.model, x, y, config.l2);
  out.loss_history.push_back(static_cast<double>(loss));
  double lr = config.lr;
  for (long step = 0; step < config.max_steps; ++step) {
    const auto gnorm2 = grad.squaredNorm();
    out.grad_norm = std::sqrt(static_cast<double>(gnorm2));
    if (out.grad_norm < config.tolerance) break;
    LinearClassifier<Scalar> trial = out.model;
    while (true) {
      trial.weights() = out.model.weights() - static_cast<Scalar>(lr) * grad;
      auto [trial_loss, trial_grad] = supervised_loss(trial, x, y, config.l2);
      const bool accept = !config.backtracking ||
                          trial_loss <= loss - static_cast<Scalar>(1e-4 * lr) * gnorm2 ||
                          lr < 1e-12;
      if (accept) {
        out.model = std::move(trial);
        loss = trial_loss;
        grad = std::move(trial_grad);
        break;
      }
      lr *= 0.5;
    }
    if (config.backtracking) lr *= 1.5;
    out.loss_history.push_back(static_cast<double>(loss));
    out.steps = step + 1;
  }
  out.grad_norm = static_cast<double>(grad.norm());
  return out;
}

/// The constant predictor and its error.
struct MajorityBaseline {
  ClassId predicted = 0;
  double error = 0;
};

/// Most probable class under the prior's unigram marginal (smallest id on ties).
inline ClassId majority_class(const NGramModel& lm) {
  const Eigen::VectorXd u = lm.unigram();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < u.size(); ++i)
    if (u(i) > u(best)) best = i;
  return static_cast<ClassId>(best);
}

inline ClassId majority_class(const std::vector<IdSequence>& labels, int classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
  for (const auto& seq : labels)
    for (ClassId c : seq) ++counts.at(static_cast<std::size_t>(c));
  return static_cast<ClassId>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

inline double constant_predictor_error(ClassId predicted, const std::vector<IdSequence>& labels) {
  std::size_t wrong = 0, total = 0;
  for (const auto& seq : labels)
    for (ClassId c : seq) {
      wrong += c != predicted;
      ++total;
    }
  if (total == 0) throw Error("no labeled positions");
  return static_cast<double>(wrong) / static_cast<double>(total);
}

inline MajorityBaseline majority_baseline(const NGramModel& lm, const std::vector<IdSequence>& eval_labels) {
  const ClassId c = majority_class(lm);
  return {c, constant_predictor_error(c, eval_labels)};
}

inline MajorityBaseline majority_baseline(const std::vector<IdSequence>& labels, int classes) {
  const ClassId c = majority_class(labels, classes);
  return {c, constant_predictor_error(c, labels)};
}

/// Constant-weight model with `margin` added to every weight of row `predicted`.
/// On inputs whose entries sum to a positive value (e.g. the cipher prototypes)
/// it outputs `predicted` everywhere: the trivial mode-of-the-prior solution.
template <typename Scalar>
LinearClassifier<Scalar> constant_output_model(int classes, int dim, ClassId predicted, Scalar gamma, Scalar margin,
                                               Scalar w_init) {
  auto model = LinearClassifier<Scalar>::constant(classes, dim, w_init, gamma);
  model.weights().row(predicted).array() += margin;
  return model;
}

}  // namespace odm
