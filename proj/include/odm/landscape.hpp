#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "odm/cost.hpp"
#include "odm/spdg.hpp"

namespace odm {

/// nu* = -1 / p̄_theta(s) on every supported tuple, the maximizer of L(theta, .).
template <typename Scalar>
DualVariables<Scalar> dual_closed_form(const LinearClassifier<Scalar>& model, const SequenceDataset<Scalar>& data,
                                       const NGramModel& lm) {
  const auto pbar = support_frequency(model, data, lm);
  const auto floor = static_cast<Scalar>(kProbFloor);
  typename DualVariables<Scalar>::Vector nu(pbar.size());
  for (Eigen::Index i = 0; i < pbar.size(); ++i) nu(i) = Scalar(-1) / std::max(pbar(i), floor);
  return DualVariables<Scalar>(lm, std::move(nu));
}

/// Evenly spaced axis. Each point is lo + (hi - lo) * i / (n - 1), so refining
/// from n to 2n - 1 points reproduces the shared points bit for bit.
struct AxisSpec {
  double lo = -2.0;
  double hi = 2.0;
  int points = 41;

  std::vector<double> values() const {
    if (points < 1) throw Error("axis needs at least one point");
    if (points == 1) return {lo};
    std::vector<double> v(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
    return v;
  }
};

struct GridSpec {
  AxisSpec axis1;
  AxisSpec axis2;
};

/// values(i, j) is the cost at (lambda1[i], lambda2[j]). Flagged cells hold NaN.
struct ProfileGrid {
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  Eigen::MatrixXd values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> flagged;
  std::string anchor;

  std::size_t flagged_count() const { return static_cast<std::size_t>(flagged.count()); }
};

/// theta* + ||theta*|| g / ||g|| for a standard Gaussian g, so that
/// ||theta_i - theta*|| = ||theta*||.
template <typename Scalar>
LinearClassifier<Scalar> random_direction(const LinearClassifier<Scalar>& theta_star, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  typename LinearClassifier<Scalar>::Matrix g(theta_star.classes(), theta_star.dim());
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = static_cast<Scalar>(normal(rng));
  const Scalar scale = theta_star.weights().norm() / g.norm();
  return LinearClassifier<Scalar>(theta_star.weights() + scale * g, theta_star.gamma());
}

/// Duals drawn uniform on (-2, -1e-3), one per supported tuple.
template <typename Scalar>
DualVariables<Scalar> random_dual_direction(const NGramModel& lm, Rng& rng) {
  return DualVariables<Scalar>::uniform(lm, Scalar(-2), Scalar(-1e-3), Scalar(-1e-3), rng);
}

namespace detail {

template <typename Scalar>
LinearClassifier<Scalar> affine(const LinearClassifier<Scalar>& base, const LinearClassifier<Scalar>& a, double la,
                                const LinearClassifier<Scalar>* b = nullptr, double lb = 0.0) {
  typename LinearClassifier<Scalar>::Matrix w =
      base.weights() + static_cast<Scalar>(la) * (a.weights() - base.weights());
  if (b) w += static_cast<Scalar>(lb) * (b->weights() - base.weights());
  return LinearClassifier<Scalar>(std::move(w), base.gamma());
}

/// V* + l (V1 - V*), or nullopt if some entry is not negative.
template <typename Scalar>
std::optional<DualVariables<Scalar>> affine_duals(const NGramModel& lm, const DualVariables<Scalar>& v_star,
                                                  const DualVariables<Scalar>& v1, double l) {
  typename DualVariables<Scalar>::Vector v = v_star.values() + static_cast<Scalar>(l) * (v1.values() - v_star.values());
  if (!(v.array() < Scalar(0)).all()) return std::nullopt;
  return DualVariables<Scalar>(lm, std::move(v));
}

}  // namespace detail

/// J(theta* + l1 (theta1 - theta*) + l2 (theta2 - theta*)) on the grid.
template <typename Scalar>
ProfileGrid profile_J(const SequenceDataset<Scalar>& data, const NGramModel& lm,
                      const LinearClassifier<Scalar>& theta_star, const LinearClassifier<Scalar>& theta1,
                      const LinearClassifier<Scalar>& theta2, const GridSpec& spec) {
  ProfileGrid g{spec.axis1.values(), spec.axis2.values(), {}, {}, "J(theta* + l1 (theta1 - theta*) + l2 (theta2 - theta*))"};
  const auto n1 = static_cast<Eigen::Index>(g.lambda1.size());
  const auto n2 = static_cast<Eigen::Index>(g.lambda2.size());
  g.values.resize(n1, n2);
  g.flagged.setConstant(n1, n2, false);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j) {
      const auto m = detail::affine(theta_star, theta1, g.lambda1[static_cast<std::size_t>(i)], &theta2,
                                    g.lambda2[static_cast<std::size_t>(j)]);
      g.values(i, j) = static_cast<double>(empirical_odm_cost(m, data, lm));
    }
  return g;
}

/// L(theta* + lp (theta1 - theta*), V* + ld (V1 - V*)); axis1 is lp, axis2 is ld.
/// Cells where some dual would be non-negative are flagged and hold NaN.
template <typename Scalar>
ProfileGrid profile_L(const SequenceDataset<Scalar>& data, const NGramModel& lm,
                      const LinearClassifier<Scalar>& theta_star, const DualVariables<Scalar>& v_star,
                      const LinearClassifier<Scalar>& theta1, const DualVariables<Scalar>& v1, const GridSpec& spec) {
  ProfileGrid g{spec.axis1.values(), spec.axis2.values(), {}, {}, "L(theta* + lp (theta1 - theta*), V* + ld (V1 - V*))"};
  const auto n1 = static_cast<Eigen::Index>(g.lambda1.size());
  const auto n2 = static_cast<Eigen::Index>(g.lambda2.size());
  g.values.resize(n1, n2);
  g.flagged.setConstant(n1, n2, false);
  for (Eigen::Index j = 0; j < n2; ++j) {
    const auto v = detail::affine_duals(lm, v_star, v1, g.lambda2[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < n1; ++i) {
      if (!v) {
        g.values(i, j) = std::numeric_limits<double>::quiet_NaN();
        g.flagged(i, j) = true;
        continue;
      }
      const auto m = detail::affine(theta_star, theta1, g.lambda1[static_cast<std::size_t>(i)]);
      g.values(i, j) = static_cast<double>(lagrangian(m, *v, data, lm));
    }
  }
  return g;
}

struct LineRow {
  double lambda;
  double j;
  double l;
};

/// J and L(., V*) along theta* + lp (theta1 - theta*), with V* the closed-form
/// duals at theta*. At lp = 0 both columns equal J(theta*).
template <typename Scalar>
std::vector<LineRow> line_profile(const SequenceDataset<Scalar>& data, const NGramModel& lm,
                                  const LinearClassifier<Scalar>& theta_star, const LinearClassifier<Scalar>& theta1,
                                  const std::vector<double>& lambdas) {
  const auto v_star = dual_closed_form(theta_star, data, lm);
  std::vector<LineRow> rows;
  rows.reserve(lambdas.size());
  for (double lp : lambdas) {
    const auto m = detail::affine(theta_star, theta1, lp);
    rows.push_back({lp, static_cast<double>(empirical_odm_cost(m, data, lm)),
                    static_cast<double>(lagrangian(m, v_star, data, lm))});
  }
  return rows;
}

/// Largest value of each column over rows with lambda in [lo, hi].
struct BarrierComparison {
  double max_j;
  double max_l;
  bool l_lower() const { return max_l <= max_j; }
};

inline BarrierComparison compare_barriers(const std::vector<LineRow>& rows, double lo, double hi) {
  BarrierComparison c{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& r : rows) {
    if (r.lambda < lo || r.lambda > hi) continue;
    c.max_j = std::max(c.max_j, r.j);
    c.max_l = std::max(c.max_l, r.l);
  }
  return c;
}

/// Dual-axis saddle check: every unflagged L(0, ld) with ld != 0 is at most L(0, 0).
/// Needs 0 on both axes.
inline bool dual_axis_max_at_origin(const ProfileGrid& g) {
  const auto find0 = [](const std::vector<double>& axis) {
    for (std::size_t i = 0; i < axis.size(); ++i)
      if (axis[i] == 0.0) return static_cast<Eigen::Index>(i);
    throw Error("grid axis does not contain 0");
  };
  const Eigen::Index i0 = find0(g.lambda1);
  const Eigen::Index j0 = find0(g.lambda2);
  for (Eigen::Index j = 0; j < g.values.cols(); ++j)
    if (!g.flagged(i0, j) && g.values(i0, j) > g.values(i0, j0)) return false;
  return true;
}

void write_profile_csv(const ProfileGrid& grid, const std::filesystem::path& path);
void write_line_csv(const std::vector<LineRow>& rows, const std::filesystem::path& path);

}  // namespace odm
