#pragma once

#include "scm/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace scm {

/// Full parameter set of a supervised cadre model with M cadres:
/// per-cadre centers, the shared feature-relevance vector d, per-cadre
/// regression weights and intercepts, and the noise variance.
struct CadreParams {
  Matrix centers;     // P_C x M, column m is cadre m's center
  Vector d;           // P_C, cadre-assignment feature relevance
  Matrix weights;     // P_T x M, column m is cadre m's regression weights
  Vector intercepts;  // M
  double sigma2 = 1.0;
  std::vector<Index> cadre_feature_idx;   // size P_C, columns used for assignment
  std::vector<Index> target_feature_idx;  // size P_T, columns used for prediction

  Index cadres() const { return centers.cols(); }
  Index cadre_features() const { return centers.rows(); }
  Index target_features() const { return weights.rows(); }
};

inline std::vector<Index> all_feature_indices(Index p) {
  std::vector<Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

inline void validate(const CadreParams& params, Index p_total) {
  const Index m = params.cadres();
  if (m < 1) throw Error("cadre params: need at least one cadre");
  if (!(params.sigma2 > 0.0)) throw Error("cadre params: sigma2 must be positive");
  if (params.d.size() != params.cadre_features())
    throw Error("cadre params: d length does not match center rows");
  if (params.weights.cols() != m || params.intercepts.size() != m)
    throw Error("cadre params: weight/intercept cadre count mismatch");
  auto check_idx = [p_total](const std::vector<Index>& idx, Index expected, const char* what) {
    if (static_cast<Index>(idx.size()) != expected)
      throw Error(std::string("cadre params: ") + what + " index count mismatch");
    std::vector<Index> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error(std::string("cadre params: duplicate ") + what + " index");
    if (!sorted.empty() && (sorted.front() < 0 || sorted.back() >= p_total))
      throw Error(std::string("cadre params: ") + what + " index out of range");
  };
  check_idx(params.cadre_feature_idx, params.cadre_features(), "cadre-feature");
  check_idx(params.target_feature_idx, params.target_features(), "target-feature");
}

/// Learning-problem hyperparameters. The elastic-net mixing weights default
/// to a strongly L1 assignment penalty and a mostly L2 prediction penalty.
struct Hyperparams {
  double gamma = 1.0;
  double lambda_d = 0.0;
  double lambda_w = 0.0;
  double alpha_d = 0.95;
  double alpha_w = 0.05;
  int cadres = 1;
};

inline void validate(const Hyperparams& hp) {
  if (!(hp.gamma > 0.0)) throw Error("hyperparams: gamma must be positive");
  if (hp.lambda_d < 0.0 || hp.lambda_w < 0.0)
    throw Error("hyperparams: lambda values must be nonnegative");
  if (hp.alpha_d < 0.0 || hp.alpha_d > 1.0 || hp.alpha_w < 0.0 || hp.alpha_w > 1.0)
    throw Error("hyperparams: alpha values must lie in [0, 1]");
  if (hp.cadres < 1) throw Error("hyperparams: need at least one cadre");
}

/// Weighted squared seminorm distance sum_p |d_p| (x_p - c_p)^2.
inline double seminorm_sq(const Vector& x, const Vector& c, const Vector& d) {
  if (x.size() != c.size() || x.size() != d.size())
    throw Error("seminorm_sq: length mismatch");
  return (d.array().abs() * (x.array() - c.array()).square()).sum();
}

/// Numerically stable softmax (max-subtraction in log space).
inline Vector stable_softmax(const Vector& scores) {
  const double m = scores.maxCoeff();
  Vector e = (scores.array() - m).exp();
  return e / e.sum();
}

inline Matrix rowwise_softmax(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (Index i = 0; i < scores.rows(); ++i)
    out.row(i) = stable_softmax(scores.row(i).transpose()).transpose();
  return out;
}

namespace detail {

// Squared seminorm distances from each row of X (already restricted to cadre
// features) to every center: N x M.
inline Matrix cadre_distances(const Matrix& x_cadre, const CadreParams& params) {
  const Index n = x_cadre.rows();
  const Index m = params.cadres();
  const Vector dabs = params.d.array().abs();
  Matrix dist(n, m);
  for (Index j = 0; j < m; ++j) {
    Matrix diff = x_cadre.rowwise() - params.centers.col(j).transpose();
    dist.col(j) = diff.array().square().matrix() * dabs;
  }
  return dist;
}

}  // namespace detail

/// Membership probabilities for a batch: row n is the softmax of
/// -gamma * ||x_n - c^m||_d^2 over cadres m.
inline Matrix membership_matrix(const Matrix& x, const CadreParams& params, double gamma) {
  const Matrix x_cadre = select_columns(x, params.cadre_feature_idx);
  return rowwise_softmax(-gamma * detail::cadre_distances(x_cadre, params));
}

inline Vector membership(const Vector& x, const CadreParams& params, double gamma) {
  return membership_matrix(x.transpose(), params, gamma).row(0).transpose();
}

/// Per-cadre affine predictions for a batch: N x M with entry (n, m) = e_m(x_n).
inline Matrix cadre_predictions(const Matrix& x, const CadreParams& params) {
  const Matrix x_target = select_columns(x, params.target_feature_idx);
  return (x_target * params.weights).rowwise() + params.intercepts.transpose();
}

inline double predict_cadre(const Vector& x, const CadreParams& params, Index m) {
  if (m < 0 || m >= params.cadres()) throw Error("predict_cadre: cadre index out of range");
  const Vector x_target = select_entries(x, params.target_feature_idx);
  return params.weights.col(m).dot(x_target) + params.intercepts(m);
}

/// Model prediction f(x): membership-weighted combination of the per-cadre
/// affine models, hence always within [min_m e_m(x), max_m e_m(x)].
inline double predict(const Vector& x, const CadreParams& params, double gamma) {
  const Vector g = membership(x, params, gamma);
  const Matrix e = cadre_predictions(x.transpose(), params);
  return g.dot(e.row(0).transpose());
}

inline Vector predict_all(const Matrix& x, const CadreParams& params, double gamma) {
  const Matrix g = membership_matrix(x, params, gamma);
  const Matrix e = cadre_predictions(x, params);
  return (g.array() * e.array()).rowwise().sum();
}

/// Most likely cadre; exact ties resolve to the lowest index.
inline Index assign(const Vector& x, const CadreParams& params, double gamma) {
  const Vector g = membership(x, params, gamma);
  Index best = 0;
  for (Index m = 1; m < g.size(); ++m)
    if (g(m) > g(best)) best = m;
  return best;
}

inline std::vector<Index> assign_all(const Matrix& x, const CadreParams& params, double gamma) {
  const Matrix g = membership_matrix(x, params, gamma);
  std::vector<Index> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    Index best = 0;
    for (Index m = 1; m < g.cols(); ++m)
      if (g(i, m) > g(i, best)) best = m;
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

}  // namespace scm
