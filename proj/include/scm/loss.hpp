#pragma once

#include "scm/common.hpp"
#include "scm/model.hpp"

#include <cmath>
#include <string>

namespace scm {

/// Elastic-net penalty alpha * ||v||_1 + (1 - alpha) * ||v||_2^2 (no lambda).
inline double elastic_net(const Vector& v, double alpha) {
  return alpha * v.lpNorm<1>() + (1.0 - alpha) * v.squaredNorm();
}

inline double elastic_net(const Matrix& v, double alpha) {
  return alpha * v.lpNorm<1>() + (1.0 - alpha) * v.squaredNorm();
}

/// Additive pieces of the objective. `weighted_sse`, `penalty_d` and
/// `penalty_w` are stored before the common 1/(2 sigma^2) factor, so
///   total = (weighted_sse + penalty_d + penalty_w) / (2 sigma^2)
///         + (1 + n) * log(sigma^2).
struct LossBreakdown {
  double weighted_sse = 0.0;   // sum_n sum_m g_m(x_n) (y_n - e_m(x_n))^2, rescaled
  double log_sigma_term = 0.0; // (1 + n) * log(sigma^2)
  double penalty_d = 0.0;      // lambda_d * elastic_net(d, alpha_d)
  double penalty_w = 0.0;      // lambda_w * elastic_net(W, alpha_w)
  double total = 0.0;
  double sigma2 = 1.0;
  Index n = 0;                 // observation count used in the log term
};

/// Name of the first non-finite piece, or an empty string if all are finite.
/// Used to build actionable divergence messages during training.
inline std::string describe_nonfinite(const LossBreakdown& b) {
  if (!std::isfinite(b.weighted_sse)) return "weighted squared error";
  if (!std::isfinite(b.log_sigma_term)) return "log-variance term";
  if (!std::isfinite(b.penalty_d)) return "d penalty";
  if (!std::isfinite(b.penalty_w)) return "weight penalty";
  if (!std::isfinite(b.total)) return "total loss";
  return {};
}

/// Objective on a batch. `data_weight` rescales the squared-error sum (used
/// as N/|batch| for minibatches so its magnitude stays comparable to the
/// full-data penalties) and `n_for_log` is the observation count entering
/// the log-variance term (always the full training-set size).
inline LossBreakdown loss_scaled(const Matrix& x, const Vector& y, const CadreParams& params,
                                 const Hyperparams& hp, double data_weight, Index n_for_log) {
  if (x.rows() != y.size()) throw Error("loss: feature/target row count mismatch");
  if (x.rows() < 1) throw Error("loss: need at least one observation");

  const Matrix g = membership_matrix(x, params, hp.gamma);
  const Matrix e = cadre_predictions(x, params);
  const Matrix r = (-e).colwise() + y;  // r(n, m) = y_n - e_m(x_n)

  LossBreakdown b;
  b.sigma2 = params.sigma2;
  b.n = n_for_log;
  b.weighted_sse = data_weight * (g.array() * r.array().square()).sum();
  b.penalty_d = hp.lambda_d * elastic_net(params.d, hp.alpha_d);
  b.penalty_w = hp.lambda_w * elastic_net(params.weights, hp.alpha_w);
  b.log_sigma_term = (1.0 + static_cast<double>(n_for_log)) * std::log(params.sigma2);
  b.total = (b.weighted_sse + b.penalty_d + b.penalty_w) / (2.0 * params.sigma2)
          + b.log_sigma_term;
  return b;
}

inline LossBreakdown loss(const Matrix& x, const Vector& y, const CadreParams& params,
                          const Hyperparams& hp) {
  return loss_scaled(x, y, params, hp, 1.0, x.rows());
}

/// Gradient of the objective with respect to every trainable parameter.
/// The variance is trained through u = log(sigma^2), which keeps sigma^2
/// positive without constraints; `log_sigma2` is dL/du.
struct CadreGradient {
  Matrix centers;
  Vector d;
  Matrix weights;
  Vector intercepts;
  double log_sigma2 = 0.0;
};

inline CadreGradient gradient_scaled(const Matrix& x, const Vector& y, const CadreParams& params,
                                     const Hyperparams& hp, double data_weight, Index n_for_log) {
  if (x.rows() != y.size()) throw Error("gradient: feature/target row count mismatch");
  if (x.rows() < 1) throw Error("gradient: need at least one observation");

  const Matrix z = select_columns(x, params.cadre_feature_idx);   // N x P_C
  const Matrix t = select_columns(x, params.target_feature_idx);  // N x P_T
  const Matrix g = rowwise_softmax(-hp.gamma * detail::cadre_distances(z, params));
  const Matrix e = (t * params.weights).rowwise() + params.intercepts.transpose();
  const Matrix r = (-e).colwise() + y;

  const double inv2s = std::exp(-std::log(params.sigma2)) / 2.0;  // 1 / (2 sigma^2)
  const Vector dabs = params.d.array().abs();
  const Vector dsign = params.d.array().sign();  // subgradient 0 at exact zeros

  // Membership-weighted squared residuals and their per-row totals.
  const Matrix gr2 = g.array() * r.array().square();
  const Vector q = gr2.rowwise().sum();
  const double sse = gr2.sum();

  // Chain through the softmax: K(n, k) = dA/d(dist_nk) for
  // A = sum_{n,m} g_nm r_nm^2 with scores s = -gamma * dist.
  Matrix r2_minus_q = r.array().square().matrix();
  r2_minus_q.colwise() -= q;
  const Matrix k_mat = -hp.gamma * g.cwiseProduct(r2_minus_q);
  const Vector m0 = k_mat.colwise().sum();            // M
  const Matrix m1 = z.transpose() * k_mat;            // P_C x M
  const Matrix m2 = z.array().square().matrix().transpose() * k_mat;

  CadreGradient grad;

  // dA/dC(p, k) = -2 |d_p| (M1(p, k) - C(p, k) M0(k)).
  Matrix da_dc = -2.0 * (dabs.asDiagonal() * (m1 - params.centers * m0.asDiagonal()));
  grad.centers = (inv2s * data_weight) * da_dc;

  // dA/dd_p = sign(d_p) sum_k [M2 - 2 C .* M1 + C.^2 diag(M0)](p, k).
  Matrix d_terms = m2 - 2.0 * params.centers.cwiseProduct(m1)
                 + params.centers.array().square().matrix() * m0.asDiagonal();
  Vector da_dd = dsign.cwiseProduct(d_terms.rowwise().sum());
  Vector pen_d = hp.lambda_d
               * (hp.alpha_d * dsign + 2.0 * (1.0 - hp.alpha_d) * params.d);
  grad.d = inv2s * (data_weight * da_dd + pen_d);

  // dA/dW(:, m) = -2 sum_n g_nm r_nm t_n; intercepts drop the feature factor.
  const Matrix gr = g.cwiseProduct(r);
  Matrix pen_w = hp.lambda_w
               * (hp.alpha_w * params.weights.array().sign().matrix()
                  + 2.0 * (1.0 - hp.alpha_w) * params.weights);
  grad.weights = inv2s * (data_weight * (-2.0 * t.transpose() * gr) + pen_w);
  grad.intercepts = inv2s * data_weight * (-2.0 * gr.colwise().sum().transpose());

  // d/du of e^{-u} S / 2 + (1 + n) u  with  S held by the other parameters.
  const double scaled_terms = data_weight * sse
                            + hp.lambda_d * elastic_net(params.d, hp.alpha_d)
                            + hp.lambda_w * elastic_net(params.weights, hp.alpha_w);
  grad.log_sigma2 = -inv2s * scaled_terms + (1.0 + static_cast<double>(n_for_log));

  return grad;
}

inline CadreGradient gradient(const Matrix& x, const Vector& y, const CadreParams& params,
                              const Hyperparams& hp) {
  return gradient_scaled(x, y, params, hp, 1.0, x.rows());
}

/// Flat parameter layout used by the optimizer and the finite-difference
/// oracle: [vec(centers); d; vec(weights); intercepts; log(sigma2)].
inline Index param_count(const CadreParams& params) {
  return params.centers.size() + params.d.size() + params.weights.size()
       + params.intercepts.size() + 1;
}

inline Vector pack(const CadreParams& params) {
  Vector flat(param_count(params));
  Index at = 0;
  flat.segment(at, params.centers.size()) =
      Eigen::Map<const Vector>(params.centers.data(), params.centers.size());
  at += params.centers.size();
  flat.segment(at, params.d.size()) = params.d;
  at += params.d.size();
  flat.segment(at, params.weights.size()) =
      Eigen::Map<const Vector>(params.weights.data(), params.weights.size());
  at += params.weights.size();
  flat.segment(at, params.intercepts.size()) = params.intercepts;
  at += params.intercepts.size();
  flat(at) = std::log(params.sigma2);
  return flat;
}

inline Vector pack(const CadreGradient& grad) {
  Vector flat(grad.centers.size() + grad.d.size() + grad.weights.size()
              + grad.intercepts.size() + 1);
  Index at = 0;
  flat.segment(at, grad.centers.size()) =
      Eigen::Map<const Vector>(grad.centers.data(), grad.centers.size());
  at += grad.centers.size();
  flat.segment(at, grad.d.size()) = grad.d;
  at += grad.d.size();
  flat.segment(at, grad.weights.size()) =
      Eigen::Map<const Vector>(grad.weights.data(), grad.weights.size());
  at += grad.weights.size();
  flat.segment(at, grad.intercepts.size()) = grad.intercepts;
  at += grad.intercepts.size();
  flat(at) = grad.log_sigma2;
  return flat;
}

/// Rebuild structured parameters from a flat vector, taking shapes and
/// feature-index lists from `like`.
inline CadreParams unpack(const Vector& flat, const CadreParams& like) {
  if (flat.size() != param_count(like)) throw Error("unpack: flat size mismatch");
  CadreParams params = like;
  Index at = 0;
  params.centers = Eigen::Map<const Matrix>(flat.data() + at, like.centers.rows(),
                                            like.centers.cols());
  at += like.centers.size();
  params.d = flat.segment(at, like.d.size());
  at += like.d.size();
  params.weights = Eigen::Map<const Matrix>(flat.data() + at, like.weights.rows(),
                                            like.weights.cols());
  at += like.weights.size();
  params.intercepts = flat.segment(at, like.intercepts.size());
  at += like.intercepts.size();
  params.sigma2 = std::exp(flat(at));
  return params;
}

/// Central-difference gradient of the total loss in the flat layout. An
/// independent check on the analytic gradient; O(param_count) loss
/// evaluations, so only suitable for small problems.
inline Vector fd_gradient(const Matrix& x, const Vector& y, const CadreParams& params,
                          const Hyperparams& hp, double data_weight, Index n_for_log,
                          double h = 1e-5) {
  const Vector flat = pack(params);
  Vector grad(flat.size());
  for (Index i = 0; i < flat.size(); ++i) {
    Vector hi = flat, lo = flat;
    hi(i) += h;
    lo(i) -= h;
    const double f_hi = loss_scaled(x, y, unpack(hi, params), hp, data_weight, n_for_log).total;
    const double f_lo = loss_scaled(x, y, unpack(lo, params), hp, data_weight, n_for_log).total;
    grad(i) = (f_hi - f_lo) / (2.0 * h);
  }
  return grad;
}

}  // namespace scm
