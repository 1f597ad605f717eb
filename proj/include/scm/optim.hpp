#pragma once

#include "scm/common.hpp"
#include "scm/loss.hpp"
#include "scm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace scm {

/// First/second moment accumulators for Adam, over a flat parameter vector.
struct AdamState {
  Vector m;
  Vector v;
  long t = 0;

  explicit AdamState(Index size) : m(Vector::Zero(size)), v(Vector::Zero(size)) {}
};

/// One bias-corrected Adam update, in place.
inline void adam_step(Vector& params, const Vector& grad, AdamState& state, double lr,
                      double beta1, double beta2, double eps) {
  if (params.size() != grad.size() || params.size() != state.m.size())
    throw Error("adam_step: size mismatch");
  state.t += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  const Vector m_hat = state.m / bc1;
  const Vector v_hat = state.v / bc2;
  params -= lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
}

struct TrainConfig {
  int batch_size = 64;
  int max_epochs = 2000;
  std::uint64_t seed = 0;
  int patience = 10;        // epochs of sub-tol change before stopping
  double tol = 1e-6;
  int record_loss_every = 10;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw Error("train config: batch size must be at least 1");
  if (cfg.max_epochs < 0) throw Error("train config: max epochs must be nonnegative");
  if (!(cfg.learning_rate > 0.0)) throw Error("train config: learning rate must be positive");
  if (cfg.patience < 1) throw Error("train config: patience must be at least 1");
  if (cfg.tol < 0.0) throw Error("train config: tolerance must be nonnegative");
  if (cfg.record_loss_every < 1) throw Error("train config: record interval must be at least 1");
}

/// Data-driven starting point: centers are kmeans++-selected training rows
/// (so every cadre starts on the data manifold), d starts dense at one,
/// regression weights start near zero and the noise variance at one.
inline CadreParams init_params(const Matrix& x, const Hyperparams& hp,
                               std::vector<Index> cadre_feature_idx,
                               std::vector<Index> target_feature_idx, std::mt19937_64& rng) {
  CadreParams params;
  params.cadre_feature_idx = std::move(cadre_feature_idx);
  params.target_feature_idx = std::move(target_feature_idx);

  const Matrix x_cadre = select_columns(x, params.cadre_feature_idx);
  const std::vector<Index> seeds = kmeanspp_rows(x_cadre, hp.cadres, rng);
  params.centers.resize(x_cadre.cols(), hp.cadres);
  for (int j = 0; j < hp.cadres; ++j)
    params.centers.col(j) = x_cadre.row(seeds[static_cast<std::size_t>(j)]).transpose();

  params.d = Vector::Ones(static_cast<Index>(params.cadre_feature_idx.size()));

  std::normal_distribution<double> weight_init(0.0, 0.1);
  params.weights.resize(static_cast<Index>(params.target_feature_idx.size()), hp.cadres);
  for (Index j = 0; j < params.weights.cols(); ++j)
    for (Index i = 0; i < params.weights.rows(); ++i)
      params.weights(i, j) = weight_init(rng);

  params.intercepts = Vector::Zero(hp.cadres);
  params.sigma2 = 1.0;
  validate(params, x.cols());
  return params;
}

/// Fitted model plus enough training metadata to reproduce and inspect a run.
struct TrainedModel {
  CadreParams params;
  Hyperparams hp;
  double final_loss = 0.0;  // best full-data loss seen during the run
  std::vector<std::pair<int, double>> loss_history;  // (epoch, full-data loss)
  std::uint64_t seed = 0;
  Index n_train = 0;
  int epochs_run = 0;
  bool early_stopped = false;
};

/// Minibatch Adam on the flat parameter vector, warm-started from `start`.
/// Returns the best parameters encountered (by full-data loss), which need
/// not be the final iterate. Throws TrainingDivergence if the loss or any
/// parameter stops being finite.
inline TrainedModel train(const Matrix& x, const Vector& y, const Hyperparams& hp,
                          const TrainConfig& cfg, const CadreParams& start) {
  validate(hp);
  validate(cfg);
  if (x.rows() != y.size()) throw Error("train: feature/target row count mismatch");
  const Index n = x.rows();
  if (n < 1) throw Error("train: need at least one observation");
  validate(start, x.cols());
  if (start.cadres() != hp.cadres)
    throw Error("train: starting parameters disagree with hyperparameter cadre count");

  TrainedModel result;
  result.params = start;
  result.hp = hp;
  result.seed = cfg.seed;
  result.n_train = n;

  Vector flat = pack(start);
  AdamState adam(flat.size());
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 1));

  const Index batch = std::min<Index>(cfg.batch_size, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  double best_loss = loss(x, y, result.params, hp).total;
  double prev_loss = best_loss;
  result.final_loss = best_loss;
  result.loss_history.emplace_back(0, best_loss);
  int flat_epochs = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    CadreParams current = unpack(flat, start);
    for (Index at = 0; at < n; at += batch) {
      const Index len = std::min<Index>(batch, n - at);
      Matrix xb(len, x.cols());
      Vector yb(len);
      for (Index i = 0; i < len; ++i) {
        xb.row(i) = x.row(order[static_cast<std::size_t>(at + i)]);
        yb(i) = y(order[static_cast<std::size_t>(at + i)]);
      }
      const double data_weight = static_cast<double>(n) / static_cast<double>(len);
      const CadreGradient grad = gradient_scaled(xb, yb, current, hp, data_weight, n);
      Vector flat_grad = pack(grad);
      adam_step(flat, flat_grad, adam, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps);
      if (!flat.allFinite())
        throw TrainingDivergence("training diverged: parameters became non-finite at epoch "
                                 + std::to_string(epoch) + "; reduce the learning rate",
                                 prev_loss);
      current = unpack(flat, start);
    }

    const LossBreakdown full = loss(x, y, current, hp);
    result.epochs_run = epoch;
    if (!std::isfinite(full.total))
      throw TrainingDivergence("training diverged: " + describe_nonfinite(full)
                                   + " became non-finite at epoch " + std::to_string(epoch)
                                   + "; reduce the learning rate",
                               prev_loss);
    if (full.total < best_loss) {
      best_loss = full.total;
      result.params = current;
      result.final_loss = best_loss;
    }
    if (epoch % cfg.record_loss_every == 0 || epoch == cfg.max_epochs)
      result.loss_history.emplace_back(epoch, full.total);

    if (std::abs(prev_loss - full.total) < cfg.tol) {
      if (++flat_epochs >= cfg.patience) {
        result.early_stopped = true;
        if (result.loss_history.back().first != epoch)
          result.loss_history.emplace_back(epoch, full.total);
        break;
      }
    } else {
      flat_epochs = 0;
    }
    prev_loss = full.total;
  }

  return result;
}

/// Cold-start variant: all features are used for both assignment and
/// prediction, and the starting point is drawn from the seed.
inline TrainedModel train(const Matrix& x, const Vector& y, const Hyperparams& hp,
                          const TrainConfig& cfg) {
  validate(hp);
  validate(cfg);
  std::mt19937_64 init_rng(derive_seed(cfg.seed, 0));
  const CadreParams start =
      init_params(x, hp, all_feature_indices(x.cols()), all_feature_indices(x.cols()), init_rng);
  return train(x, y, hp, cfg, start);
}

}  // namespace scm
