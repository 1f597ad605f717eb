#pragma once

#include "scm/common.hpp"
#include "scm/dataset.hpp"
#include "scm/eval.hpp"
#include "scm/model.hpp"
#include "scm/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace scm {

/// Hyperparameter search space. The elastic-net mixing weights are held
/// fixed (strong L1 on d, mostly L2 on W) and only the values below are
/// searched, which keeps the grid small enough for exhaustive scoring.
struct Grid {
  std::vector<int> cadre_counts{1, 2, 3, 4, 5, 6};
  std::vector<double> gammas{0.5, 1.0, 2.0, 4.0};
  std::vector<double> lambda_ds{0.01, 0.05, 0.1, 0.5};
  std::vector<double> lambda_ws{0.01, 0.05, 0.1, 0.5};
  double alpha_d = 0.95;
  double alpha_w = 0.05;

  std::size_t size() const {
    return cadre_counts.size() * gammas.size() * lambda_ds.size() * lambda_ws.size();
  }
};

inline void validate(const Grid& grid) {
  if (grid.cadre_counts.empty() || grid.gammas.empty() || grid.lambda_ds.empty() ||
      grid.lambda_ws.empty())
    throw Error("grid: every value list must be nonempty");
  for (int m : grid.cadre_counts)
    if (m < 1) throw Error("grid: cadre counts must be at least 1");
  for (double g : grid.gammas)
    if (!(g > 0.0)) throw Error("grid: gamma values must be positive");
  for (double l : grid.lambda_ds)
    if (l < 0.0) throw Error("grid: lambda values must be nonnegative");
  for (double l : grid.lambda_ws)
    if (l < 0.0) throw Error("grid: lambda values must be nonnegative");
}

/// One scored grid point. `fold_mse` holds the per-fold validation MSE in
/// standardized target units; folds never reached because an earlier fold
/// diverged are NaN, and a diverged row carries an infinite mean so it can
/// never win selection.
struct CvRow {
  Hyperparams hp;
  Vector fold_mse;
  double mean_mse = std::numeric_limits<double>::infinity();
  double std_mse = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
};

struct CvResult {
  Hyperparams best;
  std::vector<CvRow> table;
  int folds = 0;
  std::size_t best_row = 0;
};

/// Disjoint, exhaustive folds of {0..n-1}: a seeded shuffle dealt into k
/// nearly equal chunks (the first n mod k folds get one extra element).
inline std::vector<std::vector<Index>> kfold_indices(Index n, int k, std::uint64_t seed) {
  if (k < 2) throw Error("kfold_indices: need at least two folds");
  if (n < k) throw Error("kfold_indices: more folds than observations");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
  const Index base = n / k;
  const Index extra = n % k;
  Index at = 0;
  for (Index f = 0; f < k; ++f) {
    const Index len = base + (f < extra ? 1 : 0);
    folds[static_cast<std::size_t>(f)].assign(order.begin() + at, order.begin() + at + len);
    std::sort(folds[static_cast<std::size_t>(f)].begin(), folds[static_cast<std::size_t>(f)].end());
    at += len;
  }
  return folds;
}

/// Lowest mean validation MSE wins; exact ties fall to the smaller cadre
/// count, then to the stronger (larger) weight penalty, preferring the
/// simpler model either way.
inline std::size_t pick_best_row(const std::vector<CvRow>& table) {
  if (table.empty()) throw Error("pick_best_row: empty table");
  std::size_t best = 0;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const CvRow& a = table[r];
    const CvRow& b = table[best];
    const bool wins = a.mean_mse < b.mean_mse ||
                      (a.mean_mse == b.mean_mse &&
                       (a.hp.cadres < b.hp.cadres ||
                        (a.hp.cadres == b.hp.cadres && a.hp.lambda_w > b.hp.lambda_w)));
    if (wins) best = r;
  }
  if (!std::isfinite(table[best].mean_mse))
    throw Error("cross_validate: every grid point diverged; shrink the grid or learning rate");
  return best;
}

/// Exhaustive grid search scored by k-fold cross-validation on the training
/// set. Each fold standardizes on its own training portion (never on the
/// held-out fold), trains at every grid point, and scores validation MSE in
/// standardized units. Rows appear in grid order: cadre count, then gamma,
/// then lambda_d, then lambda_w.
inline CvResult cross_validate(const Dataset& train_ds, const Grid& grid, int k,
                               const TrainConfig& cfg) {
  validate(train_ds);
  validate(grid);
  if (k < 2) throw Error("cross_validate: need at least two folds");
  const int max_m = *std::max_element(grid.cadre_counts.begin(), grid.cadre_counts.end());
  if (train_ds.n() / k < max_m)
    throw Error("cross_validate: folds too small for " + std::to_string(max_m) + " cadres");

  const auto folds = kfold_indices(train_ds.n(), k, cfg.seed);

  // Standardize once per fold, not once per grid point.
  std::vector<Matrix> fold_train_x(folds.size()), fold_val_x(folds.size());
  std::vector<Vector> fold_train_y(folds.size()), fold_val_y(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<Index> train_idx;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    std::sort(train_idx.begin(), train_idx.end());

    const Dataset fold_train = take_rows(train_ds, train_idx);
    const Dataset fold_val = take_rows(train_ds, folds[f]);
    const Scaler scaler = fit_scaler(fold_train);
    const Dataset train_std = apply_scaler(fold_train, scaler);
    const Dataset val_std = apply_scaler(fold_val, scaler);
    fold_train_x[f] = train_std.features;
    fold_train_y[f] = train_std.target;
    fold_val_x[f] = val_std.features;
    fold_val_y[f] = val_std.target;
  }

  CvResult result;
  result.folds = k;
  result.table.reserve(grid.size());
  std::size_t point = 0;
  for (int m : grid.cadre_counts)
    for (double gamma : grid.gammas)
      for (double ld : grid.lambda_ds)
        for (double lw : grid.lambda_ws) {
          CvRow row;
          row.hp.cadres = m;
          row.hp.gamma = gamma;
          row.hp.lambda_d = ld;
          row.hp.lambda_w = lw;
          row.hp.alpha_d = grid.alpha_d;
          row.hp.alpha_w = grid.alpha_w;
          row.fold_mse = Vector::Constant(k, std::numeric_limits<double>::quiet_NaN());

          for (int f = 0; f < k; ++f) {
            TrainConfig fold_cfg = cfg;
            fold_cfg.seed = derive_seed(cfg.seed, 1000 + point * static_cast<std::size_t>(k)
                                                  + static_cast<std::size_t>(f));
            try {
              const TrainedModel fit =
                  train(fold_train_x[static_cast<std::size_t>(f)],
                        fold_train_y[static_cast<std::size_t>(f)], row.hp, fold_cfg);
              const Vector pred = predict_all(fold_val_x[static_cast<std::size_t>(f)],
                                              fit.params, row.hp.gamma);
              row.fold_mse(f) = mse(pred, fold_val_y[static_cast<std::size_t>(f)]);
            } catch (const TrainingDivergence&) {
              row.diverged = true;
              break;
            }
          }
          if (!row.diverged) {
            row.mean_mse = row.fold_mse.mean();
            const double var =
                (row.fold_mse.array() - row.mean_mse).square().sum() / static_cast<double>(k);
            row.std_mse = std::sqrt(var);
          }
          result.table.push_back(std::move(row));
          ++point;
        }

  result.best_row = pick_best_row(result.table);
  result.best = result.table[result.best_row].hp;
  return result;
}

/// Write the scored grid as CSV (one row per grid point, in grid order).
inline void save_cv_table(const std::string& path, const CvResult& result) {
  std::ofstream out(path);
  if (!out) throw Error("save_cv_table: cannot open file: " + path);
  out.precision(17);
  out << "cadres,gamma,lambda_d,lambda_w,mean_mse,std_mse,diverged";
  for (int f = 1; f <= result.folds; ++f) out << ",fold_" << f << "_mse";
  out << "\n";
  for (const CvRow& row : result.table) {
    out << row.hp.cadres << ',' << row.hp.gamma << ',' << row.hp.lambda_d << ','
        << row.hp.lambda_w << ',' << row.mean_mse << ',' << row.std_mse << ','
        << (row.diverged ? 1 : 0);
    for (Index f = 0; f < row.fold_mse.size(); ++f) out << ',' << row.fold_mse(f);
    out << "\n";
  }
  if (!out.good()) throw Error("save_cv_table: write failed: " + path);
}

}  // namespace scm
