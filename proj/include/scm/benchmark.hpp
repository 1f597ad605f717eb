#pragma once

#include "scm/baselines.hpp"
#include "scm/common.hpp"
#include "scm/dataset.hpp"
#include "scm/eval.hpp"
#include "scm/model.hpp"
#include "scm/optim.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace scm {

/// One repeated-split comparison run: the cadre model against a global
/// ridge fit and k-means-plus-ridge, all scored on the same splits.
struct BenchmarkSettings {
  Hyperparams hp;
  TrainConfig cfg;
  int n_splits = 20;
  double train_fraction = 0.75;
  double ridge = 0.1;    // penalty for both ridge baselines (standardized data)
  int km_clusters = 0;   // 0 means "match the cadre count"
};

struct BenchmarkResult {
  Vector scm_mse;       // one standardized test MSE per split
  Vector ridge_mse;
  Vector km_ridge_mse;
  double scm_mean = 0.0, scm_std = 0.0;
  double ridge_mean = 0.0, ridge_std = 0.0;
  double km_mean = 0.0, km_std = 0.0;
};

namespace detail {

inline double sample_std(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Random train/test splits, scaler fit on each split's training rows only,
/// every method scored by test MSE in standardized target units (so values
/// are comparable across datasets: predicting the mean scores about 1).
inline BenchmarkResult run_benchmark(const Dataset& ds, const BenchmarkSettings& settings) {
  validate(ds);
  validate(settings.hp);
  if (settings.n_splits < 1) throw Error("run_benchmark: need at least one split");
  if (settings.ridge < 0.0) throw Error("run_benchmark: ridge penalty must be nonnegative");
  const int k = settings.km_clusters > 0 ? settings.km_clusters : settings.hp.cadres;

  BenchmarkResult result;
  result.scm_mse.resize(settings.n_splits);
  result.ridge_mse.resize(settings.n_splits);
  result.km_ridge_mse.resize(settings.n_splits);

  for (int s = 0; s < settings.n_splits; ++s) {
    SplitSpec spec;
    spec.train_fraction = settings.train_fraction;
    spec.seed = derive_seed(settings.cfg.seed, 3000 + static_cast<std::uint64_t>(s));
    const auto [train_raw, test_raw] = split(ds, spec);
    const Scaler scaler = fit_scaler(train_raw);
    const Dataset train_std = apply_scaler(train_raw, scaler);
    const Dataset test_std = apply_scaler(test_raw, scaler);

    TrainConfig cfg = settings.cfg;
    cfg.seed = derive_seed(settings.cfg.seed, 4000 + static_cast<std::uint64_t>(s));
    const TrainedModel scm_fit = train(train_std.features, train_std.target, settings.hp, cfg);
    result.scm_mse(s) =
        mse(predict_all(test_std.features, scm_fit.params, settings.hp.gamma), test_std.target);

    const RidgeModel global = ridge_fit(train_std.features, train_std.target, settings.ridge);
    result.ridge_mse(s) = mse(ridge_predict(test_std.features, global), test_std.target);

    const ClusterwiseRidge km =
        clusterwise_ridge_fit(train_std.features, train_std.target, k, settings.ridge,
                              derive_seed(settings.cfg.seed, 5000 + static_cast<std::uint64_t>(s)));
    result.km_ridge_mse(s) = mse(clusterwise_predict(test_std.features, km), test_std.target);
  }

  result.scm_mean = result.scm_mse.mean();
  result.scm_std = detail::sample_std(result.scm_mse);
  result.ridge_mean = result.ridge_mse.mean();
  result.ridge_std = detail::sample_std(result.ridge_mse);
  result.km_mean = result.km_ridge_mse.mean();
  result.km_std = detail::sample_std(result.km_ridge_mse);
  return result;
}

/// Long-format CSV: one row per (method, split) pair.
inline void save_benchmark_csv(const std::string& path, const BenchmarkResult& result) {
  std::ofstream out(path);
  if (!out) throw Error("save_benchmark_csv: cannot open file: " + path);
  out.precision(17);
  out << "method,split,test_mse\n";
  auto rows = [&out](const char* method, const Vector& v) {
    for (Index s = 0; s < v.size(); ++s)
      out << method << ',' << s + 1 << ',' << v(s) << "\n";
  };
  rows("scm", result.scm_mse);
  rows("ridge", result.ridge_mse);
  rows("km_ridge", result.km_ridge_mse);
  if (!out.good()) throw Error("save_benchmark_csv: write failed: " + path);
}

}  // namespace scm
