#pragma once

#include "scm/common.hpp"
#include "scm/dataset.hpp"
#include "scm/model.hpp"
#include "scm/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace scm {

inline double mse(const Vector& predicted, const Vector& actual) {
  if (predicted.size() != actual.size()) throw Error("mse: length mismatch");
  if (predicted.size() < 1) throw Error("mse: need at least one value");
  return (predicted - actual).squaredNorm() / static_cast<double>(predicted.size());
}

/// Overlap between two member-index sets, scored against the smaller
/// containment ratio: min(|A∩B|/|A|, |A∩B|/|B|). Either side empty scores 0.
/// Inputs must be sorted and duplicate-free.
inline double match_score(const std::vector<Index>& a, const std::vector<Index>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::vector<Index> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  const double overlap = static_cast<double>(common.size());
  return std::min(overlap / static_cast<double>(a.size()),
                  overlap / static_cast<double>(b.size()));
}

/// Cadre assignments of one dataset under several models: row 0 is the base
/// model, rows 1..B are bootstrap replicas, and entry (b, n) is the cadre
/// observation n lands in under model b.
using AssignmentTable = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// Member indices of one cadre in one assignment row (sorted by construction).
inline std::vector<Index> cadre_members(const AssignmentTable& table, Index row, int cadre) {
  std::vector<Index> members;
  for (Index n = 0; n < table.cols(); ++n)
    if (table(row, n) == cadre) members.push_back(n);
  return members;
}

/// Agreement of base cadre `cadre` across the replica rows: each replica
/// contributes its best-matching cadre's score, averaged over replicas.
/// A base cadre that holds no observations has no meaningful agreement and
/// scores NaN.
inline double abm(const AssignmentTable& table, int cadres, int cadre) {
  if (table.rows() < 2) throw Error("abm: need at least one replica row");
  const std::vector<Index> base = cadre_members(table, 0, cadre);
  if (base.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (Index b = 1; b < table.rows(); ++b) {
    double best = 0.0;
    for (int other = 0; other < cadres; ++other)
      best = std::max(best, match_score(base, cadre_members(table, b, other)));
    sum += best;
  }
  return sum / static_cast<double>(table.rows() - 1);
}

struct BootstrapReport {
  Vector per_cadre_abm;          // NaN for cadres empty under the base model
  double model_abm = 0.0;        // mean over non-empty cadres; NaN if all empty
  AssignmentTable table;         // (replicas + 1) x N, diverged replicas dropped
  int replicas = 0;              // replicas that trained successfully
  std::vector<int> empty_cadres;      // base-model cadres holding no observations
  std::vector<int> excluded_replicas; // 1-based replica numbers that diverged
};

namespace detail {

inline std::vector<Index> bootstrap_indices(Index n, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (auto& i : idx) i = pick(rng);
  return idx;
}

inline void gather_rows(const Matrix& x, const Vector& y, const std::vector<Index>& idx,
                        Matrix& xs, Vector& ys) {
  xs.resize(static_cast<Index>(idx.size()), x.cols());
  ys.resize(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    xs.row(static_cast<Index>(i)) = x.row(idx[i]);
    ys(static_cast<Index>(i)) = y(idx[i]);
  }
}

}  // namespace detail

/// Bootstrap check of how stable the learned subpopulations are. A base
/// model is trained on one bootstrap draw; each replica retrains on a fresh
/// draw, warm-started from the base so replicas explore the same basin.
/// All models then assign the *original* observations, and per-cadre
/// agreement is summarized by best-match overlap. Scores near 1 mean the
/// cadre reappears regardless of sampling noise; low scores flag artifacts.
inline BootstrapReport bootstrap_quality(const Matrix& x, const Vector& y,
                                         const Hyperparams& hp, const TrainConfig& cfg,
                                         int replicas) {
  if (replicas < 1) throw Error("bootstrap_quality: need at least one replica");
  const Index n = x.rows();

  std::mt19937_64 draw_rng(derive_seed(cfg.seed, 100));
  Matrix xs;
  Vector ys;
  detail::gather_rows(x, y, detail::bootstrap_indices(n, draw_rng), xs, ys);
  TrainConfig base_cfg = cfg;
  base_cfg.seed = derive_seed(cfg.seed, 200);
  const TrainedModel base = train(xs, ys, hp, base_cfg);

  BootstrapReport report;
  std::vector<std::vector<Index>> rows;
  rows.push_back(assign_all(x, base.params, hp.gamma));

  for (int b = 1; b <= replicas; ++b) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(b)));
    detail::gather_rows(x, y, detail::bootstrap_indices(n, rng), xs, ys);
    TrainConfig replica_cfg = cfg;
    replica_cfg.seed = derive_seed(cfg.seed, 200 + static_cast<std::uint64_t>(b));
    try {
      const TrainedModel replica = train(xs, ys, hp, replica_cfg, base.params);
      rows.push_back(assign_all(x, replica.params, hp.gamma));
    } catch (const TrainingDivergence&) {
      report.excluded_replicas.push_back(b);
    }
  }
  if (rows.size() < 2)
    throw Error("bootstrap_quality: every replica diverged; adjust the training configuration");

  report.replicas = static_cast<int>(rows.size()) - 1;
  report.table.resize(static_cast<Index>(rows.size()), n);
  for (std::size_t b = 0; b < rows.size(); ++b)
    for (Index i = 0; i < n; ++i)
      report.table(static_cast<Index>(b), i) =
          static_cast<int>(rows[b][static_cast<std::size_t>(i)]);

  report.per_cadre_abm.resize(hp.cadres);
  double sum = 0.0;
  int live = 0;
  for (int m = 0; m < hp.cadres; ++m) {
    const double score = abm(report.table, hp.cadres, m);
    report.per_cadre_abm(m) = score;
    if (std::isnan(score)) {
      report.empty_cadres.push_back(m);
    } else {
      sum += score;
      ++live;
    }
  }
  report.model_abm = live > 0 ? sum / live : std::numeric_limits<double>::quiet_NaN();
  return report;
}

/// Dataset convenience overload. Features are used exactly as stored;
/// standardize beforehand if the hyperparameters assume unit scales.
inline BootstrapReport bootstrap_quality(const Dataset& ds, const Hyperparams& hp,
                                         const TrainConfig& cfg, int replicas,
                                         std::uint64_t seed) {
  TrainConfig seeded = cfg;
  seeded.seed = seed;
  return bootstrap_quality(ds.features, ds.target, hp, seeded, replicas);
}

/// Fraction of assignment-relevance entries that are materially nonzero:
/// |d_p| > threshold * max_q |d_q|. A model that ignores most features for
/// cadre placement scores low. All-zero d scores 0.
inline double density_rate(const Vector& d, double threshold = 1e-3) {
  if (d.size() < 1) throw Error("density_rate: empty vector");
  if (!(threshold > 0.0)) throw Error("density_rate: threshold must be positive");
  const double top = d.array().abs().maxCoeff();
  if (top == 0.0) return 0.0;
  const double cut = threshold * top;
  int live = 0;
  for (Index p = 0; p < d.size(); ++p)
    if (std::abs(d(p)) > cut) ++live;
  return static_cast<double>(live) / static_cast<double>(d.size());
}

/// Mean across features of the population standard deviation of each
/// weight across cadres. Zero when every cadre shares one regression
/// model; grows as the cadres' models diverge.
inline double tau_statistic(const Matrix& weights) {
  if (weights.size() < 1) throw Error("tau_statistic: empty weight matrix");
  const double m = static_cast<double>(weights.cols());
  double sum = 0.0;
  for (Index p = 0; p < weights.rows(); ++p) {
    const double mean = weights.row(p).mean();
    const double var = (weights.row(p).array() - mean).square().sum() / m;
    sum += std::sqrt(var);
  }
  return sum / static_cast<double>(weights.rows());
}

inline double density_rate(const CadreParams& params, double threshold = 1e-3) {
  return density_rate(params.d, threshold);
}

inline double tau_statistic(const CadreParams& params) { return tau_statistic(params.weights); }

}  // namespace scm
