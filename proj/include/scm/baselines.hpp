#pragma once

#include "scm/common.hpp"
#include "scm/dataset.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <random>
#include <vector>

namespace scm {

/// Linear model with L2-penalized weights and an unpenalized intercept.
struct RidgeModel {
  Vector weights;
  double intercept = 0.0;
};

/// Closed-form ridge regression on centered data, which keeps the intercept
/// out of the penalty. With ridge == 0 this is ordinary least squares and
/// requires full-rank features.
inline RidgeModel ridge_fit(const Matrix& x, const Vector& y, double ridge) {
  if (x.rows() != y.size()) throw Error("ridge_fit: feature/target row count mismatch");
  if (x.rows() < 1 || x.cols() < 1) throw Error("ridge_fit: empty problem");
  if (ridge < 0.0) throw Error("ridge_fit: penalty must be nonnegative");

  const Vector x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Matrix xc = x.rowwise() - x_mean.transpose();
  const Vector yc = y.array() - y_mean;

  Matrix normal = xc.transpose() * xc;
  normal.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success)
    throw Error("ridge_fit: normal equations are singular; use a positive ridge penalty");

  RidgeModel model;
  model.weights = llt.solve(xc.transpose() * yc);
  model.intercept = y_mean - model.weights.dot(x_mean);
  return model;
}

inline double ridge_predict(const Vector& x, const RidgeModel& model) {
  if (x.size() != model.weights.size()) throw Error("ridge_predict: feature count mismatch");
  return model.weights.dot(x) + model.intercept;
}

inline Vector ridge_predict(const Matrix& x, const RidgeModel& model) {
  if (x.cols() != model.weights.size()) throw Error("ridge_predict: feature count mismatch");
  return (x * model.weights).array() + model.intercept;
}

/// Index of the closest row of `centers` for each row of `x` (Euclidean,
/// ties to the lowest index).
inline std::vector<Index> nearest_center(const Matrix& x, const Matrix& centers) {
  if (x.cols() != centers.cols()) throw Error("nearest_center: dimension mismatch");
  std::vector<Index> labels(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    Index best = 0;
    double best_dist = (x.row(i) - centers.row(0)).squaredNorm();
    for (Index c = 1; c < centers.rows(); ++c) {
      const double dist = (x.row(i) - centers.row(c)).squaredNorm();
      if (dist < best_dist) {
        best = c;
        best_dist = dist;
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

struct KMeansModel {
  Matrix centers;  // k x P, one center per row
  std::vector<Index> labels;
  int iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm with kmeans++ seeding. A cluster that empties is
/// re-centered on the point currently farthest from its own center, which
/// keeps all k clusters alive without extra randomness.
inline KMeansModel kmeans_fit(const Matrix& x, int k, std::uint64_t seed, int max_iter = 100,
                              double tol = 1e-10) {
  if (k < 1) throw Error("kmeans_fit: need at least one cluster");
  if (x.rows() < k) throw Error("kmeans_fit: more clusters than points");

  std::mt19937_64 rng(seed);
  const std::vector<Index> seeds = kmeanspp_rows(x, k, rng);
  KMeansModel model;
  model.centers.resize(k, x.cols());
  for (int c = 0; c < k; ++c)
    model.centers.row(c) = x.row(seeds[static_cast<std::size_t>(c)]);

  for (int iter = 1; iter <= max_iter; ++iter) {
    model.labels = nearest_center(x, model.centers);
    Matrix next = Matrix::Zero(k, x.cols());
    Vector counts = Vector::Zero(k);
    for (Index i = 0; i < x.rows(); ++i) {
      next.row(model.labels[static_cast<std::size_t>(i)]) += x.row(i);
      counts(model.labels[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (Index c = 0; c < k; ++c) {
      if (counts(c) > 0.0) {
        next.row(c) /= counts(c);
      } else {
        Index far = 0;
        double far_dist = -1.0;
        for (Index i = 0; i < x.rows(); ++i) {
          const Index own = model.labels[static_cast<std::size_t>(i)];
          const double dist = (x.row(i) - model.centers.row(own)).squaredNorm();
          if (dist > far_dist) {
            far = i;
            far_dist = dist;
          }
        }
        next.row(c) = x.row(far);
      }
    }
    const double shift = (next - model.centers).rowwise().squaredNorm().maxCoeff();
    model.centers = next;
    model.iterations = iter;
    if (shift < tol) {
      model.converged = true;
      break;
    }
  }
  model.labels = nearest_center(x, model.centers);
  return model;
}

/// Two-stage comparator: unsupervised k-means partition, then an
/// independent ridge model per cluster. Clusters that end up empty fall
/// back to a single global ridge fit.
struct ClusterwiseRidge {
  Matrix centers;  // k x P
  std::vector<RidgeModel> models;
  RidgeModel global;
  std::vector<bool> use_global;
};

inline ClusterwiseRidge clusterwise_ridge_fit(const Matrix& x, const Vector& y, int k,
                                              double ridge, std::uint64_t seed) {
  const KMeansModel km = kmeans_fit(x, k, seed);
  ClusterwiseRidge model;
  model.centers = km.centers;
  model.global = ridge_fit(x, y, ridge);
  model.models.resize(static_cast<std::size_t>(k));
  model.use_global.assign(static_cast<std::size_t>(k), false);

  for (int c = 0; c < k; ++c) {
    std::vector<Index> members;
    for (Index i = 0; i < x.rows(); ++i)
      if (km.labels[static_cast<std::size_t>(i)] == c) members.push_back(i);
    if (members.empty()) {
      model.use_global[static_cast<std::size_t>(c)] = true;
      model.models[static_cast<std::size_t>(c)] = model.global;
      continue;
    }
    Matrix xc(static_cast<Index>(members.size()), x.cols());
    Vector yc(static_cast<Index>(members.size()));
    for (std::size_t i = 0; i < members.size(); ++i) {
      xc.row(static_cast<Index>(i)) = x.row(members[i]);
      yc(static_cast<Index>(i)) = y(members[i]);
    }
    model.models[static_cast<std::size_t>(c)] = ridge_fit(xc, yc, ridge);
  }
  return model;
}

inline Vector clusterwise_predict(const Matrix& x, const ClusterwiseRidge& model) {
  const std::vector<Index> labels = nearest_center(x, model.centers);
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i)
    out(i) = ridge_predict(Vector(x.row(i).transpose()),
                           model.models[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]);
  return out;
}

inline double clusterwise_predict(const Vector& x, const ClusterwiseRidge& model) {
  return clusterwise_predict(Matrix(x.transpose()), model)(0);
}

inline KMeansModel kmeans_fit(const Dataset& ds, int k, std::uint64_t seed, int max_iter = 100) {
  return kmeans_fit(ds.features, k, seed, max_iter);
}

inline ClusterwiseRidge clusterwise_ridge_fit(const Dataset& ds, int k, double ridge,
                                              std::uint64_t seed) {
  return clusterwise_ridge_fit(ds.features, ds.target, k, ridge, seed);
}

}  // namespace scm
