#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace scm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an optimizer run produces a non-finite loss.
struct TrainingDivergence : Error {
  double last_finite_loss;
  TrainingDivergence(const std::string& msg, double last)
      : Error(msg), last_finite_loss(last) {}
};

// Stateless per-stream seed derivation (splitmix64 step) so that replicas,
// folds, and splits get independent deterministic streams from one master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Matrix select_columns(const Matrix& x, const std::vector<Index>& idx) {
  Matrix out(x.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Index>(j)) = x.col(idx[j]);
  return out;
}

inline Vector select_entries(const Vector& x, const std::vector<Index>& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out(static_cast<Index>(j)) = x(idx[j]);
  return out;
}

// k-means++ row seeding: first row uniform, then distance-proportional.
// Duplicate rows get zero weight, so the chosen rows are distinct whenever
// k distinct rows exist; otherwise falls back to unchosen indices.
inline std::vector<Index> kmeanspp_rows(const Matrix& x, int k, std::mt19937_64& rng) {
  const Index n = x.rows();
  if (n < k) throw Error("kmeanspp_rows: need at least k rows");
  std::vector<Index> chosen;
  chosen.reserve(k);
  std::uniform_int_distribution<Index> uni(0, n - 1);
  chosen.push_back(uni(rng));
  Vector dist2 = (x.rowwise() - x.row(chosen[0])).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(chosen.size()) < k) {
    const double total = dist2.sum();
    Index pick = -1;
    if (total > 0.0) {
      double r = unit(rng) * total;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        acc += dist2(i);
        if (r <= acc) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;
    } else {
      // All remaining rows coincide with a chosen center; take any unchosen index.
      for (Index i = 0; i < n; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = uni(rng);
    }
    chosen.push_back(pick);
    dist2 = dist2.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
  }
  return chosen;
}

}  // namespace scm
