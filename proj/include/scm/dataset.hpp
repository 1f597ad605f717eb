#pragma once

#include "scm/common.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace scm {

/// A fully numeric table: N observations of P features plus a target value each.
struct Dataset {
  Matrix features;  // N x P
  Vector target;    // N
  std::vector<std::string> feature_names;  // P
  std::vector<std::int64_t> row_ids;       // N, preserved across resampling
  std::string target_name = "target";

  Index n() const { return features.rows(); }
  Index p() const { return features.cols(); }
};

inline void validate(const Dataset& ds) {
  if (ds.n() < 1 || ds.p() < 1) throw Error("dataset: need N >= 1 and P >= 1");
  if (ds.target.size() != ds.n()) throw Error("dataset: target length does not match row count");
  if (static_cast<Index>(ds.feature_names.size()) != ds.p())
    throw Error("dataset: feature_names length does not match column count");
  if (static_cast<Index>(ds.row_ids.size()) != ds.n())
    throw Error("dataset: row_ids length does not match row count");
  if (!ds.features.allFinite() || !ds.target.allFinite())
    throw Error("dataset: non-finite values present");
  auto names = ds.feature_names;
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    throw Error("dataset: duplicate feature names");
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

}  // namespace detail

/// Reads a headered, comma-separated, fully numeric CSV and pulls out one
/// column as the target. Remaining columns become features in file order.
inline Dataset load_csv(const std::string& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw Error(path + ": cannot open file");

  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);

  {
    auto names = header;
    std::sort(names.begin(), names.end());
    auto dup = std::adjacent_find(names.begin(), names.end());
    if (dup != names.end()) throw Error(path + ": duplicate column \"" + *dup + "\"");
  }
  const auto target_it = std::find(header.begin(), header.end(), target_column);
  if (target_it == header.end())
    throw Error(path + ": target column \"" + target_column + "\" not found");
  const std::size_t target_pos = static_cast<std::size_t>(target_it - header.begin());

  std::vector<std::vector<double>> rows;
  std::int64_t data_row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    ++data_row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(path + ": row " + std::to_string(data_row) + " has " +
                  std::to_string(cells.size()) + " cells, expected " +
                  std::to_string(header.size()));
    std::vector<double> values(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      auto v = detail::parse_double(cells[j]);
      if (!v || !std::isfinite(*v))
        throw Error(path + ": non-numeric value \"" + cells[j] + "\" at row " +
                    std::to_string(data_row) + ", column \"" + header[j] + "\"");
      values[j] = *v;
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(path + ": no data rows");
  if (header.size() < 2) throw Error(path + ": need at least one feature column besides the target");

  Dataset ds;
  const Index n = static_cast<Index>(rows.size());
  const Index p = static_cast<Index>(header.size() - 1);
  ds.features.resize(n, p);
  ds.target.resize(n);
  ds.target_name = target_column;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != target_pos) ds.feature_names.push_back(header[j]);
  ds.row_ids.resize(rows.size());
  for (Index i = 0; i < n; ++i) {
    ds.row_ids[static_cast<std::size_t>(i)] = i;
    Index col = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == target_pos)
        ds.target(i) = rows[static_cast<std::size_t>(i)][j];
      else
        ds.features(i, col++) = rows[static_cast<std::size_t>(i)][j];
    }
  }
  validate(ds);
  return ds;
}

inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot open for writing");
  out.precision(17);
  for (const auto& name : ds.feature_names) out << name << ',';
  out << ds.target_name << '\n';
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < ds.p(); ++j) out << ds.features(i, j) << ',';
    out << ds.target(i) << '\n';
  }
}

/// Per-column standardization parameters for the features and (last slot) the target.
struct Scaler {
  Vector means;  // P + 1
  Vector stds;   // P + 1, all > 0

  double target_mean() const { return means(means.size() - 1); }
  double target_std() const { return stds(stds.size() - 1); }
};

/// Sample (ddof = 1) mean/std per column. Constant columns get std 1 so that
/// centering maps them to all-zero instead of failing mid-pipeline.
inline Scaler fit_scaler(const Dataset& ds) {
  if (ds.n() < 2) throw Error("fit_scaler: need at least 2 rows");
  const Index p = ds.p();
  Scaler sc;
  sc.means.resize(p + 1);
  sc.stds.resize(p + 1);
  const double n = static_cast<double>(ds.n());
  for (Index j = 0; j <= p; ++j) {
    const auto col = (j < p) ? ds.features.col(j) : Eigen::Ref<const Vector>(ds.target);
    const double mean = col.mean();
    const double ss = (col.array() - mean).square().sum();
    double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) sd = 1.0;
    sc.means(j) = mean;
    sc.stds(j) = sd;
  }
  return sc;
}

inline Dataset apply_scaler(const Dataset& ds, const Scaler& sc) {
  if (sc.means.size() != ds.p() + 1 || sc.stds.size() != ds.p() + 1)
    throw Error("apply_scaler: scaler dimension does not match dataset");
  Dataset out = ds;
  for (Index j = 0; j < ds.p(); ++j)
    out.features.col(j) = (ds.features.col(j).array() - sc.means(j)) / sc.stds(j);
  out.target = (ds.target.array() - sc.target_mean()) / sc.target_std();
  return out;
}

inline Dataset invert_scaler(const Dataset& ds, const Scaler& sc) {
  if (sc.means.size() != ds.p() + 1 || sc.stds.size() != ds.p() + 1)
    throw Error("invert_scaler: scaler dimension does not match dataset");
  Dataset out = ds;
  for (Index j = 0; j < ds.p(); ++j)
    out.features.col(j) = ds.features.col(j).array() * sc.stds(j) + sc.means(j);
  out.target = ds.target.array() * sc.target_std() + sc.target_mean();
  return out;
}

inline double destandardize_target(double y, const Scaler& sc) {
  return y * sc.target_std() + sc.target_mean();
}

inline Vector destandardize_target(const Vector& y, const Scaler& sc) {
  return (y.array() * sc.target_std() + sc.target_mean()).matrix();
}

inline Dataset take_rows(const Dataset& ds, const std::vector<Index>& idx) {
  Dataset out;
  out.feature_names = ds.feature_names;
  out.target_name = ds.target_name;
  out.features.resize(static_cast<Index>(idx.size()), ds.p());
  out.target.resize(static_cast<Index>(idx.size()));
  out.row_ids.resize(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.features.row(static_cast<Index>(k)) = ds.features.row(idx[k]);
    out.target(static_cast<Index>(k)) = ds.target(idx[k]);
    out.row_ids[k] = ds.row_ids[static_cast<std::size_t>(idx[k])];
  }
  return out;
}

struct SplitSpec {
  double train_fraction = 0.75;
  std::uint64_t seed = 0;
};

/// Seeded shuffle split into disjoint, exhaustive train/test subsets.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw Error("split: train_fraction must lie in (0, 1)");
  const Index n = ds.n();
  const Index n_train = static_cast<Index>(std::floor(spec.train_fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train > n - 1)
    throw Error("split: degenerate split sizes (train=" + std::to_string(n_train) +
                " of " + std::to_string(n) + ")");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<Index> train_idx(idx.begin(), idx.begin() + n_train);
  std::vector<Index> test_idx(idx.begin() + n_train, idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {take_rows(ds, train_idx), take_rows(ds, test_idx)};
}

/// N rows drawn uniformly with replacement; row_ids keep their source values.
inline Dataset bootstrap_sample(const Dataset& ds, std::uint64_t seed) {
  const Index n = ds.n();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> uni(0, n - 1);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (auto& i : idx) i = uni(rng);
  return take_rows(ds, idx);
}

// Synthetic two-feature benchmark with three subpopulations.
//
// Feature 1 ("connectivity") is drawn uniformly from three disjoint bands;
// feature 2 ("polarizability") is uniform on [0, 6] in every group. The group
// is a pure threshold function of connectivity, and the target is linear in
// polarizability with a group-specific slope and intercept:
//
//   group 0: connectivity in [0.0, 0.8),  y =  0 + 1.5 * pol + noise
//   group 1: connectivity in [1.2, 2.0),  y =  6 - 1.0 * pol + noise
//   group 2: connectivity in [2.4, 3.2),  y = 14 - 2.5 * pol + noise
//
// with noise ~ N(0, 0.25^2). Group thresholds: < 1.0 -> 0, < 2.2 -> 1, else 2.
namespace synthetic {
constexpr double kBandLow[3] = {0.0, 1.2, 2.4};
constexpr double kBandHigh[3] = {0.8, 2.0, 3.2};
constexpr double kThreshold01 = 1.0;
constexpr double kThreshold12 = 2.2;
constexpr double kSlope[3] = {1.5, -1.0, -2.5};
constexpr double kIntercept[3] = {0.0, 6.0, 14.0};
constexpr double kPolarizabilityMax = 6.0;
constexpr double kNoiseStd = 0.25;
}  // namespace synthetic

inline int synthetic_group(double connectivity) {
  if (connectivity < synthetic::kThreshold01) return 0;
  if (connectivity < synthetic::kThreshold12) return 1;
  return 2;
}

struct SyntheticData {
  Dataset data;
  std::vector<int> labels;
};

inline SyntheticData gen_synthetic(int n_per_group, std::uint64_t seed) {
  if (n_per_group < 10) throw Error("gen_synthetic: need n_per_group >= 10");
  const Index n = 3 * static_cast<Index>(n_per_group);
  SyntheticData out;
  out.data.features.resize(n, 2);
  out.data.target.resize(n);
  out.data.feature_names = {"connectivity", "polarizability"};
  out.data.target_name = "tg";
  out.data.row_ids.resize(static_cast<std::size_t>(n));
  out.labels.resize(static_cast<std::size_t>(n));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, synthetic::kNoiseStd);
  Index row = 0;
  for (int g = 0; g < 3; ++g) {
    for (int i = 0; i < n_per_group; ++i, ++row) {
      const double conn = synthetic::kBandLow[g] +
                          unit(rng) * (synthetic::kBandHigh[g] - synthetic::kBandLow[g]);
      const double pol = unit(rng) * synthetic::kPolarizabilityMax;
      out.data.features(row, 0) = conn;
      out.data.features(row, 1) = pol;
      out.data.target(row) = synthetic::kIntercept[g] + synthetic::kSlope[g] * pol + noise(rng);
      out.data.row_ids[static_cast<std::size_t>(row)] = row;
      out.labels[static_cast<std::size_t>(row)] = g;
    }
  }
  validate(out.data);
  return out;
}

}  // namespace scm
