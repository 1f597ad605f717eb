#pragma once

#include "scm/common.hpp"
#include "scm/dataset.hpp"
#include "scm/eval.hpp"
#include "scm/model.hpp"
#include "scm/optim.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace scm {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to reload a trained model and predict on raw (never
/// standardized) inputs: the scaler, the hyperparameters, the parameters,
/// and enough provenance to reproduce the training run.
struct ModelFile {
  int format_version = kModelFormatVersion;
  Scaler scaler;
  Hyperparams hp;
  CadreParams params;
  std::vector<std::string> feature_names;
  std::string target_name;
  std::uint64_t seed = 0;
  TrainConfig config;
  double final_loss = 0.0;
  Index n_train = 0;
};

namespace detail {

inline nlohmann::json to_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Vector vector_from_json(const nlohmann::json& arr) {
  Vector v(static_cast<Index>(arr.size()));
  Index i = 0;
  for (const auto& x : arr) v(i++) = x.get<double>();
  return v;
}

// Matrices are stored column-per-cadre so the file reads as "one block per
// cadre" when inspected by hand.
inline nlohmann::json columns_to_json(const Matrix& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (Index j = 0; j < m.cols(); ++j) arr.push_back(to_json(m.col(j)));
  return arr;
}

inline Matrix matrix_from_json_columns(const nlohmann::json& arr) {
  if (arr.empty()) throw Error("model file: empty matrix");
  const Index cols = static_cast<Index>(arr.size());
  const Index rows = static_cast<Index>(arr.front().size());
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    if (static_cast<Index>(arr[static_cast<std::size_t>(j)].size()) != rows)
      throw Error("model file: ragged matrix");
    m.col(j) = vector_from_json(arr[static_cast<std::size_t>(j)]);
  }
  return m;
}

inline std::vector<Index> indices_from_json(const nlohmann::json& arr) {
  std::vector<Index> idx;
  idx.reserve(arr.size());
  for (const auto& x : arr) idx.push_back(x.get<Index>());
  return idx;
}

}  // namespace detail

inline nlohmann::json to_json(const ModelFile& model) {
  nlohmann::json j;
  j["format_version"] = model.format_version;
  j["scaler"] = {{"means", detail::to_json(model.scaler.means)},
                 {"stds", detail::to_json(model.scaler.stds)}};
  j["hyperparams"] = {{"gamma", model.hp.gamma},       {"lambda_d", model.hp.lambda_d},
                      {"lambda_w", model.hp.lambda_w}, {"alpha_d", model.hp.alpha_d},
                      {"alpha_w", model.hp.alpha_w},   {"cadres", model.hp.cadres}};
  j["params"] = {{"centers", detail::columns_to_json(model.params.centers)},
                 {"d", detail::to_json(model.params.d)},
                 {"weights", detail::columns_to_json(model.params.weights)},
                 {"intercepts", detail::to_json(model.params.intercepts)},
                 {"sigma2", model.params.sigma2},
                 {"cadre_feature_idx", model.params.cadre_feature_idx},
                 {"target_feature_idx", model.params.target_feature_idx}};
  j["feature_names"] = model.feature_names;
  j["target_name"] = model.target_name;
  j["provenance"] = {{"seed", model.seed},
                     {"final_loss", model.final_loss},
                     {"n_train", model.n_train},
                     {"config",
                      {{"batch_size", model.config.batch_size},
                       {"max_epochs", model.config.max_epochs},
                       {"learning_rate", model.config.learning_rate},
                       {"patience", model.config.patience},
                       {"tol", model.config.tol},
                       {"beta1", model.config.beta1},
                       {"beta2", model.config.beta2},
                       {"eps", model.config.eps}}}};
  return j;
}

inline ModelFile model_from_json(const nlohmann::json& j) {
  ModelFile model;
  try {
    model.format_version = j.at("format_version").get<int>();
    if (model.format_version != kModelFormatVersion)
      throw Error("model file: unsupported format version "
                  + std::to_string(model.format_version) + " (expected "
                  + std::to_string(kModelFormatVersion) + ")");
    model.scaler.means = detail::vector_from_json(j.at("scaler").at("means"));
    model.scaler.stds = detail::vector_from_json(j.at("scaler").at("stds"));
    const auto& hp = j.at("hyperparams");
    model.hp.gamma = hp.at("gamma").get<double>();
    model.hp.lambda_d = hp.at("lambda_d").get<double>();
    model.hp.lambda_w = hp.at("lambda_w").get<double>();
    model.hp.alpha_d = hp.at("alpha_d").get<double>();
    model.hp.alpha_w = hp.at("alpha_w").get<double>();
    model.hp.cadres = hp.at("cadres").get<int>();
    const auto& p = j.at("params");
    model.params.centers = detail::matrix_from_json_columns(p.at("centers"));
    model.params.d = detail::vector_from_json(p.at("d"));
    model.params.weights = detail::matrix_from_json_columns(p.at("weights"));
    model.params.intercepts = detail::vector_from_json(p.at("intercepts"));
    model.params.sigma2 = p.at("sigma2").get<double>();
    model.params.cadre_feature_idx = detail::indices_from_json(p.at("cadre_feature_idx"));
    model.params.target_feature_idx = detail::indices_from_json(p.at("target_feature_idx"));
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.target_name = j.at("target_name").get<std::string>();
    const auto& prov = j.at("provenance");
    model.seed = prov.at("seed").get<std::uint64_t>();
    model.final_loss = prov.at("final_loss").get<double>();
    model.n_train = prov.at("n_train").get<Index>();
    const auto& cfg = prov.at("config");
    model.config.batch_size = cfg.at("batch_size").get<int>();
    model.config.max_epochs = cfg.at("max_epochs").get<int>();
    model.config.learning_rate = cfg.at("learning_rate").get<double>();
    model.config.patience = cfg.at("patience").get<int>();
    model.config.tol = cfg.at("tol").get<double>();
    model.config.beta1 = cfg.at("beta1").get<double>();
    model.config.beta2 = cfg.at("beta2").get<double>();
    model.config.eps = cfg.at("eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model file: malformed content: ") + e.what());
  }

  const Index p_total = static_cast<Index>(model.feature_names.size());
  validate(model.hp);
  validate(model.params, p_total);
  if (model.params.cadres() != model.hp.cadres)
    throw Error("model file: cadre count disagrees between params and hyperparams");
  if (model.scaler.means.size() != p_total + 1 || model.scaler.stds.size() != p_total + 1)
    throw Error("model file: scaler length does not match feature count");
  return model;
}

inline void save_model(const std::string& path, const ModelFile& model) {
  std::ofstream out(path);
  if (!out) throw Error("save_model: cannot open file: " + path);
  out << to_json(model).dump(2) << "\n";
  if (!out.good()) throw Error("save_model: write failed: " + path);
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_model: cannot open file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("load_model: invalid JSON in " + path + ": " + e.what());
  }
  return model_from_json(j);
}

/// Predict on raw (unstandardized) feature rows: standardize with the
/// stored scaler, evaluate the model, and map predictions back to target
/// units. Columns of `x` must already be ordered as `feature_names`.
inline Vector predict_raw(const Matrix& x, const ModelFile& model) {
  if (x.cols() != static_cast<Index>(model.feature_names.size()))
    throw Error("predict_raw: feature count mismatch");
  Matrix xs(x.rows(), x.cols());
  for (Index p = 0; p < x.cols(); ++p)
    xs.col(p) = (x.col(p).array() - model.scaler.means(p)) / model.scaler.stds(p);
  const Vector std_pred = predict_all(xs, model.params, model.hp.gamma);
  return destandardize_target(std_pred, model.scaler);
}

/// Bootstrap stability report as JSON. NaN scores (empty cadres) serialize
/// as null, matching their "no meaningful value" reading.
inline nlohmann::json to_json(const BootstrapReport& report) {
  nlohmann::json j;
  nlohmann::json scores = nlohmann::json::array();
  for (Index m = 0; m < report.per_cadre_abm.size(); ++m) {
    const double s = report.per_cadre_abm(m);
    if (std::isnan(s))
      scores.push_back(nullptr);
    else
      scores.push_back(s);
  }
  j["per_cadre_abm"] = scores;
  if (std::isnan(report.model_abm))
    j["model_abm"] = nullptr;
  else
    j["model_abm"] = report.model_abm;
  j["replicas"] = report.replicas;
  j["empty_cadres"] = report.empty_cadres;
  j["excluded_replicas"] = report.excluded_replicas;
  return j;
}

inline void save_bootstrap_report(const std::string& path, const BootstrapReport& report) {
  std::ofstream out(path);
  if (!out) throw Error("save_bootstrap_report: cannot open file: " + path);
  out << to_json(report).dump(2) << "\n";
  if (!out.good()) throw Error("save_bootstrap_report: write failed: " + path);
}

/// Assignment table as CSV, one row per observation, one column per model
/// (base model first), cadre ids 1-based as in all human-facing output.
inline void save_assignment_table(const std::string& path, const AssignmentTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("save_assignment_table: cannot open file: " + path);
  out << "row";
  out << ",model_0";
  for (Index b = 1; b < table.rows(); ++b) out << ",replica_" << b;
  out << "\n";
  for (Index n = 0; n < table.cols(); ++n) {
    out << n + 1;
    for (Index b = 0; b < table.rows(); ++b) out << ',' << table(b, n) + 1;
    out << "\n";
  }
  if (!out.good()) throw Error("save_assignment_table: write failed: " + path);
}

}  // namespace scm
