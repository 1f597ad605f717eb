// Command-line front end for the supervised cadre model library.
//
//   scm train      fit a model on a CSV file and save it as JSON
//   scm predict    apply a saved model to new rows
//   scm cv         k-fold cross-validated grid search over hyperparameters
//   scm bootstrap  cadre-stability assessment on bootstrap replicas
//   scm benchmark  compare against ridge and k-means+ridge on random splits
//   scm synth      generate the three-group synthetic benchmark data
//
// Exit codes: 0 success, 1 runtime failure (bad data, training divergence,
// I/O), 2 usage error (unknown flag, missing required flag).
//
// Training standardizes features and target with a scaler fit on the
// training data; the scaler is stored in the model file, so `predict`
// accepts raw inputs and emits predictions in original target units.
// `benchmark` reports MSE on the standardized scale.

#include "scm/scm.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct HyperFlags {
  int cadres = 2;
  double gamma = 1.0;
  double lambda_d = 0.0;
  double lambda_w = 0.0;
  double alpha_d = 0.95;
  double alpha_w = 0.05;
};

struct ConfigFlags {
  int batch_size = 64;
  int epochs = 2000;
  std::uint64_t seed = 0;
};

void add_hyper_flags(CLI::App& cmd, HyperFlags& hf) {
  cmd.add_option("--cadres", hf.cadres, "Number of cadres M")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--gamma", hf.gamma, "Cadre-membership sharpness")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--lambda-d", hf.lambda_d, "Penalty strength on the feature-selection vector d")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd.add_option("--lambda-w", hf.lambda_w, "Penalty strength on the per-cadre weights W")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd.add_option("--alpha-d", hf.alpha_d, "L1 share of the d penalty")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd.add_option("--alpha-w", hf.alpha_w, "L1 share of the W penalty")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

void add_config_flags(CLI::App& cmd, ConfigFlags& cf) {
  cmd.add_option("--batch-size", cf.batch_size, "Minibatch size (clamped to the row count)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--epochs", cf.epochs, "Maximum training epochs")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd.add_option("--seed", cf.seed, "Master seed; all internal streams derive from it")
      ->capture_default_str();
}

scm::Hyperparams to_hyperparams(const HyperFlags& hf) {
  scm::Hyperparams hp;
  hp.cadres = hf.cadres;
  hp.gamma = hf.gamma;
  hp.lambda_d = hf.lambda_d;
  hp.lambda_w = hf.lambda_w;
  hp.alpha_d = hf.alpha_d;
  hp.alpha_w = hf.alpha_w;
  scm::validate(hp);
  return hp;
}

scm::TrainConfig to_config(const ConfigFlags& cf) {
  scm::TrainConfig cfg;
  cfg.batch_size = cf.batch_size;
  cfg.max_epochs = cf.epochs;
  cfg.seed = cf.seed;
  scm::validate(cfg);
  return cfg;
}

std::string format_num(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

// ---------------------------------------------------------------- train ---

struct TrainArgs {
  std::string data, target, out;
  HyperFlags hf;
  ConfigFlags cf;
};

void run_train(const TrainArgs& a) {
  const scm::Dataset raw = scm::load_csv(a.data, a.target);
  const scm::Scaler sc = scm::fit_scaler(raw);
  const scm::Dataset ds = scm::apply_scaler(raw, sc);
  const scm::Hyperparams hp = to_hyperparams(a.hf);
  const scm::TrainConfig cfg = to_config(a.cf);

  const scm::TrainedModel fit = scm::train(ds.features, ds.target, hp, cfg);
  const scm::LossBreakdown b = scm::loss(ds.features, ds.target, fit.params, hp);

  scm::ModelFile model;
  model.scaler = sc;
  model.hp = hp;
  model.params = fit.params;
  model.feature_names = ds.feature_names;
  model.target_name = ds.target_name;
  model.seed = cfg.seed;
  model.config = cfg;
  model.final_loss = fit.final_loss;
  model.n_train = fit.n_train;
  scm::save_model(a.out, model);

  std::cout << "rows: " << ds.n() << "   features: " << ds.p()
            << "   cadres: " << hp.cadres << "\n"
            << "epochs run: " << fit.epochs_run
            << (fit.early_stopped ? "   (early stop)" : "") << "\n"
            << "loss: " << format_num(b.total) << "\n"
            << "  weighted SSE:  " << format_num(b.weighted_sse) << "\n"
            << "  log-variance:  " << format_num(b.log_sigma_term) << "\n"
            << "  d penalty:     " << format_num(b.penalty_d) << "\n"
            << "  W penalty:     " << format_num(b.penalty_w) << "\n"
            << "  sigma^2:       " << format_num(b.sigma2) << "\n"
            << "density rate (DR): " << format_num(scm::density_rate(fit.params)) << "\n"
            << "weight dispersion (tau): " << format_num(scm::tau_statistic(fit.params)) << "\n"
            << "model written: " << a.out << "\n";
}

// -------------------------------------------------------------- predict ---

struct PredictArgs {
  std::string model, data, out;
};

struct RawTable {
  std::vector<std::string> columns;
  scm::Matrix values;
};

// Headered all-numeric CSV without a designated target column.
RawTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw scm::Error(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw scm::Error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  RawTable table;
  table.columns = scm::detail::split_csv_line(line);
  std::vector<std::vector<double>> rows;
  std::int64_t data_row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (scm::detail::trim(line).empty()) continue;
    ++data_row;
    const auto cells = scm::detail::split_csv_line(line);
    if (cells.size() != table.columns.size())
      throw scm::Error(path + ": row " + std::to_string(data_row) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(table.columns.size()));
    std::vector<double> values(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      auto v = scm::detail::parse_double(cells[j]);
      if (!v)
        throw scm::Error(path + ": non-numeric value \"" + cells[j] + "\" at row " +
                         std::to_string(data_row) + ", column \"" + table.columns[j] + "\"");
      values[j] = *v;
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw scm::Error(path + ": no data rows");
  table.values.resize(static_cast<scm::Index>(rows.size()),
                      static_cast<scm::Index>(table.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.values(static_cast<scm::Index>(i), static_cast<scm::Index>(j)) = rows[i][j];
  return table;
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += ", ";
    out += names[i];
  }
  return out;
}

// Reorders the table's columns into the model's feature order. A column named
// like the training target is tolerated and ignored; any other disagreement
// is an error naming the missing and extra columns.
scm::Matrix arrange_features(const RawTable& table, const scm::ModelFile& model) {
  std::vector<std::string> missing, extra;
  std::vector<scm::Index> order;
  for (const auto& name : model.feature_names) {
    const auto it = std::find(table.columns.begin(), table.columns.end(), name);
    if (it == table.columns.end())
      missing.push_back(name);
    else
      order.push_back(static_cast<scm::Index>(it - table.columns.begin()));
  }
  for (const auto& col : table.columns) {
    if (col == model.target_name) continue;
    if (std::find(model.feature_names.begin(), model.feature_names.end(), col) ==
        model.feature_names.end())
      extra.push_back(col);
  }
  if (!missing.empty() || !extra.empty())
    throw scm::Error("prediction data columns do not match the model (missing: [" +
                     join(missing) + "], extra: [" + join(extra) + "])");
  scm::Matrix x(table.values.rows(), static_cast<scm::Index>(order.size()));
  for (std::size_t j = 0; j < order.size(); ++j)
    x.col(static_cast<scm::Index>(j)) = table.values.col(order[j]);
  return x;
}

void run_predict(const PredictArgs& a) {
  const scm::ModelFile model = scm::load_model(a.model);
  const RawTable table = load_table(a.data);
  const scm::Matrix x = arrange_features(table, model);

  scm::Matrix xs(x.rows(), x.cols());
  for (scm::Index p = 0; p < x.cols(); ++p)
    xs.col(p) = (x.col(p).array() - model.scaler.means(p)) / model.scaler.stds(p);

  const scm::Vector pred =
      scm::destandardize_target(scm::predict_all(xs, model.params, model.hp.gamma), model.scaler);
  const scm::Matrix g = scm::membership_matrix(xs, model.params, model.hp.gamma);
  const std::vector<scm::Index> cadre = scm::assign_all(xs, model.params, model.hp.gamma);

  std::ofstream out(a.out);
  if (!out) throw scm::Error(a.out + ": cannot open for writing");
  out.precision(17);
  out << "row,prediction";
  for (int m = 1; m <= model.hp.cadres; ++m) out << ",g_" << m;
  out << ",cadre\n";
  for (scm::Index i = 0; i < x.rows(); ++i) {
    out << i + 1 << ',' << pred(i);
    for (scm::Index m = 0; m < g.cols(); ++m) out << ',' << g(i, m);
    out << ',' << cadre[static_cast<std::size_t>(i)] + 1 << "\n";
  }
  if (!out.good()) throw scm::Error(a.out + ": write failed");
  std::cout << "wrote " << x.rows() << " predictions to " << a.out << "\n";
}

// ------------------------------------------------------------------- cv ---

struct CvArgs {
  std::string data, target, out;
  int folds = 5;
  HyperFlags hf;
  ConfigFlags cf;
  const CLI::App* cmd = nullptr;
};

void run_cv(const CvArgs& a) {
  const scm::Dataset ds = scm::load_csv(a.data, a.target);
  const scm::TrainConfig cfg = to_config(a.cf);

  // Hyperparameter flags, when given, pin that grid axis to a single value.
  scm::Grid grid;
  if (a.cmd->count("--cadres") > 0) grid.cadre_counts = {a.hf.cadres};
  if (a.cmd->count("--gamma") > 0) grid.gammas = {a.hf.gamma};
  if (a.cmd->count("--lambda-d") > 0) grid.lambda_ds = {a.hf.lambda_d};
  if (a.cmd->count("--lambda-w") > 0) grid.lambda_ws = {a.hf.lambda_w};
  grid.alpha_d = a.hf.alpha_d;
  grid.alpha_w = a.hf.alpha_w;

  std::cout << "grid: " << grid.size() << " points, " << a.folds << " folds, "
            << ds.n() << " rows\n";
  const scm::CvResult result = scm::cross_validate(ds, grid, a.folds, cfg);
  const scm::CvRow& best = result.table[result.best_row];
  std::cout << "best: cadres=" << result.best.cadres << " gamma=" << result.best.gamma
            << " lambda_d=" << result.best.lambda_d
            << " lambda_w=" << result.best.lambda_w << "\n"
            << "mean cv MSE: " << format_num(best.mean_mse)
            << " (std " << format_num(best.std_mse) << ")\n";
  if (!a.out.empty()) {
    scm::save_cv_table(a.out, result);
    std::cout << "cv table written: " << a.out << "\n";
  }
}

// ------------------------------------------------------------ bootstrap ---

struct BootstrapArgs {
  std::string data, target, out;
  int replicas = 10;
  HyperFlags hf;
  ConfigFlags cf;
};

// "report.json" -> "report.assignments.csv"; other names get the suffix
// appended. The assignment table backs replica-agreement figures.
std::string assignments_path(const std::string& out) {
  const std::string ext = ".json";
  if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0)
    return out.substr(0, out.size() - ext.size()) + ".assignments.csv";
  return out + ".assignments.csv";
}

void run_bootstrap(const BootstrapArgs& a) {
  const scm::Dataset raw = scm::load_csv(a.data, a.target);
  const scm::Dataset ds = scm::apply_scaler(raw, scm::fit_scaler(raw));
  const scm::Hyperparams hp = to_hyperparams(a.hf);
  const scm::TrainConfig cfg = to_config(a.cf);

  const scm::BootstrapReport report = scm::bootstrap_quality(ds, hp, cfg, a.replicas, a.cf.seed);

  std::cout << "base model + " << report.replicas << " replicas";
  if (!report.excluded_replicas.empty())
    std::cout << " (" << report.excluded_replicas.size() << " diverged, excluded)";
  std::cout << "\n";
  for (scm::Index m = 0; m < report.per_cadre_abm.size(); ++m) {
    std::cout << "cadre " << m + 1 << ": ";
    if (std::isnan(report.per_cadre_abm(m)))
      std::cout << "ABM n/a (no members in base model)\n";
    else
      std::cout << "ABM " << format_num(report.per_cadre_abm(m)) << "\n";
  }
  std::cout << "model ABM: " << format_num(report.model_abm) << "\n";

  if (!a.out.empty()) {
    scm::save_bootstrap_report(a.out, report);
    scm::save_assignment_table(assignments_path(a.out), report.table);
    std::cout << "report written: " << a.out << "\n"
              << "assignments written: " << assignments_path(a.out) << "\n";
  }
}

// ------------------------------------------------------------ benchmark ---

struct BenchmarkArgs {
  std::string data, target, out;
  int splits = 20;
  HyperFlags hf;
  ConfigFlags cf;
};

void run_benchmark(const BenchmarkArgs& a) {
  const scm::Dataset ds = scm::load_csv(a.data, a.target);
  scm::BenchmarkSettings settings;
  settings.hp = to_hyperparams(a.hf);
  settings.cfg = to_config(a.cf);
  settings.n_splits = a.splits;

  const scm::BenchmarkResult result = scm::run_benchmark(ds, settings);
  std::cout << a.splits << " splits, " << ds.n() << " rows, standardized test MSE\n"
            << "scm:      " << format_num(result.scm_mean)
            << " (std " << format_num(result.scm_std) << ")\n"
            << "ridge:    " << format_num(result.ridge_mean)
            << " (std " << format_num(result.ridge_std) << ")\n"
            << "km+ridge: " << format_num(result.km_mean)
            << " (std " << format_num(result.km_std) << ")\n";
  if (!a.out.empty()) {
    scm::save_benchmark_csv(a.out, result);
    std::cout << "results written: " << a.out << "\n";
  }
}

// ---------------------------------------------------------------- synth ---

struct SynthArgs {
  std::string out;
  int n_per_group = 50;
  std::uint64_t seed = 0;
};

std::string labels_path(const std::string& out) {
  const std::string ext = ".csv";
  if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0)
    return out.substr(0, out.size() - ext.size()) + "_labels.csv";
  return out + "_labels.csv";
}

void run_synth(const SynthArgs& a) {
  const scm::SyntheticData syn = scm::gen_synthetic(a.n_per_group, a.seed);
  scm::save_csv(syn.data, a.out);

  const std::string labels = labels_path(a.out);
  std::ofstream out(labels);
  if (!out) throw scm::Error(labels + ": cannot open for writing");
  out << "row,group\n";
  for (std::size_t i = 0; i < syn.labels.size(); ++i)
    out << i + 1 << ',' << syn.labels[i] << "\n";
  if (!out.good()) throw scm::Error(labels + ": write failed");

  std::cout << "wrote " << syn.data.n() << " rows to " << a.out << "\n"
            << "labels written: " << labels << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supervised cadre models: joint subpopulation discovery and per-cadre regression"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Fit a model and save it as JSON");
  train->add_option("--data", train_args.data, "Training CSV (header row, all numeric)")
      ->required();
  train->add_option("--target", train_args.target, "Name of the target column")->required();
  train->add_option("--out", train_args.out, "Output model path (JSON)")->required();
  add_hyper_flags(*train, train_args.hf);
  add_config_flags(*train, train_args.cf);
  train->callback([&train_args] { run_train(train_args); });

  PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand("predict", "Apply a saved model to new rows");
  predict->add_option("--model", predict_args.model, "Model file from `scm train`")->required();
  predict->add_option("--data", predict_args.data, "CSV with the model's feature columns")
      ->required();
  predict->add_option("--out", predict_args.out,
                      "Output CSV: prediction, memberships g_1..g_M, assigned cadre")
      ->required();
  predict->callback([&predict_args] { run_predict(predict_args); });

  CvArgs cv_args;
  CLI::App* cv = app.add_subcommand(
      "cv", "Cross-validated grid search (hyperparameter flags pin a grid axis)");
  cv->add_option("--data", cv_args.data, "Training CSV")->required();
  cv->add_option("--target", cv_args.target, "Name of the target column")->required();
  cv->add_option("--out", cv_args.out, "Optional CSV path for the full cv table");
  cv->add_option("--folds", cv_args.folds, "Number of cross-validation folds")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  add_hyper_flags(*cv, cv_args.hf);
  add_config_flags(*cv, cv_args.cf);
  cv_args.cmd = cv;
  cv->callback([&cv_args] { run_cv(cv_args); });

  BootstrapArgs boot_args;
  CLI::App* boot = app.add_subcommand("bootstrap", "Cadre-stability assessment (ABM scores)");
  boot->add_option("--data", boot_args.data, "Training CSV")->required();
  boot->add_option("--target", boot_args.target, "Name of the target column")->required();
  boot->add_option("--out", boot_args.out, "Optional JSON report path");
  boot->add_option("--bootstrap", boot_args.replicas, "Number of bootstrap replicas B")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_hyper_flags(*boot, boot_args.hf);
  add_config_flags(*boot, boot_args.cf);
  boot->callback([&boot_args] { run_bootstrap(boot_args); });

  BenchmarkArgs bench_args;
  CLI::App* bench = app.add_subcommand(
      "benchmark", "Compare SCM, global ridge, and k-means+ridge over random splits");
  bench->add_option("--data", bench_args.data, "Benchmark CSV")->required();
  bench->add_option("--target", bench_args.target, "Name of the target column")->required();
  bench->add_option("--out", bench_args.out, "Optional long-format CSV (method,split,test_mse)");
  bench->add_option("--splits", bench_args.splits, "Number of random 75/25 splits")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_hyper_flags(*bench, bench_args.hf);
  add_config_flags(*bench, bench_args.cf);
  bench->callback([&bench_args] { run_benchmark(bench_args); });

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate three-group synthetic data plus a true-group label sidecar");
  synth->add_option("--out", synth_args.out, "Output CSV path")->required();
  synth->add_option("--n-per-group", synth_args.n_per_group, "Rows per group (three groups)")
      ->check(CLI::Range(10, 100000000))
      ->capture_default_str();
  synth->add_option("--seed", synth_args.seed, "Generator seed")->capture_default_str();
  synth->callback([&synth_args] { run_synth(synth_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
