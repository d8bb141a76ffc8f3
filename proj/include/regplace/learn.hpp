#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "regplace/features.hpp"

namespace regplace {

/// Row-major design matrix with 2-D targets.
struct TrainingData {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;  // rows * cols
  std::vector<double> y;  // rows * 2

  std::span<const double> row(std::size_t i) const { return {x.data() + i * cols, cols}; }
};

TrainingData to_training_data(const Dataset& dataset);

// ---- random forest --------------------------------------------------------

struct ForestConfig {
  int n_trees = 100;
  int mtry = 0;       // 0: ceil(d / 3)
  int min_leaf = 2;
  int max_depth = 0;  // 0: unlimited
  std::uint64_t seed = 1;
  bool bootstrap = true;  // false only for tests: each tree sees every row once

  int mtry_for(std::size_t d) const;
  void check(std::size_t d) const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double mean_x = 0.0;
  double mean_y = 0.0;
  int count = 0;

  bool is_leaf() const { return feature < 0; }
};

/// CART regression tree; value < threshold goes left.
struct Tree {
  std::vector<TreeNode> nodes;  // root at 0

  Point predict(std::span<const double> v) const;
};

struct Forest {
  ForestConfig config;
  Schema schema;
  std::vector<Tree> trees;

  /// Mean of the tree outputs, before clamping.
  Point predict_raw(std::span<const double> v) const;
};

Forest train_forest(const Dataset& dataset, const ForestConfig& config);
Forest train_forest(const TrainingData& data, const Schema& schema, const ForestConfig& config);

/// Forest mean clamped to the die.
Point predict_forest(const Forest& forest, std::span<const double> v);

/// Sum of squared deviations from the mean, over both target axes.
double split_impurity(std::span<const Point> targets);

// ---- kernel ridge regression ---------------------------------------------

struct KrrConfig {
  double gamma = 0.0;  // 0: 1 / d
  double lambda = 1e-3;
};

struct KrrModel {
  double gamma = 0.0;
  double lambda = 0.0;
  Schema schema;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> inputs;  // rows * cols
  std::vector<double> alpha;   // rows * 2
  double residual = 0.0;       // ||(K + lambda n I) A - Y|| / ||Y||

  Point predict_raw(std::span<const double> v) const;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

KrrModel train_krr(const Dataset& dataset, const KrrConfig& config);
KrrModel train_krr(const TrainingData& data, const Schema& schema, const KrrConfig& config);
Point predict_krr(const KrrModel& model, std::span<const double> v);

// ---- common surface -------------------------------------------------------

enum class ModelKind { Forest, Krr };
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view s);

using Model = std::variant<Forest, KrrModel>;

struct LearnerConfig {
  ForestConfig forest;
  KrrConfig krr;
};

Model train(ModelKind kind, const Dataset& dataset, const LearnerConfig& config);
const Schema& model_schema(const Model& model);
/// Throws Error(Schema) when the dataset was built with a different input space.
void check_schema(const Model& model, const Schema& dataset_schema);
Point predict(const Model& model, std::span<const double> v);

/// Predictions for every row, assembled against the model's schema.
std::vector<Point> predict_rows(const Model& model, const Dataset& dataset, bool prediction_mode);

struct Metrics {
  double mae_x = 0.0;
  double mae_y = 0.0;
  double rmse_x = 0.0;
  double rmse_y = 0.0;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
};

Metrics error_metrics(std::span<const Point> predicted, std::span<const Point> truth);
Metrics evaluate(ModelKind kind, const Dataset& train, const Dataset& test, const LearnerConfig& config);

struct CurveRow {
  ModelKind kind;
  double fraction;
  int fold;
  std::size_t train_rows;
  Metrics metrics;
};

/// k-fold cross-validated metrics on growing training subsets.
std::vector<CurveRow> learning_curve(ModelKind kind, const Dataset& dataset, const std::vector<double>& fractions,
                                     int folds, std::uint64_t seed, const LearnerConfig& config);

/// model,fraction,fold,mae_x,mae_y,rmse_x,rmse_y,fit_s,predict_s
std::string write_curve_csv(const std::vector<CurveRow>& rows);

std::string save_model(const Model& model);
Model load_model(std::string_view document);

}  // namespace regplace
