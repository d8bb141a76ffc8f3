#include "regplace/learn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "regplace/parallel.hpp"
#include "regplace/rng.hpp"
#include "regplace/text.hpp"

namespace regplace {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void check_width(std::size_t got, std::size_t want) {
  if (got != want)
    throw Error(ErrorCode::Schema, "feature vector has " + std::to_string(got) + " entries, model expects " +
                                       std::to_string(want));
}

}  // namespace

TrainingData to_training_data(const Dataset& ds) {
  TrainingData td;
  td.rows = ds.rows.size();
  td.cols = ds.schema.width();
  td.x.reserve(td.rows * td.cols);
  td.y.reserve(td.rows * 2);
  for (const FeatureRow& r : ds.rows) {
    if (!r.target) throw Error(ErrorCode::Schema, "training row '" + r.reg + "' has no target");
    auto v = assemble_vector(r, ds.schema);
    td.x.insert(td.x.end(), v.begin(), v.end());
    td.y.push_back(r.target->x);
    td.y.push_back(r.target->y);
  }
  return td;
}

// ---- forest ---------------------------------------------------------------

int ForestConfig::mtry_for(std::size_t d) const {
  return mtry > 0 ? mtry : static_cast<int>((d + 2) / 3);
}

void ForestConfig::check(std::size_t d) const {
  if (n_trees < 1) throw Error(ErrorCode::Domain, "forest.trees must be at least 1");
  if (min_leaf < 1) throw Error(ErrorCode::Domain, "forest.min_leaf must be at least 1");
  if (max_depth < 0) throw Error(ErrorCode::Domain, "forest.max_depth must be non-negative");
  int m = mtry_for(d);
  if (m < 1 || static_cast<std::size_t>(m) > d)
    throw Error(ErrorCode::Domain, "forest.mtry must lie in [1, " + std::to_string(d) + "]");
}

Point Tree::predict(std::span<const double> v) const {
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const TreeNode& n = nodes[at];
    at = static_cast<std::size_t>(v[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return {nodes[at].mean_x, nodes[at].mean_y};
}

Point Forest::predict_raw(std::span<const double> v) const {
  check_width(v.size(), schema.width());
  long double sx = 0.0L, sy = 0.0L;
  for (const Tree& t : trees) {
    Point p = t.predict(v);
    sx += p.x;
    sy += p.y;
  }
  auto n = static_cast<long double>(trees.size());
  return {static_cast<double>(sx / n), static_cast<double>(sy / n)};
}

Point predict_forest(const Forest& forest, std::span<const double> v) {
  return forest.schema.die.clamp(forest.predict_raw(v));
}

double split_impurity(std::span<const Point> targets) {
  if (targets.empty()) return 0.0;
  long double mx = 0.0L, my = 0.0L;
  for (Point p : targets) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<long double>(targets.size());
  my /= static_cast<long double>(targets.size());
  long double sse = 0.0L;
  for (Point p : targets) sse += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
  return static_cast<double>(sse);
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const TrainingData& data, const ForestConfig& cfg, Rng& rng)
      : data_(data), cfg_(cfg), mtry_(cfg.mtry_for(data.cols)), rng_(rng), features_(data.cols) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree build(std::vector<std::size_t> sample) {
    idx_ = std::move(sample);
    tree_.nodes.clear();
    grow(0, idx_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
  };

  int grow(std::size_t begin, std::size_t end, int depth) {
    const std::size_t m = end - begin;
    long double sx = 0.0L, sy = 0.0L;
    for (std::size_t i = begin; i < end; ++i) {
      sx += data_.y[2 * idx_[i]];
      sy += data_.y[2 * idx_[i] + 1];
    }
    TreeNode node;
    node.count = static_cast<int>(m);
    node.mean_x = static_cast<double>(sx / static_cast<long double>(m));
    node.mean_y = static_cast<double>(sy / static_cast<long double>(m));
    double sse = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      double dx = data_.y[2 * idx_[i]] - node.mean_x;
      double dy = data_.y[2 * idx_[i] + 1] - node.mean_y;
      sse += dx * dx + dy * dy;
    }
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(node);

    const auto min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
    if (m < 2 * min_leaf || (cfg_.max_depth > 0 && depth >= cfg_.max_depth) || sse == 0.0) return id;

    Split best = find_split(begin, end, node.mean_x, node.mean_y);
    if (best.feature < 0) return id;

    auto mid_it = std::stable_partition(idx_.begin() + static_cast<std::ptrdiff_t>(begin),
                                        idx_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t r) {
                                          return data_.x[r * data_.cols + static_cast<std::size_t>(best.feature)] <
                                                 best.threshold;
                                        });
    auto mid = static_cast<std::size_t>(mid_it - idx_.begin());
    int left = grow(begin, mid, depth + 1);
    int right = grow(mid, end, depth + 1);
    TreeNode& n = tree_.nodes[static_cast<std::size_t>(id)];
    n.feature = best.feature;
    n.threshold = best.threshold;
    n.left = left;
    n.right = right;
    return id;
  }

  // Best (feature, midpoint) over mtry sampled features by summed within-child SSE.
  // Ties go to the lowest feature index, then the lowest threshold.
  Split find_split(std::size_t begin, std::size_t end, double mx, double my) {
    const std::size_t d = data_.cols;
    for (int i = 0; i < mtry_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), d - 1);
      std::swap(features_[static_cast<std::size_t>(i)], features_[pick(rng_)]);
    }
    chosen_.assign(features_.begin(), features_.begin() + mtry_);
    std::sort(chosen_.begin(), chosen_.end());

    const std::size_t m = end - begin;
    const auto min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
    double tx = 0.0, ty = 0.0, qx = 0.0, qy = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      double cx = data_.y[2 * idx_[i]] - mx;
      double cy = data_.y[2 * idx_[i] + 1] - my;
      tx += cx;
      ty += cy;
      qx += cx * cx;
      qy += cy * cy;
    }

    Split best;
    for (std::size_t f : chosen_) {
      buf_.clear();
      for (std::size_t i = begin; i < end; ++i) buf_.emplace_back(data_.x[idx_[i] * d + f], idx_[i]);
      auto [lo, hi] = std::minmax_element(buf_.begin(), buf_.end());
      if (lo->first == hi->first) continue;
      std::sort(buf_.begin(), buf_.end());
      double lx = 0.0, ly = 0.0, lqx = 0.0, lqy = 0.0;
      for (std::size_t j = 1; j < m; ++j) {
        std::size_t r = buf_[j - 1].second;
        double cx = data_.y[2 * r] - mx;
        double cy = data_.y[2 * r + 1] - my;
        lx += cx;
        ly += cy;
        lqx += cx * cx;
        lqy += cy * cy;
        if (!(buf_[j - 1].first < buf_[j].first) || j < min_leaf || m - j < min_leaf) continue;
        auto nl = static_cast<double>(j);
        auto nr = static_cast<double>(m - j);
        double rx = tx - lx, ry = ty - ly;
        double impurity = (lqx - lx * lx / nl) + (lqy - ly * ly / nl) + ((qx - lqx) - rx * rx / nr) +
                          ((qy - lqy) - ry * ry / nr);
        if (impurity < best.impurity) {
          double a = buf_[j - 1].first, b = buf_[j].first;
          double thr = a + (b - a) / 2.0;
          if (!(a < thr)) thr = b;
          best = {static_cast<int>(f), thr, impurity};
        }
      }
    }
    return best;
  }

  const TrainingData& data_;
  const ForestConfig& cfg_;
  int mtry_;
  Rng& rng_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> chosen_;
  std::vector<std::size_t> idx_;
  std::vector<std::pair<double, std::size_t>> buf_;
  Tree tree_;
};

}  // namespace

Forest train_forest(const TrainingData& data, const Schema& schema, const ForestConfig& config) {
  if (data.rows == 0) throw Error(ErrorCode::Domain, "cannot train on an empty dataset");
  check_width(data.cols, schema.width());
  config.check(data.cols);
  Forest forest{config, schema, std::vector<Tree>(static_cast<std::size_t>(config.n_trees))};
  parallel_for(forest.trees.size(), [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> sample(data.rows);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, data.rows - 1);
      for (auto& s : sample) s = pick(rng);
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    TreeBuilder builder(data, config, rng);
    forest.trees[t] = builder.build(std::move(sample));
  });
  return forest;
}

Forest train_forest(const Dataset& dataset, const ForestConfig& config) {
  return train_forest(to_training_data(dataset), dataset.schema, config);
}

// ---- kernel ridge ---------------------------------------------------------

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = a[i] - b[i];
    d2 += t * t;
  }
  return std::exp(-gamma * d2);
}

Point KrrModel::predict_raw(std::span<const double> v) const {
  check_width(v.size(), cols);
  double px = 0.0, py = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    double k = rbf_kernel(v, {inputs.data() + i * cols, cols}, gamma);
    px += k * alpha[2 * i];
    py += k * alpha[2 * i + 1];
  }
  return {px, py};
}

Point predict_krr(const KrrModel& model, std::span<const double> v) {
  return model.schema.die.clamp(model.predict_raw(v));
}

namespace {

// In-place lower Cholesky factor of a symmetric positive-definite row-major matrix.
void cholesky(std::vector<double>& a, std::size_t n) {
  double max_pivot = 0.0, min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    double* rj = a.data() + j * n;
    double s = rj[j];
    for (std::size_t k = 0; k < j; ++k) s -= rj[k] * rj[k];
    if (!(s > 0.0)) {
      throw Error(ErrorCode::Numeric,
                  "kernel matrix is not positive definite at pivot " + std::to_string(j) + " (pivot " +
                      text::format_double(s) + ", pivot range so far [" + text::format_double(min_pivot) + ", " +
                      text::format_double(max_pivot) + "]); increase krr.lambda");
    }
    max_pivot = std::max(max_pivot, s);
    min_pivot = std::min(min_pivot, s);
    const double l = std::sqrt(s);
    rj[j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double* ri = a.data() + i * n;
      double t = ri[j];
      for (std::size_t k = 0; k < j; ++k) t -= ri[k] * rj[k];
      ri[j] = t / l;
    }
  }
}

// Solves L L^T x = b for the two interleaved right-hand sides in b.
void cholesky_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = l.data() + i * n;
    double sx = b[2 * i], sy = b[2 * i + 1];
    for (std::size_t k = 0; k < i; ++k) {
      sx -= ri[k] * b[2 * k];
      sy -= ri[k] * b[2 * k + 1];
    }
    b[2 * i] = sx / ri[i];
    b[2 * i + 1] = sy / ri[i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double sx = b[2 * i], sy = b[2 * i + 1];
    for (std::size_t k = i + 1; k < n; ++k) {
      sx -= l[k * n + i] * b[2 * k];
      sy -= l[k * n + i] * b[2 * k + 1];
    }
    const double d = l[i * n + i];
    b[2 * i] = sx / d;
    b[2 * i + 1] = sy / d;
  }
}

}  // namespace

KrrModel train_krr(const TrainingData& data, const Schema& schema, const KrrConfig& config) {
  if (data.rows == 0) throw Error(ErrorCode::Domain, "cannot train on an empty dataset");
  check_width(data.cols, schema.width());
  if (!(config.lambda > 0.0)) throw Error(ErrorCode::Domain, "krr.lambda must be positive");
  if (!(config.gamma >= 0.0)) throw Error(ErrorCode::Domain, "krr.gamma must be non-negative");

  const std::size_t n = data.rows;
  KrrModel model;
  model.gamma = config.gamma > 0.0 ? config.gamma : 1.0 / static_cast<double>(data.cols);
  model.lambda = config.lambda;
  model.schema = schema;
  model.rows = n;
  model.cols = data.cols;
  model.inputs = data.x;

  const double ridge = config.lambda * static_cast<double>(n);
  std::vector<double> system(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    system[i * n + i] = 1.0 + ridge;
    for (std::size_t j = 0; j < i; ++j) {
      double k = rbf_kernel(data.row(i), data.row(j), model.gamma);
      system[i * n + j] = k;
      system[j * n + i] = k;
    }
  }
  std::vector<double> factor = system;
  cholesky(factor, n);

  auto residual_of = [&](const std::vector<double>& a) {
    std::vector<double> r(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      double sx = 0.0, sy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        sx += system[i * n + j] * a[2 * j];
        sy += system[i * n + j] * a[2 * j + 1];
      }
      r[2 * i] = data.y[2 * i] - sx;
      r[2 * i + 1] = data.y[2 * i + 1] - sy;
    }
    return r;
  };

  model.alpha = data.y;
  cholesky_solve(factor, n, model.alpha);
  // one step of iterative refinement
  std::vector<double> r = residual_of(model.alpha);
  cholesky_solve(factor, n, r);
  for (std::size_t i = 0; i < 2 * n; ++i) model.alpha[i] += r[i];

  r = residual_of(model.alpha);
  double rn = 0.0, yn = 0.0;
  for (std::size_t i = 0; i < 2 * n; ++i) {
    rn += r[i] * r[i];
    yn += data.y[i] * data.y[i];
  }
  model.residual = yn > 0.0 ? std::sqrt(rn / yn) : std::sqrt(rn);
  return model;
}

KrrModel train_krr(const Dataset& dataset, const KrrConfig& config) {
  return train_krr(to_training_data(dataset), dataset.schema, config);
}

// ---- common surface -------------------------------------------------------

std::string_view to_string(ModelKind kind) { return kind == ModelKind::Forest ? "forest" : "krr"; }

ModelKind parse_model_kind(std::string_view s) {
  if (s == "forest" || s == "rfr") return ModelKind::Forest;
  if (s == "krr") return ModelKind::Krr;
  throw Error(ErrorCode::Config, "unknown model kind '" + std::string(s) + "' (forest|krr)");
}

Model train(ModelKind kind, const Dataset& dataset, const LearnerConfig& config) {
  if (kind == ModelKind::Forest) return train_forest(dataset, config.forest);
  return train_krr(dataset, config.krr);
}

const Schema& model_schema(const Model& model) {
  return std::visit([](const auto& m) -> const Schema& { return m.schema; }, model);
}

void check_schema(const Model& model, const Schema& dataset_schema) {
  const Schema& s = model_schema(model);
  if (s.fingerprint() != dataset_schema.fingerprint())
    throw Error(ErrorCode::Schema, "model fingerprint '" + s.fingerprint() + "' does not match dataset '" +
                                       dataset_schema.fingerprint() + "'");
}

Point predict(const Model& model, std::span<const double> v) {
  if (const auto* f = std::get_if<Forest>(&model)) return predict_forest(*f, v);
  return predict_krr(std::get<KrrModel>(model), v);
}

std::vector<Point> predict_rows(const Model& model, const Dataset& dataset, bool prediction_mode) {
  check_schema(model, dataset.schema);
  const Schema& schema = model_schema(model);
  std::vector<Point> out;
  out.reserve(dataset.rows.size());
  for (const FeatureRow& r : dataset.rows) out.push_back(predict(model, assemble_vector(r, schema, prediction_mode)));
  return out;
}

Metrics error_metrics(std::span<const Point> predicted, std::span<const Point> truth) {
  if (predicted.size() != truth.size() || truth.empty())
    throw Error(ErrorCode::Domain, "metrics need equally sized, non-empty prediction and truth lists");
  Metrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    double ex = predicted[i].x - truth[i].x;
    double ey = predicted[i].y - truth[i].y;
    m.mae_x += std::abs(ex);
    m.mae_y += std::abs(ey);
    m.rmse_x += ex * ex;
    m.rmse_y += ey * ey;
  }
  auto n = static_cast<double>(truth.size());
  m.mae_x /= n;
  m.mae_y /= n;
  m.rmse_x = std::sqrt(m.rmse_x / n);
  m.rmse_y = std::sqrt(m.rmse_y / n);
  return m;
}

Metrics evaluate(ModelKind kind, const Dataset& train_set, const Dataset& test_set, const LearnerConfig& config) {
  if (train_set.schema.fingerprint() != test_set.schema.fingerprint())
    throw Error(ErrorCode::Schema, "train and test datasets have different schemas");
  auto t0 = Clock::now();
  Model model = train(kind, train_set, config);
  double fit = seconds_since(t0);

  std::vector<Point> truth;
  for (const auto& r : test_set.rows) {
    if (!r.target) throw Error(ErrorCode::Schema, "test row '" + r.reg + "' has no target");
    truth.push_back(*r.target);
  }
  t0 = Clock::now();
  // Test rows are assembled with the training depth scale.
  std::vector<Point> pred = predict_rows(model, test_set, false);
  double pt = seconds_since(t0);

  Metrics m = error_metrics(pred, truth);
  m.fit_seconds = fit;
  m.predict_seconds = pt;
  return m;
}

std::vector<CurveRow> learning_curve(ModelKind kind, const Dataset& dataset, const std::vector<double>& fractions,
                                     int folds, std::uint64_t seed, const LearnerConfig& config) {
  if (folds < 2) throw Error(ErrorCode::Domain, "learning curve needs at least 2 folds");
  if (dataset.rows.size() < static_cast<std::size_t>(folds))
    throw Error(ErrorCode::Domain, "fewer rows than folds");
  std::vector<std::size_t> order(dataset.rows.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "curve"));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<CurveRow> out;
  for (double fraction : fractions) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::Domain, "curve fractions must lie in (0,1]");
    for (int fold = 0; fold < folds; ++fold) {
      Dataset train_set{dataset.schema, {}};
      Dataset test_set{dataset.schema, {}};
      for (std::size_t i = 0; i < order.size(); ++i)
        (static_cast<int>(i % static_cast<std::size_t>(folds)) == fold ? test_set : train_set)
            .rows.push_back(dataset.rows[order[i]]);
      auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(train_set.rows.size()) - 1e-9));
      if (keep < 2)
        throw Error(ErrorCode::Domain, "fraction " + text::format_double(fraction) + " leaves fewer than 2 rows");
      train_set.rows.resize(keep);
      out.push_back({kind, fraction, fold, keep, evaluate(kind, train_set, test_set, config)});
    }
  }
  return out;
}

std::string write_curve_csv(const std::vector<CurveRow>& rows) {
  using text::format_fixed;
  std::string out = "model,fraction,fold,mae_x,mae_y,rmse_x,rmse_y,fit_s,predict_s\n";
  for (const auto& r : rows)
    out += std::string(to_string(r.kind)) + "," + text::format_double(r.fraction) + "," + std::to_string(r.fold) +
           "," + format_fixed(r.metrics.mae_x, 6) + "," + format_fixed(r.metrics.mae_y, 6) + "," +
           format_fixed(r.metrics.rmse_x, 6) + "," + format_fixed(r.metrics.rmse_y, 6) + "," +
           format_fixed(r.metrics.fit_seconds, 6) + "," + format_fixed(r.metrics.predict_seconds, 6) + "\n";
  return out;
}

// ---- model file -----------------------------------------------------------

namespace {

constexpr int kModelVersion = 1;

nlohmann::ordered_json schema_json(const Schema& s) {
  nlohmann::ordered_json j;
  j["k"] = s.k;
  j["die"] = {s.die.width, s.die.height};
  j["clock_period"] = s.clock_period;
  j["depth_max"] = s.depth_max;
  j["normalize"] = s.normalize;
  return j;
}

Schema schema_from(const nlohmann::json& j) {
  Schema s;
  s.k = j.at("k").get<int>();
  s.die = {j.at("die").at(0).get<double>(), j.at("die").at(1).get<double>()};
  s.clock_period = j.at("clock_period").get<double>();
  s.depth_max = j.at("depth_max").get<int>();
  s.normalize = j.at("normalize").get<bool>();
  return s;
}

}  // namespace

std::string save_model(const Model& model) {
  nlohmann::ordered_json j;
  j["format"] = "regplace-model";
  j["version"] = kModelVersion;
  if (const auto* f = std::get_if<Forest>(&model)) {
    j["kind"] = "forest";
    j["schema"] = schema_json(f->schema);
    j["fingerprint"] = f->schema.fingerprint();
    j["config"] = {{"n_trees", f->config.n_trees},   {"mtry", f->config.mtry},
                   {"min_leaf", f->config.min_leaf}, {"max_depth", f->config.max_depth},
                   {"seed", f->config.seed},         {"bootstrap", f->config.bootstrap}};
    auto trees = nlohmann::ordered_json::array();
    for (const Tree& t : f->trees) {
      nlohmann::ordered_json tj;
      std::vector<int> feature, left, right, count;
      std::vector<double> threshold, mx, my;
      for (const TreeNode& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        mx.push_back(n.mean_x);
        my.push_back(n.mean_y);
        count.push_back(n.count);
      }
      tj["feature"] = feature;
      tj["threshold"] = threshold;
      tj["left"] = left;
      tj["right"] = right;
      tj["mean_x"] = mx;
      tj["mean_y"] = my;
      tj["count"] = count;
      trees.push_back(std::move(tj));
    }
    j["trees"] = std::move(trees);
  } else {
    const auto& k = std::get<KrrModel>(model);
    j["kind"] = "krr";
    j["schema"] = schema_json(k.schema);
    j["fingerprint"] = k.schema.fingerprint();
    j["config"] = {{"gamma", k.gamma}, {"lambda", k.lambda}};
    j["residual"] = k.residual;
    j["rows"] = k.rows;
    j["cols"] = k.cols;
    j["inputs"] = k.inputs;
    j["alpha"] = k.alpha;
  }
  return j.dump() + "\n";
}

Model load_model(std::string_view document) {
  try {
    auto j = nlohmann::json::parse(document);
    if (j.value("format", "") != "regplace-model") throw Error(ErrorCode::Parse, "not a model file");
    if (j.at("version").get<int>() != kModelVersion)
      throw Error(ErrorCode::Parse, "unsupported model version " + j.at("version").dump());
    Schema schema = schema_from(j.at("schema"));
    if (j.at("fingerprint").get<std::string>() != schema.fingerprint())
      throw Error(ErrorCode::Schema, "model fingerprint does not match its own schema");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "forest") {
      Forest f;
      f.schema = schema;
      const auto& c = j.at("config");
      f.config.n_trees = c.at("n_trees").get<int>();
      f.config.mtry = c.at("mtry").get<int>();
      f.config.min_leaf = c.at("min_leaf").get<int>();
      f.config.max_depth = c.at("max_depth").get<int>();
      f.config.seed = c.at("seed").get<std::uint64_t>();
      f.config.bootstrap = c.at("bootstrap").get<bool>();
      for (const auto& tj : j.at("trees")) {
        auto feature = tj.at("feature").get<std::vector<int>>();
        auto threshold = tj.at("threshold").get<std::vector<double>>();
        auto left = tj.at("left").get<std::vector<int>>();
        auto right = tj.at("right").get<std::vector<int>>();
        auto mx = tj.at("mean_x").get<std::vector<double>>();
        auto my = tj.at("mean_y").get<std::vector<double>>();
        auto count = tj.at("count").get<std::vector<int>>();
        const std::size_t n = feature.size();
        if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || mx.size() != n ||
            my.size() != n || count.size() != n)
          throw Error(ErrorCode::Parse, "tree arrays have inconsistent lengths");
        Tree t;
        for (std::size_t i = 0; i < n; ++i) {
          if (feature[i] >= 0) {
            auto bad = [&](int child) { return child <= static_cast<int>(i) || child >= static_cast<int>(n); };
            if (static_cast<std::size_t>(feature[i]) >= schema.width() || bad(left[i]) || bad(right[i]))
              throw Error(ErrorCode::Parse, "tree node " + std::to_string(i) + " is malformed");
          }
          t.nodes.push_back({feature[i], threshold[i], left[i], right[i], mx[i], my[i], count[i]});
        }
        f.trees.push_back(std::move(t));
      }
      if (f.trees.size() != static_cast<std::size_t>(f.config.n_trees))
        throw Error(ErrorCode::Parse, "forest tree count does not match its config");
      return f;
    }
    if (kind == "krr") {
      KrrModel k;
      k.schema = schema;
      k.gamma = j.at("config").at("gamma").get<double>();
      k.lambda = j.at("config").at("lambda").get<double>();
      k.residual = j.at("residual").get<double>();
      k.rows = j.at("rows").get<std::size_t>();
      k.cols = j.at("cols").get<std::size_t>();
      k.inputs = j.at("inputs").get<std::vector<double>>();
      k.alpha = j.at("alpha").get<std::vector<double>>();
      if (k.cols != schema.width() || k.inputs.size() != k.rows * k.cols || k.alpha.size() != 2 * k.rows)
        throw Error(ErrorCode::Parse, "kernel model arrays have inconsistent sizes");
      return k;
    }
    throw Error(ErrorCode::Parse, "unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("model file: ") + e.what());
  }
}

}  // namespace regplace
