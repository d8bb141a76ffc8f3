#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "regplace/learn.hpp"
#include "regplace/perturb.hpp"
#include "regplace/place.hpp"

using namespace regplace;

namespace {

// Random rows on a 40x40 die; targets come from `target` or are uniform.
Dataset random_dataset(std::size_t n, int k, std::uint64_t seed, bool normalize = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  Dataset ds;
  ds.schema.k = k;
  ds.schema.die = {40, 40};
  ds.schema.clock_period = 1.0;
  ds.schema.normalize = normalize;
  ds.schema.depth_max = 9;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureRow r;
    r.design = "d";
    r.reg = "r" + std::to_string(i);
    for (int c = 0; c < k; ++c)
      r.chains.push_back({u(rng), u(rng), static_cast<int>(rng() % 10), u(rng), u(rng)});
    r.wslack = u(rng) / 40.0 - 0.5;
    r.target = Point{u(rng), u(rng)};
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

double sse(const std::vector<Point>& pts) {
  if (pts.empty()) return 0.0;
  double mx = 0, my = 0;
  for (Point p : pts) mx += p.x, my += p.y;
  mx /= pts.size();
  my /= pts.size();
  double s = 0;
  for (Point p : pts) s += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
  return s;
}

ForestConfig memorizer() {
  ForestConfig c;
  c.n_trees = 1;
  c.min_leaf = 1;
  c.bootstrap = false;
  return c;
}

Tree leaf_tree(double x, double y) {
  Tree t;
  TreeNode n;
  n.mean_x = x;
  n.mean_y = y;
  n.count = 1;
  t.nodes.push_back(n);
  return t;
}

}  // namespace

TEST(Forest, ConstantTargetIsExact) {
  Dataset ds = random_dataset(60, 2, 1);
  for (auto& r : ds.rows) r.target = Point{12.345678901, 7.25};
  ForestConfig cfg;
  cfg.n_trees = 20;
  Forest f = train_forest(ds, cfg);
  Dataset probe = random_dataset(30, 2, 2);
  TrainingData td = to_training_data(probe);
  for (std::size_t i = 0; i < td.rows; ++i) {
    Point p = predict_forest(f, td.row(i));
    EXPECT_EQ(p.x, 12.345678901);
    EXPECT_EQ(p.y, 7.25);
  }
}

TEST(Forest, SingleUnbootstrappedTreeMemorizes) {
  Dataset ds = random_dataset(80, 3, 3);
  Forest f = train_forest(ds, memorizer());
  TrainingData td = to_training_data(ds);
  for (std::size_t i = 0; i < td.rows; ++i) {
    Point p = f.predict_raw(td.row(i));
    EXPECT_EQ(p.x, td.y[2 * i]);
    EXPECT_EQ(p.y, td.y[2 * i + 1]);
  }
}

TEST(Forest, SameSeedSameModelFile) {
  Dataset ds = random_dataset(100, 4, 4);
  ForestConfig cfg;
  cfg.n_trees = 15;
  cfg.seed = 77;
  std::string a = save_model(train_forest(ds, cfg));
  EXPECT_EQ(a, save_model(train_forest(ds, cfg)));
  cfg.seed = 78;
  EXPECT_NE(a, save_model(train_forest(ds, cfg)));
}

TEST(Forest, TwoTreeMeanAndSingleLeaf) {
  Forest f;
  f.schema.k = 1;
  f.schema.die = {40, 40};
  f.trees = {leaf_tree(0, 0), leaf_tree(10, 20)};
  std::vector<double> v(6, 0.3);
  EXPECT_EQ(predict_forest(f, v), (Point{5, 10}));
  f.trees = {leaf_tree(3, 4)};
  for (double x : {-5.0, 0.0, 99.0}) {
    std::fill(v.begin(), v.end(), x);
    EXPECT_EQ(predict_forest(f, v), (Point{3, 4}));
  }
}

TEST(Forest, PredictionIsClampedToTheDie) {
  // Two rows near the top-right corner; the schema's die is then shrunk so the
  // learned mean falls outside it.
  Dataset ds = random_dataset(2, 1, 5);
  ds.rows[0].target = Point{39.5, 39.0};
  ds.rows[1].target = Point{39.9, 39.8};
  Forest f = train_forest(ds, memorizer());
  f.schema.die = {30, 30};
  TrainingData td = to_training_data(ds);
  Point raw = f.predict_raw(td.row(0));
  EXPECT_GT(raw.x, 30.0);
  EXPECT_EQ(predict_forest(f, td.row(0)), (Point{30, 30}));
}

TEST(Forest, RejectsEmptyAndBadConfig) {
  Dataset ds = random_dataset(0, 1, 6);
  EXPECT_THROW(train_forest(ds, ForestConfig{}), Error);
  ds = random_dataset(5, 1, 6);
  ForestConfig cfg;
  cfg.mtry = 99;
  EXPECT_THROW(train_forest(ds, cfg), Error);
}

TEST(Forest, IdenticalRowsWithDifferentTargetsGiveSingleLeaves) {
  Dataset ds = random_dataset(6, 1, 7);
  for (auto& r : ds.rows) r.chains = ds.rows[0].chains, r.wslack = 0.1;
  Forest f = train_forest(ds, memorizer());
  ASSERT_EQ(f.trees[0].nodes.size(), 1u);
  EXPECT_TRUE(f.trees[0].nodes[0].is_leaf());
}

TEST(ForestProperty, MeanOfTreesIsExact) {
  Dataset ds = random_dataset(150, 3, 8);
  ForestConfig cfg;
  cfg.n_trees = 37;
  Forest f = train_forest(ds, cfg);
  TrainingData probe = to_training_data(random_dataset(50, 3, 9));
  for (std::size_t i = 0; i < probe.rows; ++i) {
    long double sx = 0, sy = 0;
    for (const Tree& t : f.trees) {
      Point p = t.predict(probe.row(i));
      sx += p.x;
      sy += p.y;
    }
    Point p = f.predict_raw(probe.row(i));
    EXPECT_EQ(p.x, static_cast<double>(sx / f.trees.size()));
    EXPECT_EQ(p.y, static_cast<double>(sy / f.trees.size()));
  }
}

TEST(ForestProperty, BootstrapKeepsSampleSize) {
  Dataset ds = random_dataset(97, 2, 10);
  ForestConfig cfg;
  cfg.n_trees = 25;
  Forest f = train_forest(ds, cfg);
  ASSERT_EQ(f.trees.size(), 25u);
  for (const Tree& t : f.trees) EXPECT_EQ(t.nodes[0].count, 97);
}

TEST(ForestProperty, NodesRouteAndLeavesRespectMinLeaf) {
  Dataset ds = random_dataset(120, 2, 11);
  ForestConfig cfg;
  cfg.n_trees = 10;
  cfg.min_leaf = 3;
  Forest f = train_forest(ds, cfg);
  for (const Tree& t : f.trees) {
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const TreeNode& n = t.nodes[i];
      if (n.is_leaf()) {
        if (i > 0) EXPECT_GE(n.count, 3);
        continue;
      }
      EXPECT_EQ(t.nodes[n.left].count + t.nodes[n.right].count, n.count);
    }
  }
}

TEST(ForestProperty, RootSplitIsOptimalOnMicroInstances) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> small(0, 5);
  for (int trial = 0; trial < 300; ++trial) {
    // Six columns with three live features; the others stay constant.
    const std::size_t n = 2 + rng() % 7;
    TrainingData td;
    td.rows = n;
    td.cols = 6;
    td.x.assign(n * 6, 0.0);
    td.y.resize(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < 3; ++f) td.x[i * 6 + f] = small(rng);
      td.y[2 * i] = small(rng) * 1.5;
      td.y[2 * i + 1] = small(rng) * 0.5;
    }
    Schema schema;
    schema.k = 1;
    schema.die = {40, 40};
    ForestConfig cfg = memorizer();
    cfg.mtry = 6;
    cfg.max_depth = 1;
    Forest forest = train_forest(td, schema, cfg);

    auto target = [&](std::size_t i) { return Point{td.y[2 * i], td.y[2 * i + 1]}; };
    std::vector<Point> all;
    for (std::size_t i = 0; i < n; ++i) all.push_back(target(i));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < 6; ++f) {
      std::vector<double> vals;
      for (std::size_t i = 0; i < n; ++i) vals.push_back(td.x[i * 6 + f]);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t j = 1; j < vals.size(); ++j) {
        double thr = (vals[j - 1] + vals[j]) / 2;
        std::vector<Point> l, r;
        for (std::size_t i = 0; i < n; ++i) (td.x[i * 6 + f] < thr ? l : r).push_back(target(i));
        best = std::min(best, sse(l) + sse(r));
      }
    }
    const TreeNode& root = forest.trees[0].nodes[0];
    if (root.is_leaf()) {
      // Either nothing splits or the parent is already pure.
      EXPECT_TRUE(std::isinf(best) || sse(all) == 0.0) << trial;
      continue;
    }
    std::vector<Point> l, r;
    for (std::size_t i = 0; i < n; ++i)
      (td.x[i * 6 + static_cast<std::size_t>(root.feature)] < root.threshold ? l : r).push_back(target(i));
    EXPECT_NEAR(sse(l) + sse(r), best, 1e-9) << trial;
    EXPECT_NEAR(split_impurity(l) + split_impurity(r), best, 1e-9) << trial;
  }
}

TEST(Impurity, SumOfSquaredDeviations) {
  std::vector<Point> pts{{0, 0}, {2, 0}, {1, 3}};
  // Means (1, 1): x deviations 1+1+0, y deviations 1+1+4.
  EXPECT_DOUBLE_EQ(split_impurity(pts), 8.0);
  EXPECT_EQ(split_impurity({}), 0.0);
}

// ---- kernel ridge ----------------------------------------------------------

TEST(Krr, KernelHasUnitDiagonalAndDecays) {
  std::vector<double> a{1, 2, 3}, b{1, 2, 4};
  EXPECT_EQ(rbf_kernel(a, a, 0.7), 1.0);
  EXPECT_DOUBLE_EQ(rbf_kernel(a, b, 0.7), std::exp(-0.7));
}

TEST(Krr, VanishingRidgeInterpolates) {
  Dataset ds = random_dataset(60, 1, 20);
  KrrConfig cfg;
  cfg.lambda = 1e-10;
  KrrModel m = train_krr(ds, cfg);
  EXPECT_LE(m.residual, 1e-8);
  TrainingData td = to_training_data(ds);
  for (std::size_t i = 0; i < td.rows; ++i) {
    Point p = m.predict_raw(td.row(i));
    double norm = std::hypot(td.y[2 * i], td.y[2 * i + 1]);
    EXPECT_LE(std::hypot(p.x - td.y[2 * i], p.y - td.y[2 * i + 1]) / norm, 1e-6) << i;
  }
}

TEST(Krr, LargerRidgeShrinksInSampleFit) {
  // Fitted values are K (K + lambda n I)^-1 Y; every eigen-component shrinks as lambda grows.
  Dataset ds = random_dataset(40, 1, 21, true);
  TrainingData td = to_training_data(ds);
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {1e-2, 1e-1, 1.0, 10.0}) {
    KrrConfig cfg;
    cfg.lambda = lambda;
    KrrModel m = train_krr(ds, cfg);
    double sq = 0;
    for (std::size_t i = 0; i < td.rows; ++i) {
      Point p = m.predict_raw(td.row(i));
      sq += p.x * p.x + p.y * p.y;
    }
    EXPECT_LT(sq, prev) << lambda;
    prev = sq;
  }
}

TEST(Krr, FarQueryGoesToZero) {
  Dataset ds = random_dataset(20, 1, 23);
  KrrModel m = train_krr(ds, KrrConfig{});
  std::vector<double> far(6, 1e4);
  Point p = m.predict_raw(far);
  EXPECT_NEAR(p.x, 0.0, 1e-12);
  EXPECT_NEAR(p.y, 0.0, 1e-12);
  EXPECT_EQ(predict_krr(m, far), (Point{0, 0}));
}

TEST(Krr, DuplicateRowsLeavePredictionInPlace) {
  Dataset ds = random_dataset(30, 1, 24);
  KrrConfig cfg;
  cfg.lambda = 1e-10;
  KrrModel plain = train_krr(ds, cfg);
  Dataset dup = ds;
  dup.rows.push_back(ds.rows[0]);
  dup.rows.push_back(ds.rows[0]);
  KrrModel twice = train_krr(dup, cfg);
  EXPECT_LE(twice.residual, 1e-8);
  TrainingData td = to_training_data(ds);
  Point a = plain.predict_raw(td.row(0));
  Point b = twice.predict_raw(td.row(0));
  Point t = *ds.rows[0].target;
  EXPECT_NEAR(a.x, t.x, 1e-6 * std::abs(t.x) + 1e-9);
  EXPECT_NEAR(b.x, t.x, 1e-6 * std::abs(t.x) + 1e-9);
  EXPECT_NEAR(b.y, a.y, 1e-6 * std::abs(t.y) + 1e-9);
}

TEST(Krr, ResidualOnPerturbationData) {
  auto [nl, pl] = generate_synthetic(GenConfig{}, 31);
  PerturbConfig pc;
  pc.n_snapshots = 4;
  Dataset ds = make_samples(nl, pl, FeatureConfig{}, pc, DelayModel{}, Grid{});
  KrrModel m = train_krr(ds, KrrConfig{});
  EXPECT_LE(m.residual, 1e-8);
}

TEST(Krr, BadLambdaIsRejected) {
  KrrConfig cfg;
  cfg.lambda = 0.0;
  EXPECT_THROW(train_krr(random_dataset(5, 1, 25), cfg), Error);
}

// ---- evaluation and persistence -------------------------------------------

TEST(Metrics, ConstantPredictorErrors) {
  std::vector<Point> pred(5, Point{0, 0}), truth(5, Point{3, 4});
  Metrics m = error_metrics(pred, truth);
  EXPECT_EQ(m.mae_x, 3.0);
  EXPECT_EQ(m.mae_y, 4.0);

  Dataset train_set = random_dataset(10, 1, 26);
  for (auto& r : train_set.rows) r.target = Point{0, 0};
  Dataset test_set = random_dataset(10, 1, 27);
  for (auto& r : test_set.rows) r.target = Point{3, 4};
  LearnerConfig lc;
  lc.forest.n_trees = 3;
  m = evaluate(ModelKind::Forest, train_set, test_set, lc);
  EXPECT_EQ(m.mae_x, 3.0);
  EXPECT_EQ(m.mae_y, 4.0);
}

TEST(Metrics, MemorizingModelHasZeroTrainingError) {
  Dataset ds = random_dataset(50, 2, 28);
  LearnerConfig lc;
  lc.forest = memorizer();
  Metrics m = evaluate(ModelKind::Forest, ds, ds, lc);
  EXPECT_EQ(m.mae_x, 0.0);
  EXPECT_EQ(m.mae_y, 0.0);
}

TEST(MetricsProperty, RmseDominatesMae) {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> nd(0, 5);
  for (int t = 0; t < 200; ++t) {
    std::size_t n = 1 + rng() % 30;
    std::vector<Point> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = {nd(rng), nd(rng)}, b[i] = {nd(rng), nd(rng)};
    Metrics m = error_metrics(a, b);
    EXPECT_GE(m.mae_x, 0.0);
    EXPECT_GE(m.rmse_x, m.mae_x * (1 - 1e-12));
    EXPECT_GE(m.rmse_y, m.mae_y * (1 - 1e-12));
  }
}

TEST(Curve, FullFractionMatchesEvaluateOnEachFold) {
  Dataset ds = random_dataset(40, 1, 30);
  LearnerConfig lc;
  lc.forest.n_trees = 5;
  const int folds = 4;
  auto rows = learning_curve(ModelKind::Forest, ds, {0.25, 0.5, 1.0}, folds, 9, lc);
  ASSERT_EQ(rows.size(), 12u);

  // Documented partition: shuffle with the "curve" stream, row i goes to fold i % folds.
  std::vector<std::size_t> order(ds.rows.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(9, "curve"));
  std::shuffle(order.begin(), order.end(), rng);
  for (int fold = 0; fold < folds; ++fold) {
    Dataset tr{ds.schema, {}}, te{ds.schema, {}};
    for (std::size_t i = 0; i < order.size(); ++i)
      (static_cast<int>(i % folds) == fold ? te : tr).rows.push_back(ds.rows[order[i]]);
    Metrics m = evaluate(ModelKind::Forest, tr, te, lc);
    const CurveRow& c = rows[8 + static_cast<std::size_t>(fold)];
    EXPECT_EQ(c.fraction, 1.0);
    EXPECT_EQ(c.train_rows, tr.rows.size());
    EXPECT_EQ(c.metrics.mae_x, m.mae_x);
    EXPECT_EQ(c.metrics.rmse_y, m.rmse_y);
  }
  for (int fold = 0; fold < folds; ++fold) {
    EXPECT_LE(rows[fold].train_rows, rows[4 + fold].train_rows);
    EXPECT_LE(rows[4 + fold].train_rows, rows[8 + fold].train_rows);
  }
  std::string csv = write_curve_csv(rows);
  EXPECT_EQ(csv.rfind("model,fraction,fold,mae_x,mae_y,rmse_x,rmse_y,fit_s,predict_s\n", 0), 0u);
}

TEST(Curve, TinyFractionIsRejected) {
  Dataset ds = random_dataset(10, 1, 31);
  EXPECT_THROW(learning_curve(ModelKind::Krr, ds, {0.05}, 2, 1, LearnerConfig{}), Error);
  EXPECT_THROW(learning_curve(ModelKind::Krr, ds, {1.5}, 2, 1, LearnerConfig{}), Error);
}

TEST(ModelFile, ForestRoundTripPredictsIdentically) {
  Dataset ds = random_dataset(80, 2, 32);
  ForestConfig cfg;
  cfg.n_trees = 12;
  Model m = train_forest(ds, cfg);
  Model back = load_model(save_model(m));
  EXPECT_EQ(save_model(back), save_model(m));
  TrainingData probe = to_training_data(random_dataset(100, 2, 33));
  for (std::size_t i = 0; i < probe.rows; ++i) EXPECT_EQ(predict(m, probe.row(i)), predict(back, probe.row(i)));
}

TEST(ModelFile, KrrRoundTripKeepsCoefficients) {
  Dataset ds = random_dataset(25, 1, 34);
  KrrModel m = train_krr(ds, KrrConfig{});
  Model back = load_model(save_model(Model{m}));
  const KrrModel& k = std::get<KrrModel>(back);
  EXPECT_EQ(k.alpha, m.alpha);
  EXPECT_EQ(k.inputs, m.inputs);
  EXPECT_EQ(k.gamma, m.gamma);
}

TEST(ModelFile, WrongKIsAFingerprintError) {
  Dataset ds = random_dataset(20, 100, 35, true);
  Model m = train(ModelKind::Forest, ds, LearnerConfig{ForestConfig{3}, KrrConfig{}});
  Dataset other = random_dataset(5, 50, 36, true);
  try {
    predict_rows(load_model(save_model(m)), other, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Schema);
    EXPECT_NE(std::string(e.what()).find("fingerprint"), std::string::npos);
  }
}

TEST(ModelFile, GarbageIsAParseError) {
  for (const char* doc : {"{", "{}", R"({"format":"regplace-model","version":99})"}) {
    try {
      load_model(doc);
      FAIL() << doc;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parse) << doc;
    }
  }
}

TEST(ModelKind, ParsesNames) {
  EXPECT_EQ(parse_model_kind("forest"), ModelKind::Forest);
  EXPECT_EQ(parse_model_kind("rfr"), ModelKind::Forest);
  EXPECT_EQ(parse_model_kind("krr"), ModelKind::Krr);
  EXPECT_THROW(parse_model_kind("svr"), Error);
}
