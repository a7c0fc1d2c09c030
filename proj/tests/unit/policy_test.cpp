#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "budget_tree/pipeline.hpp"
#include "planted.hpp"

namespace bt = budget_tree;

namespace {

struct Fixture {
  planted::Problem problem;
  bt::PreparedData data;
  bt::TrainResult trained;
};

const Fixture& Cascade() {
  static const Fixture f = [] {
    Fixture out;
    out.problem = planted::Cascade(1600, 21, {0.2, true, 0.1});
    out.data = bt::Prepare(out.problem.data, {0.5, 0.25, 0.25}, 4);
    bt::TrainConfig cfg;
    cfg.num_leaves = 2;
    cfg.alpha = 0.05;
    cfg.classifier_basis = {1, false, true};
    out.trained = bt::TrainSystem(out.data, out.problem.sensors, cfg);
    return out;
  }();
  return f;
}

}  // namespace

TEST(Evaluate, SingleLeafUsesEverySensor) {
  auto p = planted::Cascade(400, 2);
  auto d = bt::Prepare(p.data, {0.5, 0.25, 0.25}, 1);
  bt::TrainConfig cfg;
  cfg.fixed_subsets = std::vector<bt::SensorSet>{{0, 1}};
  auto r = bt::TrainSystem(d, p.sensors, cfg);
  auto rec = bt::Evaluate(r.system, d.test);
  EXPECT_DOUBLE_EQ(rec.cost_fraction, 1.0);
  auto full = bt::TrainSubsetModel(d.train, p.sensors, {0, 1}, cfg.classifier_basis);
  auto pred = bt::PredictRows(full, d.test.x);
  int wrong = 0;
  for (int i = 0; i < d.test.size(); ++i) wrong += pred[i] != d.test.y[i];
  EXPECT_DOUBLE_EQ(rec.error, static_cast<double>(wrong) / d.test.size());
}

TEST(Evaluate, CascadeSavesCostAtHighAccuracy) {
  const auto& f = Cascade();
  ASSERT_EQ(f.trained.system.tree.num_leaves(), 2);
  auto rec = bt::Evaluate(f.trained.system, f.data.test);
  EXPECT_LT(rec.cost_fraction, 0.5);
  EXPECT_GE(1.0 - rec.error, 0.98);
}

TEST(Evaluate, RiskMatchesProductRiskAtRealizedSigns) {
  const auto& f = Cascade();
  const auto& sys = f.trained.system;
  auto rec = bt::Evaluate(sys, f.data.test);
  auto correct = bt::LeafCorrectness(sys.leaf_models, f.data.test);
  auto s = bt::ComputeSavings<double>(sys.tree, sys.sensors, correct, f.data.test.size(), sys.alpha);
  double total = 0.0;
  for (int i = 0; i < rec.size(); ++i) total += bt::ProductRisk(sys.tree, s, rec.signs[i], i);
  EXPECT_NEAR(rec.error + sys.alpha * rec.mean_cost, total / rec.size(), 1e-12);
}

TEST(Evaluate, CostIsTheUnionAlongThePath) {
  const auto& f = Cascade();
  const auto& sys = f.trained.system;
  auto rec = bt::Evaluate(sys, f.data.test);
  for (int i = 0; i < rec.size(); ++i) {
    const auto row = f.data.test.x.row(i);
    bt::SensorSet acquired;
    bt::ChildRef c = sys.tree.root();
    while (!c.is_leaf) {
      const auto& node = sys.tree.nodes[c.index];
      acquired = bt::SetUnion(acquired, node.acquired);
      c = sys.decisions.nodes[c.index].Value(row) > 0 ? node.positive : node.negative;
    }
    acquired = bt::SetUnion(acquired, sys.tree.leaves[c.index].sensors);
    ASSERT_EQ(rec.leaf[i], c.index);
    ASSERT_EQ(rec.cost[i], sys.sensors.Cost(acquired));
    ASSERT_EQ(bt::Route(sys.tree, rec.signs[i]), rec.leaf[i]);
  }
}

TEST(Evaluate, InvariantToExampleOrder) {
  const auto& f = Cascade();
  const auto& sys = f.trained.system;
  std::vector<int> perm(static_cast<std::size_t>(f.data.test.size()));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(5));
  auto shuffled = f.data.test.Rows(perm);
  auto a = bt::Evaluate(sys, f.data.test);
  auto b = bt::Evaluate(sys, shuffled);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    EXPECT_EQ(b.leaf[i], a.leaf[perm[i]]);
    EXPECT_EQ(b.cost[i], a.cost[perm[i]]);
    EXPECT_EQ(b.correct[i], a.correct[perm[i]]);
  }
  EXPECT_NEAR(a.error, b.error, 1e-15);
  EXPECT_NEAR(a.mean_cost, b.mean_cost, 1e-12);
}

TEST(Evaluate, RejectsMismatchedSystem) {
  auto sys = Cascade().trained.system;
  sys.leaf_models.pop_back();
  EXPECT_THROW(bt::Evaluate(sys, Cascade().data.test), bt::Error);
}

TEST(Myopic, ThresholdEndpoints) {
  const auto& f = Cascade();
  const auto& sys = f.trained.system;
  auto policy = bt::TrainMyopic(sys.tree, f.data.train, sys.sensors, {1, false, true});
  double cheapest = 1e300;
  for (const auto& leaf : sys.tree.leaves) cheapest = std::min(cheapest, sys.sensors.Cost(leaf.sensors));
  auto low = bt::EvaluateMyopic(sys, policy, 0.0, f.data.test);
  for (double c : low.cost) EXPECT_EQ(c, cheapest);
  auto high = bt::EvaluateMyopic(sys, policy, 1.0, f.data.test);
  EXPECT_DOUBLE_EQ(high.cost_fraction, 1.0);
  EXPECT_THROW(bt::EvaluateMyopic(sys, policy, 1.5, f.data.test), bt::Error);
}

TEST(Myopic, CostIsMonotoneInThreshold) {
  const auto& f = Cascade();
  const auto& sys = f.trained.system;
  auto policy = bt::TrainMyopic(sys.tree, f.data.train, sys.sensors, {1, false, true});
  double prev = -1.0;
  for (double tau : bt::LinearGrid(0.0, 1.0, 0.05)) {
    auto r = bt::EvaluateMyopic(sys, policy, tau, f.data.test);
    EXPECT_GE(r.mean_cost, prev - 1e-12) << "tau " << tau;
    prev = r.mean_cost;
  }
}

TEST(Myopic, EmptyRootSetUsesPriorModel) {
  auto p = planted::Cascade(300, 8);
  auto d = bt::Prepare(p.data, {0.5, 0.25, 0.25}, 2);
  bt::TrainConfig cfg;
  cfg.fixed_subsets = std::vector<bt::SensorSet>{{0}, {1}};
  cfg.alpha = 0.05;
  auto r = bt::TrainSystem(d, p.sensors, cfg);
  ASSERT_TRUE(r.system.tree.nodes[0].acquired.empty());
  auto policy = bt::TrainMyopic(r.system.tree, d.train, p.sensors, {1, false, true});
  EXPECT_EQ(policy.node_models[0].weights.cols(), 1);
  auto rec = bt::EvaluateMyopic(r.system, policy, 0.0, d.test);
  for (int leaf : rec.leaf) EXPECT_EQ(leaf, 0);
}

TEST(Curve, SortAndDominance) {
  std::vector<bt::CurvePoint> c{{0.3, 2.0, 0.4, 0.1, true, {}},
                                {0.1, 1.0, 0.2, 0.2, true, {}},
                                {0.2, 0.0, 0.0, 0.0, false, "x"}};
  bt::SortCurve(&c);
  EXPECT_EQ(c[0].param, 0.1);
  EXPECT_EQ(c[1].param, 0.3);
  EXPECT_FALSE(c[2].ok);
  std::vector<bt::CurvePoint> other{{0.5, 1.5, 0.3, 0.2, true, {}}};
  EXPECT_TRUE(bt::WeaklyDominates(c, other, 0.0));
  other[0].error = 0.05;
  EXPECT_FALSE(bt::WeaklyDominates(c, other, 0.0));
}

TEST(Sweep, ReproducibleAndFlagsFailures) {
  auto p = planted::Cascade(500, 13);
  auto d = bt::Prepare(p.data, {0.5, 0.25, 0.25}, 3);
  bt::TrainConfig cfg;
  cfg.num_leaves = 2;
  cfg.decision_basis = {1, false, true};
  std::vector<double> alphas{0.01, 0.05, 5.0};
  auto a = bt::SweepAlpha(d, p.sensors, cfg, alphas, d.test);
  auto b = bt::SweepAlpha(d, p.sensors, cfg, alphas, d.test);
  ASSERT_EQ(a.curve.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(a.curve[s].param, b.curve[s].param);
    EXPECT_EQ(a.curve[s].mean_cost, b.curve[s].mean_cost);
    EXPECT_EQ(a.curve[s].error, b.curve[s].error);
  }
  EXPECT_FALSE(a.curve.back().ok);
  EXPECT_EQ(a.curve.back().param, 5.0);
  EXPECT_NE(a.curve.back().message.find("smaller alpha"), std::string::npos);
  EXPECT_LE(a.curve[0].mean_cost, a.curve[1].mean_cost);
  auto ref = bt::MyopicReference(a);
  ASSERT_TRUE(ref.has_value());
}
