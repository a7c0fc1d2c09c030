#include <random>

#include <gtest/gtest.h>

#include "budget_tree/lp_train.hpp"
#include "budget_tree/policy.hpp"
#include "planted.hpp"

namespace bt = budget_tree;

namespace {

const bt::BasisConfig kLinear{1, false, true};

bt::TreeStructure TwoLeafTree(bt::SensorSet root) {
  std::vector<bt::Leaf> leaves{{{0}, {}}, {{0, 1}, {}}};
  return bt::FinalizeTree({{std::move(root), {true, 0}, {true, 1}}}, leaves, 2);
}

bt::SavingsMatrix<double> MakeSavings(int n, int k, double r_max) {
  bt::SavingsMatrix<double> s;
  s.num_examples = n;
  s.num_leaves = k;
  s.r_max = r_max;
  s.pi.assign(static_cast<std::size_t>(n * k), 0.0);
  return s;
}

// Cascade-style instance with trained leaves and savings on the training part.
struct Instance {
  planted::Problem problem;
  bt::Dataset train;
  bt::TreeStructure tree;
  bt::SavingsMatrix<double> savings;
};

Instance MakeInstance(int n, std::uint64_t seed) {
  Instance in;
  in.problem = planted::RandomLinear(n, 3, seed);
  auto [scaler, train] = bt::Standardize(in.problem.data);
  in.train = std::move(train);
  in.tree = bt::ClusterTree({{0}, {0, 1}, {0, 1, 2}}, 3);
  std::vector<bt::LogisticModel> models;
  for (const auto& leaf : in.tree.leaves) {
    models.push_back(bt::TrainSubsetModel(in.train, in.problem.sensors, leaf.sensors, kLinear));
  }
  auto correct = bt::LeafCorrectness(models, in.train);
  in.savings = bt::ComputeSavings<double>(in.tree, in.problem.sensors, correct, in.train.size(), 0.1);
  return in;
}

double SurrogateSum(const bt::TreeStructure& tree, const bt::SavingsMatrix<double>& s,
                    const bt::WeightVectors<double>& w, const std::vector<Eigen::MatrixXd>& bases,
                    const std::vector<Eigen::VectorXd>& weights) {
  double total = 0.0;
  std::vector<double> g(weights.size());
  for (int i = 0; i < s.num_examples; ++i) {
    for (std::size_t j = 0; j < weights.size(); ++j) g[j] = bases[j].row(i).dot(weights[j]);
    total += bt::SurrogateRisk(tree, s, w, g, i);
  }
  return total;
}

}  // namespace

TEST(AssembleLp, SmallestInstanceCounts) {
  auto tree = TwoLeafTree({0});
  auto s = MakeSavings(1, 2, 2.0);
  s(0, 0) = 0.5;
  s(0, 1) = 1.0;
  auto w = bt::BuildWeights(tree, s);
  Eigen::MatrixXd x(1, 2);
  x << 0.3, -0.7;
  auto bases = bt::NodeBases(tree, bt::SensorSpec({{"a", 1, {0}}, {"b", 1, {1}}}), x, kLinear);
  auto a = bt::AssembleLp(tree, w, bases, 1e3);
  EXPECT_EQ(a.lp.n_vars(), 5);  // w, bias, gamma, alpha, beta
  EXPECT_EQ(a.lp.n_rows(), 4);  // 2 leaf rows, 2 hinge rows
  EXPECT_EQ(a.lp.vars[0].lower, -1e3);
  EXPECT_EQ(a.lp.vars[1].upper, 1e3);
  EXPECT_EQ(a.lp.vars[static_cast<std::size_t>(a.layout.Gamma(0))].lower, -bt::kInf);
  EXPECT_EQ(a.lp.vars[static_cast<std::size_t>(a.layout.Alpha(0, 0))].lower, 0.0);
  EXPECT_LE(bt::MaxViolation(a.lp, a.lp.start), 1e-12);
}

TEST(AssembleLp, CountsAreLinearInLeavesAndExamples) {
  std::mt19937_64 rng(4);
  auto tree = bt::RandomTree(4, rng);
  const int n = 100;
  auto s = MakeSavings(n, 4, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& p : s.pi) p = u(rng);
  auto w = bt::BuildWeights(tree, s);
  std::vector<Eigen::MatrixXd> bases(3, Eigen::MatrixXd::Random(n, 10));
  auto a = bt::AssembleLp(tree, w, bases, 1e3);
  EXPECT_EQ(a.lp.n_vars(), 3 * 10 + n + 2 * 3 * n);
  EXPECT_EQ(a.lp.n_rows(), 4 * n + 2 * 3 * n);
  EXPECT_LE(bt::MaxViolation(a.lp, a.lp.start), 1e-12);
}

TEST(AssembleLp, RejectsBadInputs) {
  auto tree = TwoLeafTree({});
  auto s = MakeSavings(2, 2, 1.0);
  auto w = bt::BuildWeights(tree, s);
  std::vector<Eigen::MatrixXd> bases{Eigen::MatrixXd::Ones(3, 1)};
  EXPECT_THROW(bt::AssembleLp(tree, w, bases, 1e3), bt::Error);
  bases[0] = Eigen::MatrixXd::Ones(2, 1);
  bases[0](1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(bt::AssembleLp(tree, w, bases, 1e3), bt::Error);
  bases[0](1, 0) = 1.0;
  w.wn[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(bt::AssembleLp(tree, w, bases, 1e3), bt::Error);
}

TEST(TrainDecisions, ZeroSavingsGiveZeroObjective) {
  auto tree = TwoLeafTree({0});
  auto s = MakeSavings(5, 2, 1.0);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 2);
  bt::DecisionOptions opt;
  opt.basis = kLinear;
  auto r = bt::TrainDecisions(tree, s, x, bt::SensorSpec({{"a", 1, {0}}, {"b", 1, {1}}}), opt);
  EXPECT_EQ(r.diagnostics.status, bt::LpStatus::kOptimal);
  EXPECT_NEAR(r.diagnostics.objective, 0.0, 1e-12);
}

TEST(TrainDecisions, SingleExampleGoesToTheLeafWithSavings) {
  auto tree = TwoLeafTree({0});
  auto s = MakeSavings(1, 2, 1.0);
  s(0, 0) = 0.0;
  s(0, 1) = 1.0;
  Eigen::MatrixXd x(1, 2);
  x << 0.4, 0.0;
  bt::DecisionOptions opt;
  opt.basis = kLinear;
  auto r = bt::TrainDecisions(tree, s, x, bt::SensorSpec({{"a", 1, {0}}, {"b", 1, {1}}}), opt);
  EXPECT_NEAR(r.diagnostics.objective, 0.0, 1e-9);
  EXPECT_GE(r.decisions.Values(x.row(0))[0], 1.0 - 1e-9);
}

TEST(TrainDecisions, SymmetricSavingsCostOneHinge) {
  auto tree = TwoLeafTree({});
  auto s = MakeSavings(1, 2, 2.0);
  s(0, 0) = 0.75;
  s(0, 1) = 0.75;
  Eigen::MatrixXd x(1, 2);
  x << 1.0, 2.0;
  bt::DecisionOptions opt;
  auto r = bt::TrainDecisions(tree, s, x, bt::SensorSpec({{"a", 1, {0}}, {"b", 1, {1}}}), opt);
  EXPECT_NEAR(r.diagnostics.objective, 0.75, 1e-9);
  EXPECT_NEAR(r.decisions.Values(x.row(0))[0], 0.0, 1e-9);
}

TEST(TrainDecisions, RoutesSeparableClustersToTheirBetterLeaf) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.0, 0.5);
  const int n = 200;
  Eigen::MatrixXd x(n, 2);
  auto s = MakeSavings(n, 2, 2.0);
  std::vector<int> better(n);
  for (int i = 0; i < n; ++i) {
    const bool a = i % 2 == 0;
    x(i, 0) = (a ? -2.0 : 2.0) + noise(rng);
    x(i, 1) = noise(rng);
    s(i, 0) = a ? 1.0 : 0.2;
    s(i, 1) = a ? 0.2 : 1.0;
    better[i] = a ? 0 : 1;
  }
  auto tree = TwoLeafTree({0});
  bt::DecisionOptions opt;
  opt.basis = kLinear;
  auto r = bt::TrainDecisions(tree, s, x, bt::SensorSpec({{"a", 1, {0}}, {"b", 1, {1}}}), opt);
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    auto signs = bt::SignsOf(r.decisions.Values(x.row(i)));
    hits += bt::Route(tree, signs) == better[i];
  }
  EXPECT_GE(hits, 0.95 * n);
}

TEST(TrainDecisions, ObjectivePlusConstantsIsTheSurrogate) {
  auto in = MakeInstance(150, 3);
  bt::DecisionOptions opt;
  opt.basis = kLinear;
  bt::AssembledLp lp;
  auto r = bt::TrainDecisions(in.tree, in.savings, in.train.x, in.problem.sensors, opt, &lp);
  const auto& d = r.diagnostics;
  EXPECT_EQ(d.status, bt::LpStatus::kOptimal);
  EXPECT_LE(d.max_violation, 1e-7);
  EXPECT_LE(d.gamma_gap, 1e-6);
  EXPECT_NEAR(d.objective + d.constants, d.surrogate_sum, 1e-5);
  EXPECT_EQ(lp.lp.n_rows(), d.num_rows);

  // Independent recomputation from the extracted decisions.
  auto w = bt::BuildWeights(in.tree, in.savings);
  auto bases = bt::NodeBases(in.tree, in.problem.sensors, in.train.x, kLinear);
  std::vector<Eigen::VectorXd> weights;
  for (const auto& node : r.decisions.nodes) weights.push_back(node.weights);
  const double at_opt = SurrogateSum(in.tree, in.savings, w, bases, weights);
  EXPECT_NEAR(at_opt, d.surrogate_sum, 1e-6);

  // Upper-bound chain: the 0/1-plus-cost risk never exceeds the surrogate.
  double product = 0.0;
  for (int i = 0; i < in.train.size(); ++i) {
    product += bt::ProductRisk(in.tree, in.savings, bt::SignsOf(r.decisions.Values(in.train.x.row(i))), i);
  }
  EXPECT_LE(product, at_opt + 1e-9);

  // No random point of the box does better.
  std::mt19937_64 rng(12);
  std::normal_distribution<double> step(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto other = weights;
    const double scale = trial < 50 ? 0.05 : 2.0;
    for (auto& v : other) {
      for (Eigen::Index b = 0; b < v.size(); ++b) {
        v[b] = std::clamp(v[b] + scale * step(rng), -opt.w_max, opt.w_max);
      }
    }
    EXPECT_GE(SurrogateSum(in.tree, in.savings, w, bases, other), at_opt - 1e-6);
  }
}

TEST(TrainDecisions, ExampleCapUsesLeadingRows) {
  auto in = MakeInstance(120, 5);
  bt::DecisionOptions opt;
  opt.basis = kLinear;
  opt.max_examples = 40;
  auto r = bt::TrainDecisions(in.tree, in.savings, in.train.x, in.problem.sensors, opt);
  EXPECT_EQ(r.diagnostics.num_examples, 40);
  EXPECT_EQ(r.diagnostics.num_rows, 40 * 3 + 2 * 2 * 40);
}

TEST(TrainDecisions, Deterministic) {
  auto in = MakeInstance(100, 6);
  bt::DecisionOptions opt;
  opt.basis = kLinear;
  auto a = bt::TrainDecisions(in.tree, in.savings, in.train.x, in.problem.sensors, opt);
  auto b = bt::TrainDecisions(in.tree, in.savings, in.train.x, in.problem.sensors, opt);
  EXPECT_EQ(a.diagnostics.iterations, b.diagnostics.iterations);
  EXPECT_EQ(a.diagnostics.objective, b.diagnostics.objective);
  for (int j = 0; j < a.decisions.size(); ++j) {
    EXPECT_EQ(a.decisions.nodes[j].weights, b.decisions.nodes[j].weights);
  }
}

TEST(TrainDecisions, SingleLeafNeedsNoProgram) {
  auto tree = bt::SingleLeafTree({0}, 2);
  auto s = MakeSavings(3, 1, 1.0);
  auto r = bt::TrainDecisions(tree, s, Eigen::MatrixXd::Zero(3, 2),
                              bt::SensorSpec({{"a", 1, {0}}, {"b", 1, {1}}}), {});
  EXPECT_EQ(r.decisions.size(), 0);
  EXPECT_EQ(r.diagnostics.status, bt::LpStatus::kOptimal);
}
