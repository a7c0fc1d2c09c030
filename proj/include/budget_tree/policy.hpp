#ifndef BUDGET_TREE_POLICY_HPP_
#define BUDGET_TREE_POLICY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "budget_tree/data.hpp"
#include "budget_tree/error.hpp"
#include "budget_tree/logistic.hpp"
#include "budget_tree/lp_train.hpp"
#include "budget_tree/parallel.hpp"
#include "budget_tree/risk.hpp"
#include "budget_tree/sensors.hpp"
#include "budget_tree/tree.hpp"

namespace budget_tree {

struct DecisionSystem {
  SensorSpec sensors;
  Scaler scaler;
  TreeStructure tree;
  DecisionFunctions decisions;
  std::vector<LogisticModel> leaf_models;  // leaf k trained on tree.leaves[k].sensors
  double alpha = 0.0;
  BasisConfig classifier_basis{};
  BasisConfig decision_basis{};

  void Validate() const {
    if (static_cast<int>(leaf_models.size()) != tree.num_leaves()) {
      throw Error(ErrorKind::kModelMismatch, "policy_eval", "one leaf model per leaf required");
    }
    if (decisions.size() != tree.num_nodes()) {
      throw Error(ErrorKind::kModelMismatch, "policy_eval", "one decision per node required");
    }
    for (int k = 0; k < tree.num_leaves(); ++k) {
      if (leaf_models[static_cast<std::size_t>(k)].subset != tree.leaves[static_cast<std::size_t>(k)].sensors) {
        throw Error(ErrorKind::kModelMismatch, "policy_eval",
                    "leaf model " + std::to_string(k) + " was trained on another sensor set");
      }
    }
    for (int j = 0; j < tree.num_nodes(); ++j) {
      if (decisions.nodes[static_cast<std::size_t>(j)].acquired != tree.nodes[static_cast<std::size_t>(j)].acquired) {
        throw Error(ErrorKind::kModelMismatch, "policy_eval",
                    "decision " + std::to_string(j) + " reads sensors the node has not acquired");
      }
    }
  }
};

struct EvalRecord {
  std::vector<int> leaf;
  std::vector<double> cost;
  std::vector<std::uint8_t> correct;
  std::vector<SignVector> signs;  // realized signs; unvisited nodes hold 0
  double error = 0.0;
  double mean_cost = 0.0;
  double cost_fraction = 0.0;

  int size() const { return static_cast<int>(leaf.size()); }
};

namespace detail {

inline std::vector<double> Restrict(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                                    const std::vector<int>& columns) {
  std::vector<double> xs(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) xs[c] = row[columns[c]];
  return xs;
}

inline void Aggregate(EvalRecord* r, double total_cost) {
  const auto n = static_cast<double>(r->leaf.size());
  double wrong = 0.0;
  double cost = 0.0;
  for (std::size_t i = 0; i < r->leaf.size(); ++i) {
    wrong += r->correct[i] ? 0.0 : 1.0;
    cost += r->cost[i];
  }
  r->error = n > 0 ? wrong / n : 0.0;
  r->mean_cost = n > 0 ? cost / n : 0.0;
  r->cost_fraction = total_cost > 0 ? r->mean_cost / total_cost : 0.0;
}

}  // namespace detail

// Routes each (standardized) example by sign(g_j), paying for the union of
// sensor sets acquired along the realized path, and classifies at the leaf.
inline EvalRecord Evaluate(const DecisionSystem& system, const Dataset& data) {
  system.Validate();
  const auto& tree = system.tree;
  const auto n = static_cast<std::size_t>(data.size());
  EvalRecord r;
  r.leaf.resize(n);
  r.cost.resize(n);
  r.correct.resize(n);
  r.signs.assign(n, SignVector(static_cast<std::size_t>(tree.num_nodes()), 0));
  ParallelFor(n, [&](std::size_t i) {
    const auto row = data.x.row(static_cast<Eigen::Index>(i));
    SensorSet acquired;
    ChildRef c = tree.root();
    while (!c.is_leaf) {
      const auto j = static_cast<std::size_t>(c.index);
      acquired = SetUnion(acquired, tree.nodes[j].acquired);
      const bool pos = system.decisions.nodes[j].Value(row) > 0.0;
      r.signs[i][j] = pos ? 1 : 0;
      c = pos ? tree.nodes[j].positive : tree.nodes[j].negative;
    }
    acquired = SetUnion(acquired, tree.leaves[static_cast<std::size_t>(c.index)].sensors);
    const auto& model = system.leaf_models[static_cast<std::size_t>(c.index)];
    const int pred = Predict(model, detail::Restrict(row, model.columns));
    r.leaf[i] = c.index;
    r.cost[i] = system.sensors.Cost(acquired);
    r.correct[i] = pred == data.y[i] ? 1 : 0;
  });
  detail::Aggregate(&r, system.sensors.TotalCost());
  return r;
}

// Row-major N x K correctness of every leaf model on `data`.
inline std::vector<std::uint8_t> LeafCorrectness(const std::vector<LogisticModel>& models,
                                                 const Dataset& data) {
  const auto n = static_cast<std::size_t>(data.size());
  const auto k_leaves = models.size();
  std::vector<std::uint8_t> out(n * k_leaves);
  ParallelFor(k_leaves, [&](std::size_t k) {
    auto pred = PredictRows(models[k], data.x);
    for (std::size_t i = 0; i < n; ++i) out[i * k_leaves + k] = pred[i] == data.y[i] ? 1 : 0;
  });
  return out;
}

// Confidence-threshold baseline. Each internal node owns a classifier over
// its acquired sensors; when that classifier is confident enough the example
// takes the child with the cheaper sensor set, otherwise the costlier one.
struct MyopicPolicy {
  std::vector<LogisticModel> node_models;
};

inline MyopicPolicy TrainMyopic(const TreeStructure& tree, const Dataset& train,
                                const SensorSpec& sensors, const BasisConfig& basis,
                                const LogisticOptions& opt = {}) {
  MyopicPolicy p;
  p.node_models.resize(static_cast<std::size_t>(tree.num_nodes()));
  ParallelFor(p.node_models.size(), [&](std::size_t j) {
    p.node_models[j] = TrainSubsetModel(train, sensors, tree.nodes[j].acquired, basis, opt);
  });
  return p;
}

// Probability mass outside the most likely class, computed without
// cancellation so that it is zero only when the others underflow.
inline double ResidualMass(const Eigen::VectorXd& scores) {
  const int top = ArgmaxClass(scores);
  const double mx = scores[top];
  double others = 0.0;
  for (Eigen::Index c = 0; c < scores.size(); ++c) {
    if (c != top) others += std::exp(scores[c] - mx);
  }
  return others / (1.0 + others);
}

inline EvalRecord EvaluateMyopic(const DecisionSystem& system, const MyopicPolicy& policy,
                                 double tau, const Dataset& data) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw Error(ErrorKind::kConfig, "policy_eval", "tau must lie in [0, 1]");
  }
  const auto& tree = system.tree;
  if (static_cast<int>(policy.node_models.size()) != tree.num_nodes()) {
    throw Error(ErrorKind::kModelMismatch, "policy_eval", "one myopic model per node required");
  }
  const auto n = static_cast<std::size_t>(data.size());
  EvalRecord r;
  r.leaf.resize(n);
  r.cost.resize(n);
  r.correct.resize(n);
  r.signs.assign(n, SignVector(static_cast<std::size_t>(tree.num_nodes()), 0));
  ParallelFor(n, [&](std::size_t i) {
    const auto row = data.x.row(static_cast<Eigen::Index>(i));
    SensorSet acquired;
    ChildRef c = tree.root();
    while (!c.is_leaf) {
      const auto j = static_cast<std::size_t>(c.index);
      const auto& node = tree.nodes[j];
      acquired = SetUnion(acquired, node.acquired);
      const auto& m = policy.node_models[j];
      const bool confident = ResidualMass(ClassScores(m, detail::Restrict(row, m.columns))) <= 1.0 - tau;
      const double neg_cost = system.sensors.Cost(tree.SetOf(node.negative));
      const double pos_cost = system.sensors.Cost(tree.SetOf(node.positive));
      // Equal costs: negative counts as the cheap side.
      const bool cheap_is_positive = pos_cost < neg_cost;
      const bool pos = confident ? cheap_is_positive : !cheap_is_positive;
      r.signs[i][j] = pos ? 1 : 0;
      c = pos ? node.positive : node.negative;
    }
    acquired = SetUnion(acquired, tree.leaves[static_cast<std::size_t>(c.index)].sensors);
    const auto& model = system.leaf_models[static_cast<std::size_t>(c.index)];
    r.leaf[i] = c.index;
    r.cost[i] = system.sensors.Cost(acquired);
    r.correct[i] = Predict(model, detail::Restrict(row, model.columns)) == data.y[i] ? 1 : 0;
  });
  detail::Aggregate(&r, system.sensors.TotalCost());
  return r;
}

struct CurvePoint {
  double param = 0.0;  // alpha, or tau for the myopic curve
  double mean_cost = 0.0;
  double cost_fraction = 0.0;
  double error = 0.0;
  bool ok = true;
  std::string message;
};

inline CurvePoint ToCurvePoint(double param, const EvalRecord& r) {
  return CurvePoint{param, r.mean_cost, r.cost_fraction, r.error, true, {}};
}

// Sorts by mean cost, then error, then parameter. Failed points go last.
inline void SortCurve(std::vector<CurvePoint>* curve) {
  std::stable_sort(curve->begin(), curve->end(), [](const CurvePoint& a, const CurvePoint& b) {
    if (a.ok != b.ok) return a.ok;
    if (a.mean_cost != b.mean_cost) return a.mean_cost < b.mean_cost;
    if (a.error != b.error) return a.error < b.error;
    return a.param < b.param;
  });
}

// True when every point of `other` has a point of `curve` with no more error
// at no more than its cost plus `cost_slack`.
inline bool WeaklyDominates(const std::vector<CurvePoint>& curve,
                            const std::vector<CurvePoint>& other, double cost_slack) {
  for (const auto& o : other) {
    if (!o.ok) continue;
    bool covered = false;
    for (const auto& c : curve) {
      if (c.ok && c.error <= o.error + 1e-12 && c.mean_cost <= o.mean_cost + cost_slack + 1e-12) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

inline std::vector<CurvePoint> MyopicCurve(const DecisionSystem& system, const MyopicPolicy& policy,
                                           const std::vector<double>& taus, const Dataset& data) {
  std::vector<CurvePoint> curve;
  for (double tau : taus) curve.push_back(ToCurvePoint(tau, EvaluateMyopic(system, policy, tau, data)));
  SortCurve(&curve);
  return curve;
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_POLICY_HPP_
