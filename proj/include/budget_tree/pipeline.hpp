#ifndef BUDGET_TREE_PIPELINE_HPP_
#define BUDGET_TREE_PIPELINE_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "budget_tree/data.hpp"
#include "budget_tree/error.hpp"
#include "budget_tree/logistic.hpp"
#include "budget_tree/lp_train.hpp"
#include "budget_tree/parallel.hpp"
#include "budget_tree/policy.hpp"
#include "budget_tree/risk.hpp"
#include "budget_tree/sensors.hpp"
#include "budget_tree/subset_search.hpp"
#include "budget_tree/tree.hpp"

namespace budget_tree {

// Raw data plus its split, and the split parts standardized with the
// training-part scaler.
struct PreparedData {
  Dataset raw;
  Split split;
  Scaler scaler;
  Dataset train;
  Dataset val;
  Dataset test;
};

inline PreparedData Prepare(Dataset raw, std::array<double, 3> fractions, std::uint64_t seed) {
  PreparedData p;
  p.split = MakeSplit(raw.size(), fractions, seed);
  p.raw = std::move(raw);
  auto [scaler, train] = Standardize(p.raw.Rows(p.split.train));
  p.scaler = std::move(scaler);
  p.train = std::move(train);
  p.val = p.raw.Rows(p.split.val);
  p.val.x = p.scaler.Apply(p.val.x);
  p.test = p.raw.Rows(p.split.test);
  p.test.x = p.scaler.Apply(p.test.x);
  return p;
}

struct TrainConfig {
  int num_leaves = 4;
  double alpha = 0.1;
  int candidate_budget = 0;
  BasisConfig classifier_basis{};
  BasisConfig search_basis{1, false, true};
  BasisConfig decision_basis{};
  LogisticOptions logistic{};
  double w_max = 1e3;
  int lp_max_examples = 400;
  SimplexOptions simplex{};
  // Either a complete tree or just the leaf subsets may be fixed in advance.
  std::optional<TreeStructure> fixed_tree;
  std::optional<std::vector<SensorSet>> fixed_subsets;
};

struct TrainResult {
  DecisionSystem system;
  std::optional<SubsetCollection> collection;
  LpDiagnostics lp;
};

inline TreeStructure BuildTree(const std::vector<SensorSet>& subsets, int num_sensors) {
  if (subsets.size() == 1) return SingleLeafTree(subsets.front(), num_sensors);
  return ClusterTree(subsets, num_sensors);
}

// Subset search (unless fixed), tree construction, leaf classifiers, savings
// on the training part, and the decision LP.
inline TrainResult TrainSystem(const PreparedData& data, const SensorSpec& sensors,
                               const TrainConfig& cfg, AssembledLp* lp_out = nullptr) {
  if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) {
    throw Error(ErrorKind::kConfig, "pipeline", "alpha must be positive and finite");
  }
  TrainResult out;
  DecisionSystem& sys = out.system;
  sys.sensors = sensors;
  sys.scaler = data.scaler;
  sys.alpha = cfg.alpha;
  sys.classifier_basis = cfg.classifier_basis;
  sys.decision_basis = cfg.decision_basis;
  sys.decision_basis.include_bias = true;

  if (cfg.fixed_tree) {
    sys.tree = *cfg.fixed_tree;
  } else if (cfg.fixed_subsets) {
    sys.tree = BuildTree(*cfg.fixed_subsets, sensors.size());
  } else {
    SubsetSearchOptions so;
    so.num_subsets = cfg.num_leaves;
    so.alpha = cfg.alpha;
    so.candidate_budget = cfg.candidate_budget;
    so.search_basis = cfg.search_basis;
    so.final_basis = cfg.classifier_basis;
    so.logistic = cfg.logistic;
    out.collection = GreedySelect(data.train, data.val, sensors, so);
    sys.tree = BuildTree(out.collection->subsets, sensors.size());
  }

  const auto k_leaves = static_cast<std::size_t>(sys.tree.num_leaves());
  sys.leaf_models.resize(k_leaves);
  ParallelFor(k_leaves, [&](std::size_t k) {
    const auto& set = sys.tree.leaves[k].sensors;
    if (out.collection) {
      for (const auto& m : out.collection->models) {
        if (m.subset == set) {
          sys.leaf_models[k] = m;
          return;
        }
      }
    }
    sys.leaf_models[k] = TrainSubsetModel(data.train, sensors, set, cfg.classifier_basis, cfg.logistic);
  });

  auto correct = LeafCorrectness(sys.leaf_models, data.train);
  auto savings = ComputeSavings<double>(sys.tree, sensors, correct, data.train.size(), cfg.alpha);
  DecisionOptions dopt;
  dopt.basis = sys.decision_basis;
  dopt.w_max = cfg.w_max;
  dopt.max_examples = cfg.lp_max_examples;
  dopt.simplex = cfg.simplex;
  auto trained = TrainDecisions(sys.tree, savings, data.train.x, sensors, dopt, lp_out);
  sys.decisions = std::move(trained.decisions);
  out.lp = trained.diagnostics;
  return out;
}

// Log-spaced grid of `steps` values from lo to hi inclusive.
inline std::vector<double> LogGrid(double lo, double hi, int steps) {
  if (!(lo > 0) || !(hi >= lo) || steps < 1) {
    throw Error(ErrorKind::kConfig, "pipeline", "alpha grid needs 0 < lo <= hi and steps >= 1");
  }
  std::vector<double> out;
  if (steps == 1) return {lo};
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int s = 0; s < steps; ++s) {
    out.push_back(std::exp(a + (b - a) * static_cast<double>(s) / static_cast<double>(steps - 1)));
  }
  out.back() = hi;
  out.front() = lo;
  return out;
}

// Linear grid lo, lo+step, ... up to hi (inclusive within rounding).
inline std::vector<double> LinearGrid(double lo, double hi, double step) {
  if (!(step > 0) || !(hi >= lo)) {
    throw Error(ErrorKind::kConfig, "pipeline", "grid needs lo <= hi and step > 0");
  }
  std::vector<double> out;
  const auto count = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int s = 0; s <= count; ++s) out.push_back(std::min(hi, lo + step * s));
  return out;
}

struct SweepResult {
  std::vector<CurvePoint> curve;  // sorted by cost; failures last
  std::vector<TrainResult> systems;  // aligned with the alpha grid; empty on failure
  std::vector<double> alphas;
};

// Retrains the whole system per alpha and evaluates it on `eval`. A failing
// alpha is recorded with its message and the sweep continues.
inline SweepResult SweepAlpha(const PreparedData& data, const SensorSpec& sensors,
                              const TrainConfig& cfg, const std::vector<double>& alphas,
                              const Dataset& eval) {
  if (alphas.empty()) throw Error(ErrorKind::kConfig, "pipeline", "alpha grid is empty");
  for (double a : alphas) {
    if (!(a > 0) || !std::isfinite(a)) {
      throw Error(ErrorKind::kConfig, "pipeline", "alpha grid must be strictly positive");
    }
  }
  SweepResult r;
  r.alphas = alphas;
  r.systems.resize(alphas.size());
  std::vector<CurvePoint> points(alphas.size());
  ParallelFor(alphas.size(), [&](std::size_t s) {
    TrainConfig c = cfg;
    c.alpha = alphas[s];
    try {
      r.systems[s] = TrainSystem(data, sensors, c);
      points[s] = ToCurvePoint(alphas[s], Evaluate(r.systems[s].system, eval));
    } catch (const std::exception& e) {
      points[s] = CurvePoint{alphas[s], 0.0, 0.0, 0.0, false, e.what()};
      r.systems[s] = TrainResult{};
    }
  });
  r.curve = std::move(points);
  SortCurve(&r.curve);
  return r;
}

// System whose tree the myopic baseline reuses: the successful grid point
// with the most leaves, smallest alpha on ties.
inline std::optional<DecisionSystem> MyopicReference(const SweepResult& sweep) {
  std::optional<std::size_t> best;
  for (std::size_t s = 0; s < sweep.alphas.size(); ++s) {
    const auto& sys = sweep.systems[s].system;
    if (sys.leaf_models.empty()) continue;
    if (!best || sys.tree.num_leaves() > sweep.systems[*best].system.tree.num_leaves() ||
        (sys.tree.num_leaves() == sweep.systems[*best].system.tree.num_leaves() &&
         sweep.alphas[s] < sweep.alphas[*best])) {
      best = s;
    }
  }
  if (!best) return std::nullopt;
  return sweep.systems[*best].system;
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_PIPELINE_HPP_
