#ifndef BUDGET_TREE_SUBSET_SEARCH_HPP_
#define BUDGET_TREE_SUBSET_SEARCH_HPP_

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "budget_tree/data.hpp"
#include "budget_tree/error.hpp"
#include "budget_tree/logistic.hpp"
#include "budget_tree/parallel.hpp"
#include "budget_tree/sensors.hpp"

namespace budget_tree {

struct SubsetSearchOptions {
  int num_subsets = 4;
  double alpha = 0.1;
  // Maximum sensors evaluated per step, cheapest first; <= 0 means all.
  int candidate_budget = 0;
  // Classifier basis used while searching; final models use `final_basis`.
  BasisConfig search_basis{1, false, true};
  BasisConfig final_basis{};
  LogisticOptions logistic{};
  double tolerance = 1e-9;
};

struct SearchStep {
  int subset = 0;
  int sensor = 0;
  double loss = 0.0;
};

struct SubsetCollection {
  std::vector<SensorSet> subsets;
  std::vector<LogisticModel> models;  // one per subset, final basis
  double alpha = 0.0;
  double loss = 0.0;                  // validation loss of the accepted collection
  double initial_loss = 0.0;          // loss of the all-empty collection
  std::vector<SearchStep> history;
};

// Per-example risk 1{f(x)!=y} + alpha*cost(S) of classifying with `model`.
// A missing model stands for the empty subset: always wrong, free.
inline std::vector<double> LeafRisks(const LogisticModel* model, const Dataset& eval,
                                     const SensorSpec& sensors, double alpha) {
  std::vector<double> risk(static_cast<std::size_t>(eval.size()), 1.0);
  if (model == nullptr || model->subset.empty()) return risk;
  const double cost_term = alpha * sensors.Cost(model->subset);
  auto pred = PredictRows(*model, eval.x);
  for (std::size_t i = 0; i < risk.size(); ++i) {
    risk[i] = (pred[i] != eval.y[i] ? 1.0 : 0.0) + cost_term;
  }
  return risk;
}

inline double MeanOfMin(const std::vector<std::vector<double>>& risks, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : risks) best = std::min(best, r[i]);
    total += best;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

// (1/N) sum_i min_j [1{f_j(x_i) != y_i} + alpha * cost(S_j)] on `eval`.
// models[j] may be empty only when subsets[j] is empty.
inline double CollectionLoss(const std::vector<SensorSet>& subsets,
                             const std::vector<std::optional<LogisticModel>>& models,
                             const Dataset& eval, const SensorSpec& sensors, double alpha) {
  if (subsets.size() != models.size()) {
    throw Error(ErrorKind::kDimension, "subset_search", "one model per subset required");
  }
  std::vector<std::vector<double>> risks;
  for (std::size_t j = 0; j < subsets.size(); ++j) {
    const LogisticModel* m = subsets[j].empty() || !models[j] ? nullptr : &*models[j];
    if (!subsets[j].empty() && m == nullptr) {
      throw Error(ErrorKind::kDimension, "subset_search", "missing model for nonempty subset");
    }
    risks.push_back(LeafRisks(m, eval, sensors, alpha));
  }
  return MeanOfMin(risks, static_cast<std::size_t>(eval.size()));
}

// Greedy forward selection of K sensor subsets. Subset k grows one sensor at
// a time while the collection loss on `val` strictly decreases; candidate
// classifiers are trained on `train`. Both datasets must be standardized.
inline SubsetCollection GreedySelect(const Dataset& train, const Dataset& val,
                                     const SensorSpec& sensors,
                                     const SubsetSearchOptions& opt) {
  if (opt.num_subsets < 1) {
    throw Error(ErrorKind::kConfig, "subset_search", "number of subsets must be >= 1");
  }
  if (!(opt.alpha > 0.0)) throw Error(ErrorKind::kConfig, "subset_search", "alpha must be > 0");

  const auto n_val = static_cast<std::size_t>(val.size());
  const int k_total = opt.num_subsets;
  std::vector<SensorSet> subsets(static_cast<std::size_t>(k_total));
  std::vector<std::vector<double>> risks(static_cast<std::size_t>(k_total),
                                         std::vector<double>(n_val, 1.0));
  std::map<SensorSet, std::vector<double>> risk_cache;

  SubsetCollection out;
  out.alpha = opt.alpha;
  out.initial_loss = MeanOfMin(risks, n_val);
  double current = out.initial_loss;

  for (int k = 0; k < k_total; ++k) {
    auto& s_k = subsets[static_cast<std::size_t>(k)];
    for (;;) {
      SensorSet complement = SetDifference(sensors.All(), s_k);
      if (complement.empty()) break;
      std::vector<int> candidates = complement;
      if (opt.candidate_budget > 0 &&
          static_cast<int>(candidates.size()) > opt.candidate_budget) {
        std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
          return sensors[a].cost < sensors[b].cost;
        });
        candidates.resize(static_cast<std::size_t>(opt.candidate_budget));
        std::sort(candidates.begin(), candidates.end());
      }

      std::vector<double> others(n_val, std::numeric_limits<double>::infinity());
      for (int j = 0; j < k_total; ++j) {
        if (j == k) continue;
        const auto& r = risks[static_cast<std::size_t>(j)];
        for (std::size_t i = 0; i < n_val; ++i) others[i] = std::min(others[i], r[i]);
      }

      std::vector<SensorSet> trial(candidates.size());
      std::vector<std::vector<double>> trial_risk(candidates.size());
      std::vector<int> missing;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        SensorSet t = s_k;
        t.push_back(candidates[c]);
        trial[c] = MakeSensorSet(std::move(t));
        if (auto it = risk_cache.find(trial[c]); it != risk_cache.end()) {
          trial_risk[c] = it->second;
        } else {
          missing.push_back(static_cast<int>(c));
        }
      }
      ParallelFor(missing.size(), [&](std::size_t m) {
        auto c = static_cast<std::size_t>(missing[m]);
        LogisticModel model =
            TrainSubsetModel(train, sensors, trial[c], opt.search_basis, opt.logistic);
        trial_risk[c] = LeafRisks(&model, val, sensors, opt.alpha);
      });
      for (int c : missing) {
        risk_cache.emplace(trial[static_cast<std::size_t>(c)],
                           trial_risk[static_cast<std::size_t>(c)]);
      }

      std::size_t best = 0;
      double best_loss = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n_val; ++i) total += std::min(others[i], trial_risk[c][i]);
        double loss = n_val == 0 ? 0.0 : total / static_cast<double>(n_val);
        if (loss < best_loss) {  // strict: ties keep the smaller sensor id
          best_loss = loss;
          best = c;
        }
      }
      if (!(best_loss < current - opt.tolerance)) break;
      s_k = trial[best];
      risks[static_cast<std::size_t>(k)] = trial_risk[best];
      current = best_loss;
      out.history.push_back({k, candidates[best], best_loss});
    }
  }

  for (const auto& s : subsets) {
    if (s.empty()) continue;
    if (std::find(out.subsets.begin(), out.subsets.end(), s) == out.subsets.end()) {
      out.subsets.push_back(s);
    }
  }
  if (out.subsets.empty()) {
    throw Error(ErrorKind::kAllSubsetsEmpty, "subset_search",
                "no sensor reduced the loss at alpha=" + std::to_string(opt.alpha) +
                    "; every sensor costs more than it saves, try a smaller alpha");
  }
  out.loss = current;
  out.models.resize(out.subsets.size());
  ParallelFor(out.subsets.size(), [&](std::size_t j) {
    out.models[j] = TrainSubsetModel(train, sensors, out.subsets[j], opt.final_basis, opt.logistic);
  });
  return out;
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_SUBSET_SEARCH_HPP_
