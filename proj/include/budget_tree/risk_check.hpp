#ifndef BUDGET_TREE_RISK_CHECK_HPP_
#define BUDGET_TREE_RISK_CHECK_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "budget_tree/risk.hpp"
#include "budget_tree/sensors.hpp"
#include "budget_tree/tree.hpp"

namespace budget_tree {

struct RiskCheckReport {
  int trees = 0;
  long long comparisons = 0;
  long long equivalence_failures = 0;
  long long routing_failures = 0;
  long long surrogate_failures = 0;

  bool ok() const {
    return equivalence_failures == 0 && routing_failures == 0 && surrogate_failures == 0;
  }
};

// Random trees with K in [2, max_leaves], random savings with small
// denominators, every sign vector: product form vs max form, route vs
// state indicators, and the hinge upper bound at random g.
inline RiskCheckReport RunRiskCheck(int num_trees, std::uint64_t seed, int max_leaves = 8) {
  RiskCheckReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> leaves(2, max_leaves);
  std::uniform_int_distribution<int> numer(0, 64);
  std::uniform_real_distribution<double> gval(-2.0, 2.0);
  for (int t = 0; t < num_trees; ++t) {
    const int k = leaves(rng);
    TreeStructure tree = RandomTree(k, rng);
    SavingsMatrix<double> s;
    s.num_examples = 1;
    s.num_leaves = k;
    s.alpha = 0.25;
    s.r_max = 1.0 + s.alpha * k;
    for (int l = 0; l < k; ++l) s.pi.push_back(s.r_max * numer(rng) / 64.0);
    auto w = BuildWeights(tree, s);
    const std::uint64_t codes = std::uint64_t{1} << tree.num_nodes();
    for (std::uint64_t code = 0; code < codes; ++code) {
      auto signs = SignsFromCode(code, tree.num_nodes());
      const double prod = ProductRisk(tree, s, signs, 0);
      const double maxf = MaxFormRisk(tree, s, w, signs, 0);
      ++rep.comparisons;
      if (std::abs(prod - maxf) > 1e-12) ++rep.equivalence_failures;
      auto state = StateIndicators(tree, signs);
      int on = 0;
      for (int g : state) on += g;
      if (on != 1 || !state[static_cast<std::size_t>(Route(tree, signs))]) ++rep.routing_failures;
    }
    std::vector<double> g(static_cast<std::size_t>(tree.num_nodes()));
    for (int trial = 0; trial < 16; ++trial) {
      for (auto& v : g) v = gval(rng);
      const double sur = SurrogateRisk(tree, s, w, g, 0);
      if (sur < MaxFormRisk(tree, s, w, SignsOf(g), 0) - 1e-12) ++rep.surrogate_failures;
    }
    ++rep.trees;
  }
  return rep;
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_RISK_CHECK_HPP_
