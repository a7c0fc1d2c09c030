#ifndef BUDGET_TREE_TESTS_GENERATORS_HPP_
#define BUDGET_TREE_TESTS_GENERATORS_HPP_

#include <random>
#include <vector>

#include "budget_tree/simplex.hpp"

namespace gen {

// Feasible, box-bounded LP with small integer data. A random integer point
// inside the box satisfies every row.
template <typename Rng>
budget_tree::LinearProgram RandomSmallLp(Rng& rng, int n, int m) {
  using budget_tree::Relation;
  std::uniform_int_distribution<int> coef(-5, 5);
  std::uniform_int_distribution<int> ub(1, 6);
  std::uniform_int_distribution<int> slack(0, 3);
  std::uniform_int_distribution<int> coin(0, 4);
  budget_tree::LinearProgram lp;
  std::vector<double> x0;
  for (int j = 0; j < n; ++j) {
    const double u = ub(rng);
    const double l = coin(rng) == 0 ? -u : 0.0;
    lp.AddVariable({}, l, u, coef(rng));
    std::uniform_int_distribution<int> inside(static_cast<int>(l), static_cast<int>(u));
    x0.push_back(inside(rng));
  }
  for (int i = 0; i < m; ++i) {
    std::vector<std::pair<int, double>> row;
    double act = 0.0;
    for (int j = 0; j < n; ++j) {
      const int a = coef(rng);
      if (a == 0) continue;
      row.emplace_back(j, a);
      act += a * x0[static_cast<std::size_t>(j)];
    }
    if (coin(rng) == 0) {
      lp.AddRow(std::move(row), Relation::kEqual, act);
    } else {
      lp.AddRow(std::move(row), Relation::kLessEqual, act + slack(rng));
    }
  }
  return lp;
}

}  // namespace gen

#endif  // BUDGET_TREE_TESTS_GENERATORS_HPP_
