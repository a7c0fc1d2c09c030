#ifndef BUDGET_TREE_RISK_HPP_
#define BUDGET_TREE_RISK_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "budget_tree/error.hpp"
#include "budget_tree/sensors.hpp"
#include "budget_tree/tree.hpp"

namespace budget_tree {

// Savings pi_k^i = R_max - R_k(x_i): what is kept by classifying example i at
// leaf k instead of paying for every sensor and being wrong.
//
// Everything in this header is templated on the scalar so that the
// product-of-indicators and max-of-sums risks can be compared with exact
// rational arithmetic as well as with doubles.
template <typename Scalar>
struct SavingsMatrix {
  int num_examples = 0;
  int num_leaves = 0;
  std::vector<Scalar> pi;  // row-major N x K
  Scalar r_max{};
  Scalar alpha{};

  Scalar& operator()(int i, int k) {
    return pi[static_cast<std::size_t>(i) * static_cast<std::size_t>(num_leaves) +
              static_cast<std::size_t>(k)];
  }
  const Scalar& operator()(int i, int k) const {
    return pi[static_cast<std::size_t>(i) * static_cast<std::size_t>(num_leaves) +
              static_cast<std::size_t>(k)];
  }

  Scalar RowSum(int i) const {
    Scalar s{};
    for (int k = 0; k < num_leaves; ++k) s += (*this)(i, k);
    return s;
  }
};

// pi_k^i = 1{leaf k classifies example i correctly} + alpha * cost(S_k^C).
// `correct` is row-major N x K. The decisions g never enter.
template <typename Scalar>
SavingsMatrix<Scalar> ComputeSavings(const TreeStructure& tree, const SensorSpec& sensors,
                                     std::span<const std::uint8_t> correct, int num_examples,
                                     Scalar alpha) {
  const int k_leaves = tree.num_leaves();
  if (correct.size() != static_cast<std::size_t>(num_examples) * static_cast<std::size_t>(k_leaves)) {
    throw Error(ErrorKind::kDimension, "risk_core", "correctness matrix has the wrong size");
  }
  SavingsMatrix<Scalar> s;
  s.num_examples = num_examples;
  s.num_leaves = k_leaves;
  s.alpha = alpha;
  s.r_max = Scalar(1) + alpha * Scalar(sensors.TotalCost());
  s.pi.resize(correct.size());
  std::vector<Scalar> kept(static_cast<std::size_t>(k_leaves));
  for (int k = 0; k < k_leaves; ++k) {
    kept[static_cast<std::size_t>(k)] =
        alpha * Scalar(sensors.Cost(tree.leaves[static_cast<std::size_t>(k)].complement));
  }
  for (int i = 0; i < num_examples; ++i) {
    for (int k = 0; k < k_leaves; ++k) {
      const auto idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(k_leaves) +
                       static_cast<std::size_t>(k);
      s.pi[idx] = (correct[idx] ? Scalar(1) : Scalar(0)) + kept[static_cast<std::size_t>(k)];
    }
  }
  return s;
}

// Sum_k (R_max - pi_k^i) * G_k(signs), with G_k from the path matrices.
template <typename Scalar>
Scalar ProductRisk(const TreeStructure& tree, const SavingsMatrix<Scalar>& s,
                   const SignVector& signs, int i) {
  auto state = StateIndicators(tree, signs);
  Scalar risk{};
  for (int k = 0; k < tree.num_leaves(); ++k) {
    if (state[static_cast<std::size_t>(k)]) risk += s.r_max - s(i, k);
  }
  return risk;
}

// Lost-savings weights: (w_n,k^i)_j = N_kj * sum_{l in Cp_j} pi_l^i and
// (w_p,k^i)_j = P_kj * sum_{l in Cn_j} pi_l^i.
template <typename Scalar>
struct WeightVectors {
  int num_examples = 0;
  int num_leaves = 0;
  int num_nodes = 0;
  std::vector<Scalar> wn;  // [i][k][j]
  std::vector<Scalar> wp;

  std::size_t Index(int i, int k, int j) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(num_leaves) +
            static_cast<std::size_t>(k)) *
               static_cast<std::size_t>(num_nodes) +
           static_cast<std::size_t>(j);
  }
  const Scalar& Wn(int i, int k, int j) const { return wn[Index(i, k, j)]; }
  const Scalar& Wp(int i, int k, int j) const { return wp[Index(i, k, j)]; }
};

template <typename Scalar>
WeightVectors<Scalar> BuildWeights(const TreeStructure& tree, const SavingsMatrix<Scalar>& s) {
  if (s.num_leaves != tree.num_leaves()) {
    throw Error(ErrorKind::kDimension, "risk_core", "savings/tree leaf count mismatch");
  }
  WeightVectors<Scalar> w;
  w.num_examples = s.num_examples;
  w.num_leaves = tree.num_leaves();
  w.num_nodes = tree.num_nodes();
  const std::size_t total = static_cast<std::size_t>(w.num_examples) *
                            static_cast<std::size_t>(w.num_leaves) *
                            static_cast<std::size_t>(w.num_nodes);
  w.wn.assign(total, Scalar{});
  w.wp.assign(total, Scalar{});
  std::vector<Scalar> sum_p(static_cast<std::size_t>(w.num_nodes));
  std::vector<Scalar> sum_n(static_cast<std::size_t>(w.num_nodes));
  for (int i = 0; i < s.num_examples; ++i) {
    for (int j = 0; j < w.num_nodes; ++j) {
      Scalar p{}, n{};
      for (int l : tree.Cp[static_cast<std::size_t>(j)]) p += s(i, l);
      for (int l : tree.Cn[static_cast<std::size_t>(j)]) n += s(i, l);
      sum_p[static_cast<std::size_t>(j)] = p;
      sum_n[static_cast<std::size_t>(j)] = n;
    }
    for (int k = 0; k < w.num_leaves; ++k) {
      for (int j = 0; j < w.num_nodes; ++j) {
        const auto kk = static_cast<std::size_t>(k);
        const auto jj = static_cast<std::size_t>(j);
        if (tree.N[kk][jj]) w.wn[w.Index(i, k, j)] = sum_p[jj];
        if (tree.P[kk][jj]) w.wp[w.Index(i, k, j)] = sum_n[jj];
      }
    }
  }
  return w;
}

// max_k [w_p,k . a + w_n,k . b] for per-node coefficient vectors a, b.
template <typename Scalar, typename Coef>
Scalar MaxLeafTerm(const WeightVectors<Scalar>& w, int i, std::span<const Coef> a,
                   std::span<const Coef> b) {
  Scalar best{};
  for (int k = 0; k < w.num_leaves; ++k) {
    Scalar term{};
    for (int j = 0; j < w.num_nodes; ++j) {
      term += w.Wp(i, k, j) * Scalar(a[static_cast<std::size_t>(j)]) +
              w.Wn(i, k, j) * Scalar(b[static_cast<std::size_t>(j)]);
    }
    if (k == 0 || term > best) best = term;
  }
  return best;
}

// R_max - sum_k pi_k^i + max_k [w_p,k . 1{g>0} + w_n,k . 1{g<=0}].
template <typename Scalar>
Scalar MaxFormRisk(const TreeStructure& tree, const SavingsMatrix<Scalar>& s,
                   const WeightVectors<Scalar>& w, const SignVector& signs, int i) {
  const auto j_nodes = static_cast<std::size_t>(tree.num_nodes());
  std::vector<int> pos(j_nodes), neg(j_nodes);
  for (std::size_t j = 0; j < j_nodes; ++j) {
    pos[j] = signs[j] ? 1 : 0;
    neg[j] = 1 - pos[j];
  }
  return s.r_max - s.RowSum(i) +
         MaxLeafTerm<Scalar, int>(w, i, std::span<const int>(pos), std::span<const int>(neg));
}

// Leaf index attaining the max in MaxFormRisk (smallest k on ties).
template <typename Scalar>
int MaxFormArgmax(const WeightVectors<Scalar>& w, const SignVector& signs, int i) {
  int best_k = 0;
  Scalar best{};
  for (int k = 0; k < w.num_leaves; ++k) {
    Scalar term{};
    for (int j = 0; j < w.num_nodes; ++j) {
      term += signs[static_cast<std::size_t>(j)] ? w.Wp(i, k, j) : w.Wn(i, k, j);
    }
    if (k == 0 || term > best) {
      best = term;
      best_k = k;
    }
  }
  return best_k;
}

// Hinge upper bound of MaxFormRisk: 1{g>0} -> max(1+g,0), 1{g<=0} -> max(1-g,0).
inline double SurrogateRisk(const TreeStructure& tree, const SavingsMatrix<double>& s,
                            const WeightVectors<double>& w, std::span<const double> g, int i) {
  const auto j_nodes = static_cast<std::size_t>(tree.num_nodes());
  if (g.size() != j_nodes) {
    throw Error(ErrorKind::kDimension, "risk_core", "need one decision value per node");
  }
  std::vector<double> a(j_nodes), b(j_nodes);
  for (std::size_t j = 0; j < j_nodes; ++j) {
    a[j] = std::max(1.0 + g[j], 0.0);
    b[j] = std::max(1.0 - g[j], 0.0);
  }
  return s.r_max - s.RowSum(i) +
         MaxLeafTerm<double, double>(w, i, std::span<const double>(a), std::span<const double>(b));
}

inline SignVector SignsOf(std::span<const double> g) {
  SignVector s(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) s[j] = g[j] > 0.0 ? 1 : 0;
  return s;
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_RISK_HPP_
