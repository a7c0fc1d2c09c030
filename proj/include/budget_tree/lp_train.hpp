#ifndef BUDGET_TREE_LP_TRAIN_HPP_
#define BUDGET_TREE_LP_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "budget_tree/data.hpp"
#include "budget_tree/error.hpp"
#include "budget_tree/risk.hpp"
#include "budget_tree/sensors.hpp"
#include "budget_tree/simplex.hpp"
#include "budget_tree/tree.hpp"

namespace budget_tree {

// Affine decision g_j(x) = weights . phi_j(x) over the basis of the node's
// acquired columns. The bias is the last basis entry.
struct NodeDecision {
  SensorSet acquired;
  std::vector<int> columns;
  BasisConfig basis;
  Eigen::VectorXd weights;

  double Value(const Eigen::Ref<const Eigen::RowVectorXd>& x_full) const {
    std::vector<double> xs(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) xs[c] = x_full[columns[c]];
    Eigen::VectorXd phi = ExpandBasis(xs, basis);
    if (phi.size() != weights.size()) {
      throw Error(ErrorKind::kDimension, "lp_train", "decision basis size mismatch");
    }
    return weights.dot(phi);
  }
};

struct DecisionFunctions {
  std::vector<NodeDecision> nodes;
  double w_max = 1e3;

  int size() const { return static_cast<int>(nodes.size()); }

  std::vector<double> Values(const Eigen::Ref<const Eigen::RowVectorXd>& x_full) const {
    std::vector<double> g(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) g[j] = nodes[j].Value(x_full);
    return g;
  }
};

struct DecisionOptions {
  BasisConfig basis{};  // bias is always added
  double w_max = 1e3;
  // Cap on the examples entering the LP (first rows of the given matrix);
  // <= 0 uses them all.
  int max_examples = 0;
  SimplexOptions simplex{};
};

// Per-node expanded bases of the acquired columns, one N x B_j matrix each.
inline std::vector<Eigen::MatrixXd> NodeBases(const TreeStructure& tree, const SensorSpec& sensors,
                                              const Eigen::MatrixXd& x_full, BasisConfig basis) {
  basis.include_bias = true;
  std::vector<Eigen::MatrixXd> out;
  for (const auto& node : tree.nodes) {
    out.push_back(ExpandRows(SelectColumns(x_full, sensors.Columns(node.acquired)), basis));
  }
  return out;
}

// Column layout of the assembled program.
struct LpLayout {
  int num_examples = 0;
  int num_leaves = 0;
  int num_nodes = 0;
  std::vector<int> weight_offset;  // per node
  std::vector<int> basis_size;     // per node
  int gamma_offset = 0;
  int alpha_offset = 0;
  int beta_offset = 0;

  int Gamma(int i) const { return gamma_offset + i; }
  int Alpha(int i, int j) const { return alpha_offset + i * num_nodes + j; }
  int Beta(int i, int j) const { return beta_offset + i * num_nodes + j; }
};

struct AssembledLp {
  LinearProgram lp;
  LpLayout layout;
};

// min sum_i gamma^i
//   s.t. w_p,k^i . alpha^i + w_n,k^i . beta^i - gamma^i <= 0      (i, k)
//        phi_j(x_i) . w_j - alpha_j^i <= -1                        (i, j)
//       -phi_j(x_i) . w_j - beta_j^i  <= -1                        (i, j)
//        -w_max <= w_j <= w_max, gamma free, alpha, beta >= 0.
// The start point w = 0, alpha = beta = 1, gamma^i = max_k row sum is feasible.
inline AssembledLp AssembleLp(const TreeStructure& tree, const WeightVectors<double>& w,
                              const std::vector<Eigen::MatrixXd>& node_bases, double w_max) {
  const int n = w.num_examples;
  const int k_leaves = tree.num_leaves();
  const int j_nodes = tree.num_nodes();
  if (w.num_leaves != k_leaves || w.num_nodes != j_nodes) {
    throw Error(ErrorKind::kDimension, "lp_train", "weight vectors do not match the tree");
  }
  if (static_cast<int>(node_bases.size()) != j_nodes) {
    throw Error(ErrorKind::kDimension, "lp_train", "need one basis matrix per node");
  }
  for (const auto& b : node_bases) {
    if (b.rows() != n) throw Error(ErrorKind::kDimension, "lp_train", "basis rows != examples");
    if (!b.allFinite()) throw Error(ErrorKind::kNonFiniteValue, "lp_train", "non-finite basis value");
  }
  for (double v : w.wp) {
    if (!std::isfinite(v) || v < 0) throw Error(ErrorKind::kNonFiniteValue, "lp_train", "bad weight");
  }
  for (double v : w.wn) {
    if (!std::isfinite(v) || v < 0) throw Error(ErrorKind::kNonFiniteValue, "lp_train", "bad weight");
  }
  if (!(w_max > 0) || !std::isfinite(w_max)) {
    throw Error(ErrorKind::kConfig, "lp_train", "w_max must be positive and finite");
  }

  AssembledLp out;
  auto& lp = out.lp;
  auto& lay = out.layout;
  lay.num_examples = n;
  lay.num_leaves = k_leaves;
  lay.num_nodes = j_nodes;
  for (int j = 0; j < j_nodes; ++j) {
    lay.weight_offset.push_back(lp.n_vars());
    const auto bj = static_cast<int>(node_bases[static_cast<std::size_t>(j)].cols());
    lay.basis_size.push_back(bj);
    for (int b = 0; b < bj; ++b) {
      lp.AddVariable("w" + std::to_string(j) + "_" + std::to_string(b), -w_max, w_max);
    }
  }
  lay.gamma_offset = lp.n_vars();
  for (int i = 0; i < n; ++i) lp.AddVariable("gamma" + std::to_string(i), -kInf, kInf, 1.0);
  lay.alpha_offset = lp.n_vars();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < j_nodes; ++j) {
      lp.AddVariable("a" + std::to_string(i) + "_" + std::to_string(j), 0.0, kInf);
    }
  }
  lay.beta_offset = lp.n_vars();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < j_nodes; ++j) {
      lp.AddVariable("b" + std::to_string(i) + "_" + std::to_string(j), 0.0, kInf);
    }
  }

  lp.start.assign(static_cast<std::size_t>(lp.n_vars()), 0.0);
  for (int i = 0; i < n; ++i) {
    double top = 0.0;
    for (int k = 0; k < k_leaves; ++k) {
      std::vector<std::pair<int, double>> row;
      double sum = 0.0;
      for (int j = 0; j < j_nodes; ++j) {
        const double p = w.Wp(i, k, j);
        const double q = w.Wn(i, k, j);
        if (p != 0.0) row.emplace_back(lay.Alpha(i, j), p);
        if (q != 0.0) row.emplace_back(lay.Beta(i, j), q);
        sum += p + q;
      }
      row.emplace_back(lay.Gamma(i), -1.0);
      top = std::max(top, sum);
      lp.AddRow(std::move(row), Relation::kLessEqual, 0.0,
                "leaf" + std::to_string(i) + "_" + std::to_string(k));
    }
    lp.start[static_cast<std::size_t>(lay.Gamma(i))] = top;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < j_nodes; ++j) {
      const auto& phi = node_bases[static_cast<std::size_t>(j)];
      std::vector<std::pair<int, double>> pos, neg;
      for (int b = 0; b < lay.basis_size[static_cast<std::size_t>(j)]; ++b) {
        const double v = phi(i, b);
        if (v == 0.0) continue;
        pos.emplace_back(lay.weight_offset[static_cast<std::size_t>(j)] + b, v);
        neg.emplace_back(lay.weight_offset[static_cast<std::size_t>(j)] + b, -v);
      }
      pos.emplace_back(lay.Alpha(i, j), -1.0);
      neg.emplace_back(lay.Beta(i, j), -1.0);
      lp.AddRow(std::move(pos), Relation::kLessEqual, -1.0,
                "hp" + std::to_string(i) + "_" + std::to_string(j));
      lp.AddRow(std::move(neg), Relation::kLessEqual, -1.0,
                "hn" + std::to_string(i) + "_" + std::to_string(j));
      lp.start[static_cast<std::size_t>(lay.Alpha(i, j))] = 1.0;
      lp.start[static_cast<std::size_t>(lay.Beta(i, j))] = 1.0;
    }
  }
  return out;
}

struct LpDiagnostics {
  LpStatus status = LpStatus::kIterationLimit;
  int iterations = 0;
  int num_vars = 0;
  int num_rows = 0;
  int num_examples = 0;
  double objective = 0.0;       // sum_i gamma^i
  double constants = 0.0;       // sum_i (r_max - sum_k pi_k^i)
  double surrogate_sum = 0.0;   // sum_i surrogate_risk(g*)
  double max_violation = 0.0;
  // Largest gaps gamma - max_k(...), alpha - max(1+g,0), beta - max(1-g,0).
  double gamma_gap = 0.0;
  double hinge_gap = 0.0;
};

struct DecisionTraining {
  DecisionFunctions decisions;
  LpDiagnostics diagnostics;
};

inline DecisionFunctions ExtractDecisions(const TreeStructure& tree, const SensorSpec& sensors,
                                          const LpLayout& lay, const std::vector<double>& x,
                                          BasisConfig basis, double w_max) {
  basis.include_bias = true;
  DecisionFunctions d;
  d.w_max = w_max;
  for (int j = 0; j < tree.num_nodes(); ++j) {
    NodeDecision nd;
    nd.acquired = tree.nodes[static_cast<std::size_t>(j)].acquired;
    nd.columns = sensors.Columns(nd.acquired);
    nd.basis = basis;
    const int bj = lay.basis_size[static_cast<std::size_t>(j)];
    nd.weights.resize(bj);
    for (int b = 0; b < bj; ++b) {
      nd.weights[b] = x[static_cast<std::size_t>(lay.weight_offset[static_cast<std::size_t>(j)] + b)];
    }
    d.nodes.push_back(std::move(nd));
  }
  return d;
}

// Solves the surrogate ERM for the node decisions. Row i of `x_full` is the
// standardized example whose savings are row i of `s`.
inline DecisionTraining TrainDecisions(const TreeStructure& tree, const SavingsMatrix<double>& s,
                                       const Eigen::MatrixXd& x_full, const SensorSpec& sensors,
                                       const DecisionOptions& opt,
                                       AssembledLp* assembled_out = nullptr) {
  if (x_full.rows() != s.num_examples) {
    throw Error(ErrorKind::kDimension, "lp_train", "savings rows do not match examples");
  }
  DecisionTraining out;
  if (tree.num_nodes() == 0) {
    out.decisions.w_max = opt.w_max;
    out.diagnostics.status = LpStatus::kOptimal;
    return out;
  }
  SavingsMatrix<double> sub = s;
  Eigen::MatrixXd x = x_full;
  if (opt.max_examples > 0 && s.num_examples > opt.max_examples) {
    sub.num_examples = opt.max_examples;
    sub.pi.resize(static_cast<std::size_t>(opt.max_examples) * static_cast<std::size_t>(s.num_leaves));
    x = x_full.topRows(opt.max_examples);
  }
  auto w = BuildWeights(tree, sub);
  auto bases = NodeBases(tree, sensors, x, opt.basis);
  AssembledLp a = AssembleLp(tree, w, bases, opt.w_max);
  SimplexSolution sol = SolveLp(a.lp, opt.simplex);

  auto& diag = out.diagnostics;
  diag.status = sol.status;
  diag.iterations = sol.iterations;
  diag.num_vars = a.lp.n_vars();
  diag.num_rows = a.lp.n_rows();
  diag.num_examples = sub.num_examples;
  if (sol.status != LpStatus::kOptimal) {
    throw Error(ErrorKind::kSolver, "lp_train",
                std::string("simplex stopped: ") + ToString(sol.status) + " after " +
                    std::to_string(sol.iterations) + " iterations");
  }
  diag.objective = sol.objective;
  diag.max_violation = MaxViolation(a.lp, sol.x);
  out.decisions = ExtractDecisions(tree, sensors, a.layout, sol.x, opt.basis, opt.w_max);

  const int j_nodes = tree.num_nodes();
  std::vector<double> g(static_cast<std::size_t>(j_nodes));
  for (int i = 0; i < sub.num_examples; ++i) {
    for (int j = 0; j < j_nodes; ++j) {
      const auto& phi = bases[static_cast<std::size_t>(j)];
      g[static_cast<std::size_t>(j)] =
          phi.row(i).dot(out.decisions.nodes[static_cast<std::size_t>(j)].weights);
      const double a_ij = sol.x[static_cast<std::size_t>(a.layout.Alpha(i, j))];
      const double b_ij = sol.x[static_cast<std::size_t>(a.layout.Beta(i, j))];
      diag.hinge_gap = std::max({diag.hinge_gap,
                                 std::abs(a_ij - std::max(1.0 + g[static_cast<std::size_t>(j)], 0.0)),
                                 std::abs(b_ij - std::max(1.0 - g[static_cast<std::size_t>(j)], 0.0))});
    }
    const double c = sub.r_max - sub.RowSum(i);
    const double surrogate = SurrogateRisk(tree, sub, w, g, i);
    diag.constants += c;
    diag.surrogate_sum += surrogate;
    const double gamma = sol.x[static_cast<std::size_t>(a.layout.Gamma(i))];
    diag.gamma_gap = std::max(diag.gamma_gap, std::abs(gamma - (surrogate - c)));
  }
  if (assembled_out) *assembled_out = std::move(a);
  return out;
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_LP_TRAIN_HPP_
