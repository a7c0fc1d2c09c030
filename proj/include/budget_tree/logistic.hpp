#ifndef BUDGET_TREE_LOGISTIC_HPP_
#define BUDGET_TREE_LOGISTIC_HPP_

#include <algorithm>
#include <cmath>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "budget_tree/data.hpp"
#include "budget_tree/error.hpp"
#include "budget_tree/sensors.hpp"

namespace budget_tree {

struct LogisticOptions {
  double l2 = 1e-4;
  double grad_tol = 1e-6;
  int max_iters = 500;
  int history = 10;
};

struct LogisticTrainInfo {
  int iterations = 0;
  double loss = 0.0;
  double grad_inf_norm = 0.0;
  double training_error = 0.0;
};

// Multinomial logistic regression over an expanded basis of the features
// owned by `subset`. `columns` lists the dataset columns in the order the
// model expects them.
struct LogisticModel {
  Eigen::MatrixXd weights;  // C x B
  SensorSet subset;
  std::vector<int> columns;
  BasisConfig basis;
  LogisticTrainInfo info;

  int num_classes() const { return static_cast<int>(weights.rows()); }
};

// Mean cross-entropy plus l2/2 * ||W||^2. Writes the gradient when `grad` is
// non-null. `phi` is N x B, `w` is C x B.
inline double LogisticObjective(const Eigen::MatrixXd& w, const Eigen::MatrixXd& phi,
                                std::span<const int> y, double l2,
                                Eigen::MatrixXd* grad) {
  const Eigen::Index n = phi.rows();
  Eigen::MatrixXd scores = phi * w.transpose();  // N x C
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = scores.row(i).maxCoeff();
    double z = (scores.row(i).array() - mx).exp().sum();
    double lse = mx + std::log(z);
    loss += lse - scores(i, y[static_cast<std::size_t>(i)]);
    if (grad) {
      scores.row(i) = (scores.row(i).array() - lse).exp();
      scores(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss = loss * inv_n + 0.5 * l2 * w.squaredNorm();
  if (grad) *grad = inv_n * (scores.transpose() * phi) + l2 * w;
  return loss;
}

inline int ArgmaxClass(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  int best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = static_cast<int>(c);
  }
  return best;
}

// Class scores for each row of an already expanded basis matrix.
inline std::vector<int> PredictExpanded(const LogisticModel& model,
                                        const Eigen::MatrixXd& phi) {
  Eigen::MatrixXd scores = phi * model.weights.transpose();
  std::vector<int> out(static_cast<std::size_t>(phi.rows()));
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = ArgmaxClass(scores.row(i).transpose());
  }
  return out;
}

// Limited-memory quasi-Newton descent with Armijo backtracking; every accepted
// step strictly lowers the objective. Starts from zero weights.
inline LogisticModel TrainLogisticExpanded(const Eigen::MatrixXd& phi, std::span<const int> y,
                                           int num_classes, const LogisticOptions& opt = {}) {
  if (num_classes < 2) {
    throw Error(ErrorKind::kData, "leaf_classifier", "need at least 2 classes");
  }
  if (static_cast<std::size_t>(phi.rows()) != y.size() || y.empty()) {
    throw Error(ErrorKind::kDimension, "leaf_classifier", "basis rows do not match labels");
  }
  const Eigen::Index c = num_classes;
  const Eigen::Index b = phi.cols();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(c, b);
  Eigen::MatrixXd g;
  double f = LogisticObjective(w, phi, y, opt.l2, &g);
  if (!std::isfinite(f)) {
    throw Error(ErrorKind::kDivergence, "leaf_classifier", "non-finite loss at iteration 0");
  }

  std::deque<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> memory;  // (s, y) pairs
  int iter = 0;
  double step = 1.0;
  for (; iter < opt.max_iters; ++iter) {
    if (g.cwiseAbs().maxCoeff() <= opt.grad_tol) break;

    // Two-loop recursion.
    Eigen::MatrixXd q = g;
    std::vector<double> a(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      const auto& [s, yk] = memory[k];
      double rho = 1.0 / (yk.cwiseProduct(s).sum());
      a[k] = rho * s.cwiseProduct(q).sum();
      q -= a[k] * yk;
    }
    if (!memory.empty()) {
      const auto& [s, yk] = memory.back();
      q *= s.cwiseProduct(yk).sum() / yk.squaredNorm();
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const auto& [s, yk] = memory[k];
      double rho = 1.0 / (yk.cwiseProduct(s).sum());
      double beta = rho * yk.cwiseProduct(q).sum();
      q += (a[k] - beta) * s;
    }
    Eigen::MatrixXd dir = -q;
    double slope = g.cwiseProduct(dir).sum();
    if (!(slope < 0.0)) {
      memory.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }

    step = memory.empty() ? std::min(1.0, 1.0 / g.cwiseAbs().maxCoeff()) : 1.0;
    Eigen::MatrixXd w_new, g_new;
    double f_new = 0.0;
    bool accepted = false;
    bool any_finite = false;
    for (int ls = 0; ls < 60; ++ls) {
      w_new = w + step * dir;
      f_new = LogisticObjective(w_new, phi, y, opt.l2, &g_new);
      if (std::isfinite(f_new)) {
        any_finite = true;
        if (f_new <= f + 1e-4 * step * slope && f_new < f) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!any_finite) {
      throw Error(ErrorKind::kDivergence, "leaf_classifier",
                  "non-finite loss at iteration " + std::to_string(iter) +
                      " with step size " + std::to_string(step));
    }
    if (!accepted) break;  // no representable decrease left

    Eigen::MatrixXd s = w_new - w;
    Eigen::MatrixXd yk = g_new - g;
    if (yk.cwiseProduct(s).sum() > 1e-12 * s.squaredNorm()) {
      memory.emplace_back(std::move(s), std::move(yk));
      if (static_cast<int>(memory.size()) > opt.history) memory.pop_front();
    }
    w = std::move(w_new);
    g = std::move(g_new);
    f = f_new;
  }

  LogisticModel model;
  model.weights = std::move(w);
  model.info.iterations = iter;
  model.info.loss = f;
  model.info.grad_inf_norm = g.cwiseAbs().maxCoeff();
  auto pred = PredictExpanded(model, phi);
  int wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != y[i];
  model.info.training_error = static_cast<double>(wrong) / static_cast<double>(pred.size());
  return model;
}

// Trains on `x_restricted` (N x d, already standardized and restricted to the
// subset's columns).
inline LogisticModel TrainLogistic(const Eigen::MatrixXd& x_restricted, std::span<const int> y,
                                   int num_classes, const BasisConfig& basis,
                                   const LogisticOptions& opt = {}) {
  LogisticModel m = TrainLogisticExpanded(ExpandRows(x_restricted, basis), y, num_classes, opt);
  m.basis = basis;
  return m;
}

// Trains the classifier for sensor set `subset` on standardized data.
inline LogisticModel TrainSubsetModel(const Dataset& train, const SensorSpec& sensors,
                                      const SensorSet& subset, const BasisConfig& basis,
                                      const LogisticOptions& opt = {}) {
  auto cols = sensors.Columns(subset);
  LogisticModel m =
      TrainLogistic(SelectColumns(train.x, cols), train.y, train.num_classes(), basis, opt);
  m.subset = subset;
  m.columns = std::move(cols);
  return m;
}

inline Eigen::VectorXd ClassScores(const LogisticModel& model,
                                   std::span<const double> x_restricted) {
  if (static_cast<int>(x_restricted.size()) != static_cast<int>(model.columns.size()) &&
      !model.columns.empty()) {
    throw Error(ErrorKind::kDimension, "leaf_classifier",
                "expected " + std::to_string(model.columns.size()) + " features, got " +
                    std::to_string(x_restricted.size()));
  }
  Eigen::VectorXd phi = ExpandBasis(x_restricted, model.basis);
  if (phi.size() != model.weights.cols()) {
    throw Error(ErrorKind::kDimension, "leaf_classifier", "basis size mismatch");
  }
  return model.weights * phi;
}

inline int Predict(const LogisticModel& model, std::span<const double> x_restricted) {
  return ArgmaxClass(ClassScores(model, x_restricted));
}

inline Eigen::VectorXd PredictProba(const LogisticModel& model,
                                    std::span<const double> x_restricted) {
  Eigen::VectorXd s = ClassScores(model, x_restricted);
  s = (s.array() - s.maxCoeff()).exp();
  return s / s.sum();
}

inline int ErrorIndicator(const LogisticModel& model, std::span<const double> x_restricted,
                          int y) {
  return Predict(model, x_restricted) != y ? 1 : 0;
}

// Predictions for every row of a full-width (standardized) feature matrix.
inline std::vector<int> PredictRows(const LogisticModel& model, const Eigen::MatrixXd& x_full) {
  return PredictExpanded(model, ExpandRows(SelectColumns(x_full, model.columns), model.basis));
}

inline Eigen::MatrixXd PredictProbaRows(const LogisticModel& model,
                                        const Eigen::MatrixXd& x_full) {
  Eigen::MatrixXd s =
      ExpandRows(SelectColumns(x_full, model.columns), model.basis) * model.weights.transpose();
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    s.row(i) = (s.row(i).array() - s.row(i).maxCoeff()).exp();
    s.row(i) /= s.row(i).sum();
  }
  return s;
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_LOGISTIC_HPP_
