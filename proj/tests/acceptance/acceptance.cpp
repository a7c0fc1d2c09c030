// Acceptance runner. With no arguments every criterion runs; otherwise only
// the numbered ones. Each prints one "criterion N: PASS|FAIL" line.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "budget_tree/model_io.hpp"
#include "budget_tree/pipeline.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "planted.hpp"

namespace bt = budget_tree;

namespace {

using Rational = boost::rational<long long>;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

// 1: max form equals product risk exactly over every sign vector.
Outcome Reformulation() {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> leaves(2, 8);
  std::uniform_int_distribution<long long> numer(0, 96);
  std::uniform_int_distribution<long long> rmax(2, 12);
  long long checks = 0;
  double worst_float = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int k = leaves(rng);
    auto tree = bt::RandomTree(k, rng);
    const int n = 4;
    bt::SavingsMatrix<Rational> s;
    s.num_examples = n;
    s.num_leaves = k;
    s.r_max = Rational(rmax(rng), 3);
    s.pi.resize(static_cast<std::size_t>(n * k));
    for (auto& p : s.pi) p = s.r_max * Rational(numer(rng), 96);
    bt::SavingsMatrix<double> f;
    f.num_examples = n;
    f.num_leaves = k;
    f.r_max = boost::rational_cast<double>(s.r_max);
    for (const auto& p : s.pi) f.pi.push_back(boost::rational_cast<double>(p));
    auto w = bt::BuildWeights(tree, s);
    auto wf = bt::BuildWeights(tree, f);
    for (std::uint64_t code = 0; code < (1ull << (k - 1)); ++code) {
      auto signs = bt::SignsFromCode(code, k - 1);
      for (int i = 0; i < n; ++i) {
        const Rational product = bt::ProductRisk(tree, s, signs, i);
        if (bt::MaxFormRisk(tree, s, w, signs, i) != product) {
          return {false, "exact mismatch at tree " + std::to_string(t)};
        }
        const double pf = bt::ProductRisk(tree, f, signs, i);
        worst_float = std::max(worst_float, std::abs(bt::MaxFormRisk(tree, f, wf, signs, i) - pf));
        ++checks;
      }
    }
  }
  return {worst_float <= 1e-12,
          std::to_string(checks) + " exact checks, worst float gap " + Fmt("%.2e", worst_float)};
}

// 2: the four-leaf depth-2 fixture, each max-term read off symbolically by
// evaluating the weights at unit savings vectors.
Outcome FigureFixture() {
  std::vector<bt::InternalNode> nodes{
      {{0}, {false, 1}, {false, 2}},
      {{0}, {true, 0}, {true, 1}},
      {{0, 2}, {true, 2}, {true, 3}},
  };
  std::vector<bt::Leaf> leaves{{{0}, {}}, {{0, 1}, {}}, {{0, 2}, {}}, {{0, 1, 2}, {}}};
  auto t = bt::FinalizeTree(nodes, leaves, 3);
  using Row = std::vector<std::uint8_t>;
  bool ok = t.P == std::vector<Row>{{0, 0, 0}, {0, 1, 0}, {1, 0, 0}, {1, 0, 1}} &&
            t.N == std::vector<Row>{{1, 1, 0}, {1, 0, 0}, {0, 0, 1}, {0, 0, 0}} &&
            t.Cp[0] == std::vector<int>{2, 3} && t.Cn[0] == std::vector<int>{0, 1};
  if (!ok) return {false, "path matrices differ"};

  // coef[k][leaf][side][node]: coefficient of pi_k in the leaf's weight.
  int coef[4][4][2][3];
  for (int unit = 0; unit < 4; ++unit) {
    bt::SavingsMatrix<Rational> s;
    s.num_examples = 1;
    s.num_leaves = 4;
    s.r_max = 1;
    s.pi.assign(4, Rational(0));
    s.pi[static_cast<std::size_t>(unit)] = 1;
    auto w = bt::BuildWeights(t, s);
    for (int k = 0; k < 4; ++k) {
      for (int j = 0; j < 3; ++j) {
        coef[unit][k][0][j] = boost::rational_cast<int>(w.Wn(0, k, j));
        coef[unit][k][1][j] = boost::rational_cast<int>(w.Wp(0, k, j));
      }
    }
  }
  // Expected terms, as (side, node, {pi indices}); side 0 means [g <= 0].
  struct Term {
    int side;
    int node;
    std::vector<int> pis;
  };
  const std::vector<std::vector<Term>> expected{
      {{0, 0, {2, 3}}, {0, 1, {1}}},
      {{0, 0, {2, 3}}, {1, 1, {0}}},
      {{1, 0, {0, 1}}, {0, 2, {3}}},
      {{1, 0, {0, 1}}, {1, 2, {2}}},
  };
  for (int k = 0; k < 4; ++k) {
    int want[4][2][3] = {};
    for (const auto& term : expected[static_cast<std::size_t>(k)]) {
      for (int p : term.pis) want[p][term.side][term.node] = 1;
    }
    for (int unit = 0; unit < 4; ++unit) {
      for (int side = 0; side < 2; ++side) {
        for (int j = 0; j < 3; ++j) {
          if (coef[unit][k][side][j] != want[unit][side][j]) {
            return {false, "max-term of leaf " + std::to_string(k + 1) + " differs"};
          }
        }
      }
    }
  }
  return {true, "P, N, C1p = {3,4}, (w_n1)_1 = pi3 + pi4 and four max-terms match"};
}

// 3: solver against vertex enumeration, then LP identities on trained systems.
Outcome LpCorrectness() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> size(1, 6);
  double worst_lp = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto lp = gen::RandomSmallLp(rng, size(rng), size(rng));
    auto expected = oracle::VertexEnumerationMin(lp);
    auto sol = bt::SolveLp(lp);
    if (!expected || sol.status != bt::LpStatus::kOptimal) {
      return {false, "small LP " + std::to_string(trial) + " not solved"};
    }
    worst_lp = std::max(worst_lp, std::abs(sol.objective - *expected));
  }

  double worst_identity = 0.0;
  double worst_chain = -1e300;
  int systems = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    auto p = seed % 2 == 0 ? planted::RandomLinear(400, 4, seed) : planted::Cascade(400, seed);
    auto data = bt::Prepare(p.data, {0.5, 0.25, 0.25}, seed);
    bt::TrainConfig cfg;
    cfg.num_leaves = 2 + static_cast<int>(seed % 3);
    cfg.alpha = 0.02 + 0.02 * static_cast<double>(seed);
    cfg.classifier_basis = {1, false, true};
    cfg.decision_basis = {seed % 2 == 0 ? 1 : 2, false, true};
    cfg.lp_max_examples = data.train.size();
    auto r = bt::TrainSystem(data, p.sensors, cfg);
    const auto& sys = r.system;
    if (sys.tree.num_nodes() == 0) continue;
    auto correct = bt::LeafCorrectness(sys.leaf_models, data.train);
    auto s = bt::ComputeSavings<double>(sys.tree, sys.sensors, correct, data.train.size(), sys.alpha);
    auto w = bt::BuildWeights(sys.tree, s);
    double surrogate = 0.0;
    double product = 0.0;
    for (int i = 0; i < data.train.size(); ++i) {
      auto g = sys.decisions.Values(data.train.x.row(i));
      surrogate += bt::SurrogateRisk(sys.tree, s, w, g, i);
      product += bt::ProductRisk(sys.tree, s, bt::SignsOf(g), i);
    }
    worst_identity = std::max(worst_identity, std::abs(r.lp.objective + r.lp.constants - surrogate));
    worst_chain = std::max(worst_chain, product - surrogate);
    ++systems;
  }
  const bool pass = worst_lp <= 1e-9 && worst_identity <= 1e-5 && worst_chain <= 1e-9 && systems >= 4;
  return {pass, Fmt("solver gap %.1e; %g systems, identity gap %.1e, chain slack %.1e", worst_lp, systems,
                    worst_identity, worst_chain)};
}

// 4: logistic gradients against central differences.
Outcome Gradients() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> rows(2, 30);
  std::uniform_int_distribution<int> cols(1, 8);
  std::uniform_int_distribution<int> classes(2, 5);
  std::uniform_real_distribution<double> ridge(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rows(rng);
    const int b = cols(rng);
    const int c = classes(rng);
    Eigen::MatrixXd phi(n, b);
    for (int i = 0; i < n; ++i) for (int j = 0; j < b; ++j) phi(i, j) = unit(rng);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = std::uniform_int_distribution<int>(0, c - 1)(rng);
    Eigen::MatrixXd w(c, b);
    for (int k = 0; k < c; ++k) for (int j = 0; j < b; ++j) w(k, j) = unit(rng);
    const double l2 = ridge(rng);
    Eigen::MatrixXd grad;
    bt::LogisticObjective(w, phi, y, l2, &grad);
    auto fd = oracle::CentralDifference(
        [&](const Eigen::MatrixXd& v) { return bt::LogisticObjective(v, phi, y, l2, nullptr); }, w, 1e-5);
    worst = std::max(worst, (grad - fd).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6, Fmt("worst gradient gap %.2e over 50 problems", worst)};
}

// 5: planted two-sensor cascade.
Outcome PlantedCascade() {
  // Hard examples sit far out on the cheap axis with the wrong sign, so the
  // cheap leaf is confidently wrong there.
  auto p = planted::Cascade(3000, 55, {0.2, true, 0.1, 3.0, 6.0});
  auto data = bt::Prepare(p.data, {0.5, 0.25, 0.25}, 9);
  bt::TrainConfig cfg;
  cfg.num_leaves = 2;
  cfg.classifier_basis = {1, false, true};
  auto sweep = bt::SweepAlpha(data, p.sensors, cfg, bt::LogGrid(0.005, 0.5, 10), data.test);

  auto full = bt::TrainSubsetModel(data.train, p.sensors, {0, 1}, cfg.classifier_basis);
  auto pred = bt::PredictRows(full, data.test.x);
  int wrong = 0;
  for (int i = 0; i < data.test.size(); ++i) wrong += pred[i] != data.test.y[i];
  const double full_error = static_cast<double>(wrong) / data.test.size();

  const bt::CurvePoint* best = nullptr;
  for (const auto& pt : sweep.curve) {
    if (pt.ok && pt.cost_fraction <= 0.5 && (!best || pt.error < best->error)) best = &pt;
  }
  const bool near_full = best && best->error <= full_error + 0.02;

  auto reference = bt::MyopicReference(sweep);
  if (!reference) return {false, "no alpha trained successfully"};
  auto policy = bt::TrainMyopic(reference->tree, data.train, p.sensors, cfg.classifier_basis);
  auto myopic = bt::MyopicCurve(*reference, policy, bt::LinearGrid(0.0, 1.0, 0.1), data.test);
  const bool dominates = bt::WeaklyDominates(sweep.curve, myopic, 0.05 * p.sensors.TotalCost());

  std::string detail = Fmt("full-feature error %.4f", full_error);
  if (best) detail += Fmt(", best at <=50%% budget: error %.4f at %.3f", best->error, best->cost_fraction);
  detail += dominates ? ", dominates myopic" : ", does not dominate myopic";
  return {near_full && dominates, detail};
}

// 6: landsat with four band sensors.
Outcome Landsat() {
  const std::string dir = BUDGET_TREE_DATA_DIR;
  auto sensors = bt::LoadSensorSpec(dir + "/landsat_sensors.json");
  auto raw = bt::LoadDataset(dir + "/landsat.csv", "class");
  sensors.Validate(raw.num_features());
  auto data = bt::Prepare(std::move(raw), {0.7, 0.15, 0.15}, 1);
  bt::TrainConfig cfg;
  cfg.num_leaves = 4;
  cfg.classifier_basis = {1, false, true};
  cfg.decision_basis = {1, false, true};
  auto sweep = bt::SweepAlpha(data, sensors, cfg, bt::LogGrid(0.01, 0.3, 5), data.test);
  const bt::CurvePoint* best = nullptr;
  for (const auto& pt : sweep.curve) {
    if (pt.ok && pt.cost_fraction <= 0.85 && (!best || pt.error < best->error)) best = &pt;
  }
  if (!best) return {false, "no point within 85% budget"};
  return {best->error <= 0.15,
          Fmt("best error %.4f at budget fraction %.3f (alpha %.4g)", best->error, best->cost_fraction, best->param)};
}

// 7: greedy pair search against the exhaustive pair optimum.
Outcome GreedyVsExhaustive() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> sensors(2, 6);
  double worst = 0.0;
  int over = 0;
  for (int t = 0; t < 20; ++t) {
    auto planted = planted::TwoGroups(300, sensors(rng), 1000 + static_cast<std::uint64_t>(t));
    const auto& p = planted.problem;
    auto data = bt::Prepare(p.data, {0.5, 0.45, 0.05}, static_cast<std::uint64_t>(t));
    bt::SubsetSearchOptions opt;
    opt.num_subsets = 2;
    opt.alpha = 0.05;
    auto col = bt::GreedySelect(data.train, data.val, p.sensors, opt);
    auto best = oracle::ExhaustivePairLoss(data.train, data.val, p.sensors, opt.alpha, opt.search_basis,
                                           opt.logistic);
    const double ratio = col.loss / best.loss;
    worst = std::max(worst, ratio);
    if (ratio > 1.15) ++over;
  }
  return {over == 0, Fmt("worst ratio %.3f, %g of 20 instances above 1.15", worst, over)};
}

struct Criterion {
  int id;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, 10, Reformulation},  {2, 1, FigureFixture}, {3, 60, LpCorrectness},
      {4, 10, Gradients},      {5, 300, PlantedCascade}, {6, 1800, Landsat},
      {7, 600, GreedyVsExhaustive},
  };
  std::vector<int> wanted;
  for (int a = 1; a < argc; ++a) wanted.push_back(std::atoi(argv[a]));
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    std::printf("criterion %d: %s (%s; %.1fs of %.0fs)\n", c.id, o.pass && in_time ? "PASS" : "FAIL",
                o.detail.c_str(), secs, c.budget_seconds);
    std::fflush(stdout);
  }
  return 0;
}
