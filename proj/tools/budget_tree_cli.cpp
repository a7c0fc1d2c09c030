// budget-tree: learn and evaluate sensor-acquisition trees.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "budget_tree/budget_tree.hpp"

namespace bt = budget_tree;
using Json = nlohmann::json;

namespace {

struct Options {
  std::string data;
  std::string sensors;
  std::string label = "class";
  std::string split = "0.7,0.15,0.15";
  std::uint64_t seed = 1;
  double alpha = 0.1;
  std::string alpha_grid;
  int leaves = 4;
  int basis_degree = 2;
  bool homogeneous = false;
  int g_degree = 0;
  double l2 = 1e-4;
  double wmax = 1e3;
  int candidate_budget = 0;
  int lp_max_examples = 400;
  std::string fixed_tree;
  std::string fixed_subsets;
  std::string baseline = "none";
  std::string tau_grid = "0:1:0.1";
  std::string dump_lp;
  std::string out;
  std::string model;
  std::string part = "test";
  std::string details;
  int trees = 200;
  int max_leaves = 8;
};

void AddDataOptions(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data, "CSV dataset")->required();
  cmd->add_option("--sensors", o.sensors, "sensor config JSON")->required();
  cmd->add_option("--label", o.label, "label column name")->capture_default_str();
  cmd->add_option("--split", o.split, "train,val,test fractions")->capture_default_str();
  cmd->add_option("--seed", o.seed, "split seed")->capture_default_str();
}

void AddTrainOptions(CLI::App* cmd, Options& o) {
  cmd->add_option("--leaves", o.leaves, "number of subsets K searched")->capture_default_str();
  cmd->add_option("--basis-degree", o.basis_degree, "classifier basis degree (1 or 2)")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  cmd->add_flag("--homogeneous", o.homogeneous, "degree-2 bases without linear terms");
  cmd->add_option("--g-degree", o.g_degree, "decision basis degree (default: basis degree)")
      ->check(CLI::IsMember({0, 1, 2}));
  cmd->add_option("--l2", o.l2, "classifier ridge")->capture_default_str();
  cmd->add_option("--wmax", o.wmax, "box bound on decision weights")->capture_default_str();
  cmd->add_option("--candidate-budget", o.candidate_budget,
                  "sensors tried per greedy step, cheapest first (0: all)")
      ->capture_default_str();
  cmd->add_option("--lp-max-examples", o.lp_max_examples,
                  "training examples entering the LP (0: all)")
      ->capture_default_str();
  cmd->add_option("--fixed-tree", o.fixed_tree, "tree JSON used instead of searching");
  cmd->add_option("--fixed-subsets", o.fixed_subsets, "subsets JSON (output of 'subsets')");
}

std::array<double, 3> ParseFractions(const std::string& s) {
  std::array<double, 3> f{};
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> f[0] >> c1 >> f[1] >> c2 >> f[2]) || c1 != ',' || c2 != ',' || !in.eof()) {
    throw bt::Error(bt::ErrorKind::kConfig, "cli", "--split expects three comma-separated fractions");
  }
  return f;
}

// "lo:hi:x" -> three numbers.
std::array<double, 3> ParseRange(const std::string& s, const std::string& flag) {
  std::array<double, 3> r{};
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> r[0] >> c1 >> r[1] >> c2 >> r[2]) || c1 != ':' || c2 != ':' || !in.eof()) {
    throw bt::Error(bt::ErrorKind::kConfig, "cli", flag + " expects lo:hi:value");
  }
  return r;
}

bt::BasisConfig ClassifierBasis(const Options& o) {
  return bt::BasisConfig{o.basis_degree, o.homogeneous, true};
}

bt::BasisConfig DecisionBasis(const Options& o) {
  return bt::BasisConfig{o.g_degree == 0 ? o.basis_degree : o.g_degree, o.homogeneous, true};
}

Json ConfigJson(const Options& o, const std::string& command) {
  return {{"command", command},
          {"data", o.data},
          {"sensors", o.sensors},
          {"label", o.label},
          {"split", o.split},
          {"seed", o.seed},
          {"alpha", o.alpha},
          {"alpha_grid", o.alpha_grid},
          {"leaves", o.leaves},
          {"basis_degree", o.basis_degree},
          {"homogeneous", o.homogeneous},
          {"g_degree", o.g_degree == 0 ? o.basis_degree : o.g_degree},
          {"l2", o.l2},
          {"wmax", o.wmax},
          {"candidate_budget", o.candidate_budget},
          {"lp_max_examples", o.lp_max_examples},
          {"fixed_tree", o.fixed_tree},
          {"fixed_subsets", o.fixed_subsets},
          {"baseline", o.baseline},
          {"tau_grid", o.tau_grid}};
}

struct Loaded {
  bt::SensorSpec sensors;
  bt::PreparedData data;
};

Loaded LoadInputs(const Options& o) {
  auto sensors = bt::LoadSensorSpec(o.sensors);
  auto raw = bt::LoadDataset(o.data, o.label);
  sensors.Validate(raw.num_features());
  if (raw.num_classes() < 2) throw bt::Error(bt::ErrorKind::kData, "data", "need at least 2 classes");
  return Loaded{std::move(sensors), bt::Prepare(std::move(raw), ParseFractions(o.split), o.seed)};
}

std::vector<bt::SensorSet> LoadSubsets(const std::string& path, const bt::SensorSpec& sensors) {
  std::ifstream in(path);
  if (!in) throw bt::Error(bt::ErrorKind::kConfig, "cli", "cannot open subsets file '" + path + "'");
  Json j;
  try {
    in >> j;
    std::vector<bt::SensorSet> out;
    for (const auto& s : j.at("subsets")) out.push_back(bt::SetFromNames(s, sensors));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw bt::Error(bt::ErrorKind::kConfig, "cli", "bad subsets file '" + path + "': " + e.what());
  }
}

bt::TrainConfig MakeTrainConfig(const Options& o, const bt::SensorSpec& sensors) {
  if (o.leaves < 1) throw bt::Error(bt::ErrorKind::kConfig, "cli", "--leaves must be >= 1");
  if (!(o.l2 >= 0)) throw bt::Error(bt::ErrorKind::kConfig, "cli", "--l2 must be >= 0");
  bt::TrainConfig c;
  c.num_leaves = o.leaves;
  c.alpha = o.alpha;
  c.candidate_budget = o.candidate_budget;
  c.classifier_basis = ClassifierBasis(o);
  c.decision_basis = DecisionBasis(o);
  c.logistic.l2 = o.l2;
  c.w_max = o.wmax;
  c.lp_max_examples = o.lp_max_examples;
  if (!o.fixed_tree.empty()) c.fixed_tree = bt::LoadTree(o.fixed_tree, sensors);
  if (!o.fixed_subsets.empty()) c.fixed_subsets = LoadSubsets(o.fixed_subsets, sensors);
  return c;
}

void Emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    bt::WriteFileAtomic(path, text);
  }
}

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string CurveCsv(const std::vector<bt::CurvePoint>& curve, const std::string& param) {
  std::string s = param + ",mean_cost,cost_fraction,error\n";
  for (const auto& p : curve) {
    if (!p.ok) continue;
    s += Num(p.param) + "," + Num(p.mean_cost) + "," + Num(p.cost_fraction) + "," + Num(p.error) + "\n";
  }
  for (const auto& p : curve) {
    if (!p.ok) s += "# failed " + param + "=" + Num(p.param) + ": " + p.message + "\n";
  }
  return s;
}

Json LpJson(const bt::LpDiagnostics& d) {
  return {{"status", bt::ToString(d.status)},
          {"iterations", d.iterations},
          {"variables", d.num_vars},
          {"rows", d.num_rows},
          {"examples", d.num_examples},
          {"objective", d.objective},
          {"constants", d.constants},
          {"surrogate_sum", d.surrogate_sum},
          {"max_violation", d.max_violation},
          {"gamma_gap", d.gamma_gap},
          {"hinge_gap", d.hinge_gap}};
}

int CmdSubsets(const Options& o) {
  auto in = LoadInputs(o);
  bt::SubsetSearchOptions so;
  so.num_subsets = o.leaves;
  so.alpha = o.alpha;
  so.candidate_budget = o.candidate_budget;
  so.final_basis = ClassifierBasis(o);
  so.logistic.l2 = o.l2;
  auto col = bt::GreedySelect(in.data.train, in.data.val, in.sensors, so);
  Json subsets = Json::array();
  for (const auto& s : col.subsets) subsets.push_back(in.sensors.Names(s));
  Json history = Json::array();
  for (const auto& h : col.history) {
    history.push_back({{"subset", h.subset}, {"sensor", in.sensors[h.sensor].name}, {"loss", h.loss}});
  }
  Json doc = {{"alpha", col.alpha},
              {"loss", col.loss},
              {"initial_loss", col.initial_loss},
              {"subsets", subsets},
              {"history", history}};
  Emit(o.out, doc.dump(2) + "\n");
  return 0;
}

int CmdTrain(const Options& o) {
  if (o.out.empty()) throw bt::Error(bt::ErrorKind::kConfig, "cli", "train needs --out");
  auto in = LoadInputs(o);
  auto cfg = MakeTrainConfig(o, in.sensors);
  bt::AssembledLp lp;
  auto result = bt::TrainSystem(in.data, in.sensors, cfg, o.dump_lp.empty() ? nullptr : &lp);
  if (!o.dump_lp.empty()) {
    std::ostringstream text;
    bt::WriteLp(text, lp.lp);
    bt::WriteFileAtomic(o.dump_lp, text.str());
  }
  bt::ModelFile m;
  m.system = std::move(result.system);
  m.split = in.data.split;
  m.feature_columns = in.data.raw.columns;
  m.class_names = in.data.raw.class_names;
  m.label_column = o.label;
  m.config = ConfigJson(o, "train");
  m.diagnostics = {{"lp", LpJson(result.lp)}};
  if (result.collection) m.diagnostics["subset_loss"] = result.collection->loss;
  bt::SaveModel(o.out, m);
  std::cerr << "trained " << m.system.tree.num_leaves() << " leaves; LP " << bt::ToString(result.lp.status)
            << " in " << result.lp.iterations << " iterations, objective " << result.lp.objective << "\n";
  return 0;
}

int CmdEval(Options o) {
  auto m = bt::LoadModel(o.model);
  if (o.data.empty()) o.data = m.config.value("data", std::string());
  if (o.data.empty()) throw bt::Error(bt::ErrorKind::kConfig, "cli", "eval needs --data");
  auto raw = bt::LoadDataset(o.data, m.label_column);
  if (raw.columns != m.feature_columns) {
    throw bt::Error(bt::ErrorKind::kModelMismatch, "cli", "dataset columns differ from the model's");
  }
  std::vector<int> rows;
  auto add = [&](const std::vector<int>& v) { rows.insert(rows.end(), v.begin(), v.end()); };
  if (o.part == "train") add(m.split.train);
  else if (o.part == "val") add(m.split.val);
  else if (o.part == "test") add(m.split.test);
  else if (o.part == "all") for (int i = 0; i < raw.size(); ++i) rows.push_back(i);
  else throw bt::Error(bt::ErrorKind::kConfig, "cli", "--part must be train, val, test or all");
  for (int r : rows) {
    if (r < 0 || r >= raw.size()) {
      throw bt::Error(bt::ErrorKind::kModelMismatch, "cli", "model split does not fit this dataset");
    }
  }
  // Class ids follow the model's class names.
  bt::Dataset part = raw.Rows(rows);
  for (auto& y : part.y) {
    const auto& name = raw.class_names[static_cast<std::size_t>(y)];
    auto it = std::find(m.class_names.begin(), m.class_names.end(), name);
    y = it == m.class_names.end() ? -1 : static_cast<int>(it - m.class_names.begin());
  }
  part.class_names = m.class_names;
  part.x = m.system.scaler.Apply(part.x);
  auto rec = bt::Evaluate(m.system, part);
  Emit(o.out, CurveCsv({bt::ToCurvePoint(m.system.alpha, rec)}, "alpha"));
  if (!o.details.empty()) {
    std::string lines;
    for (int i = 0; i < rec.size(); ++i) {
      const auto ii = static_cast<std::size_t>(i);
      lines += Json{{"row", rows[ii]}, {"leaf", rec.leaf[ii]}, {"cost", rec.cost[ii]},
                    {"correct", rec.correct[ii] != 0}}
                   .dump() +
               "\n";
    }
    bt::WriteFileAtomic(o.details, lines);
  }
  return 0;
}

int CmdSweep(const Options& o) {
  if (o.alpha_grid.empty()) throw bt::Error(bt::ErrorKind::kConfig, "cli", "sweep needs --alpha-grid");
  auto g = ParseRange(o.alpha_grid, "--alpha-grid");
  if (g[2] != std::floor(g[2])) {
    throw bt::Error(bt::ErrorKind::kConfig, "cli", "--alpha-grid step count must be an integer");
  }
  auto alphas = bt::LogGrid(g[0], g[1], static_cast<int>(g[2]));
  if (o.baseline != "none" && o.baseline != "myopic") {
    throw bt::Error(bt::ErrorKind::kConfig, "cli", "--baseline must be none or myopic");
  }
  std::vector<double> taus;
  if (o.baseline == "myopic") {
    auto t = ParseRange(o.tau_grid, "--tau-grid");
    taus = bt::LinearGrid(t[0], t[1], t[2]);
    for (double tau : taus) {
      if (tau < 0 || tau > 1) throw bt::Error(bt::ErrorKind::kConfig, "cli", "--tau-grid must lie in [0,1]");
    }
  }
  auto in = LoadInputs(o);
  auto cfg = MakeTrainConfig(o, in.sensors);
  auto sweep = bt::SweepAlpha(in.data, in.sensors, cfg, alphas, in.data.test);
  for (const auto& p : sweep.curve) {
    if (!p.ok) std::cerr << "alpha " << p.param << " failed: " << p.message << "\n";
  }
  std::string text;
  if (o.baseline == "myopic") {
    auto base = bt::MyopicReference(sweep);
    if (!base) throw bt::Error(bt::ErrorKind::kSolver, "cli", "no alpha trained successfully");
    auto policy = bt::TrainMyopic(base->tree, in.data.train, in.sensors, ClassifierBasis(o),
                                  bt::LogisticOptions{o.l2});
    auto myopic = bt::MyopicCurve(*base, policy, taus, in.data.test);
    text = "# curve=lp\n" + CurveCsv(sweep.curve, "alpha") + "# curve=myopic\n" + CurveCsv(myopic, "tau");
  } else {
    text = CurveCsv(sweep.curve, "alpha");
  }
  Emit(o.out, text);
  bool any_ok = false;
  for (const auto& p : sweep.curve) any_ok = any_ok || p.ok;
  return any_ok ? 0 : 1;
}

int CmdRiskCheck(const Options& o) {
  auto rep = bt::RunRiskCheck(o.trees, o.seed, o.max_leaves);
  std::cout << "trees " << rep.trees << "\n"
            << "comparisons " << rep.comparisons << "\n"
            << "equivalence_failures " << rep.equivalence_failures << "\n"
            << "routing_failures " << rep.routing_failures << "\n"
            << "surrogate_failures " << rep.surrogate_failures << "\n"
            << (rep.ok() ? "PASS" : "FAIL") << "\n";
  return rep.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn and evaluate budgeted sensor-acquisition trees"};
  app.require_subcommand(1);
  Options o;

  auto* subsets = app.add_subcommand("subsets", "greedy sensor-subset search");
  AddDataOptions(subsets, o);
  subsets->add_option("--alpha", o.alpha, "cost trade-off")->capture_default_str();
  subsets->add_option("--leaves", o.leaves, "number of subsets K")->capture_default_str();
  subsets->add_option("--basis-degree", o.basis_degree, "final classifier basis degree")
      ->check(CLI::IsMember({1, 2}));
  subsets->add_flag("--homogeneous", o.homogeneous, "degree-2 bases without linear terms");
  subsets->add_option("--l2", o.l2, "classifier ridge");
  subsets->add_option("--candidate-budget", o.candidate_budget, "sensors tried per step (0: all)");
  subsets->add_option("--out", o.out, "output JSON (default stdout)");

  auto* train = app.add_subcommand("train", "train a full system and write a model file");
  AddDataOptions(train, o);
  AddTrainOptions(train, o);
  train->add_option("--alpha", o.alpha, "cost trade-off")->capture_default_str();
  train->add_option("--dump-lp", o.dump_lp, "write the decision LP as text");
  train->add_option("--out", o.out, "model JSON")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a model file");
  eval->add_option("--model", o.model, "model JSON")->required();
  eval->add_option("--data", o.data, "CSV dataset (default: the training file)");
  eval->add_option("--part", o.part, "train, val, test or all")->capture_default_str();
  eval->add_option("--details", o.details, "per-example JSON lines");
  eval->add_option("--out", o.out, "output CSV (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "retrain over an alpha grid and trace the budget curve");
  AddDataOptions(sweep, o);
  AddTrainOptions(sweep, o);
  sweep->add_option("--alpha-grid", o.alpha_grid, "lo:hi:steps, log-spaced")->required();
  sweep->add_option("--baseline", o.baseline, "none or myopic")->capture_default_str();
  sweep->add_option("--tau-grid", o.tau_grid, "lo:hi:step for the myopic threshold")->capture_default_str();
  sweep->add_option("--out", o.out, "output CSV (default stdout)");

  auto* check = app.add_subcommand("risk-check", "random equivalence checks of the risk forms");
  check->add_option("--trees", o.trees, "random trees")->capture_default_str();
  check->add_option("--seed", o.seed, "random seed")->capture_default_str();
  check->add_option("--max-leaves", o.max_leaves, "largest K")->check(CLI::Range(2, 16))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*subsets) return CmdSubsets(o);
    if (*train) return CmdTrain(o);
    if (*eval) return CmdEval(o);
    if (*sweep) return CmdSweep(o);
    if (*check) return CmdRiskCheck(o);
  } catch (const bt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bt::ExitCode(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
