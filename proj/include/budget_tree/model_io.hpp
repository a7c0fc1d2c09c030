#ifndef BUDGET_TREE_MODEL_IO_HPP_
#define BUDGET_TREE_MODEL_IO_HPP_

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "budget_tree/data.hpp"
#include "budget_tree/error.hpp"
#include "budget_tree/logistic.hpp"
#include "budget_tree/lp_train.hpp"
#include "budget_tree/policy.hpp"
#include "budget_tree/sensors.hpp"
#include "budget_tree/tree.hpp"

namespace budget_tree {

inline constexpr const char* kModelFormat = "budget-tree/1";

using Json = nlohmann::json;

// Writes through a sibling temporary file and renames it into place.
inline void WriteFileAtomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kConfig, "cli", "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::kConfig, "cli", "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::kConfig, "cli", "cannot move output into '" + path + "': " + ec.message());
  }
}

inline Json ToJson(const BasisConfig& b) {
  return {{"degree", b.degree}, {"homogeneous", b.homogeneous}, {"include_bias", b.include_bias}};
}

inline BasisConfig BasisFromJson(const Json& j) {
  BasisConfig b;
  b.degree = j.at("degree").get<int>();
  b.homogeneous = j.at("homogeneous").get<bool>();
  b.include_bias = j.at("include_bias").get<bool>();
  if (b.degree != 1 && b.degree != 2) {
    throw Error(ErrorKind::kModelMismatch, "cli", "basis degree must be 1 or 2");
  }
  return b;
}

inline Json ToJson(const Scaler& s) {
  return {{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
          {"std", std::vector<double>(s.stddev.data(), s.stddev.data() + s.stddev.size())}};
}

inline Scaler ScalerFromJson(const Json& j) {
  auto mean = j.at("mean").get<std::vector<double>>();
  auto sd = j.at("std").get<std::vector<double>>();
  if (mean.size() != sd.size()) throw Error(ErrorKind::kModelMismatch, "cli", "scaler size mismatch");
  Scaler s;
  s.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  s.stddev = Eigen::Map<Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
  return s;
}

inline Json ToJson(const Split& s) {
  return {{"seed", s.seed}, {"train", s.train}, {"val", s.val}, {"test", s.test}};
}

inline Split SplitFromJson(const Json& j) {
  Split s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train = j.at("train").get<std::vector<int>>();
  s.val = j.at("val").get<std::vector<int>>();
  s.test = j.at("test").get<std::vector<int>>();
  return s;
}

inline Json MatrixToJson(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::MatrixXd MatrixFromJson(const Json& j) {
  auto rows = j.get<std::vector<std::vector<double>>>();
  const auto cols = rows.empty() ? std::size_t{0} : rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error(ErrorKind::kModelMismatch, "cli", "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

inline SensorSet SetFromNames(const Json& names, const SensorSpec& sensors) {
  std::vector<int> ids;
  for (const auto& n : names) ids.push_back(sensors.IdOf(n.get<std::string>()));
  return MakeSensorSet(std::move(ids));
}

inline Json ChildToJson(ChildRef c) {
  return c.is_leaf ? Json{{"leaf", c.index}} : Json{{"node", c.index}};
}

inline ChildRef ChildFromJson(const Json& j) {
  if (j.contains("leaf")) return ChildRef{true, j["leaf"].get<int>()};
  if (j.contains("node")) return ChildRef{false, j["node"].get<int>()};
  throw Error(ErrorKind::kConfig, "cli", "child must be {\"leaf\":k} or {\"node\":j}");
}

inline Json ToJson(const TreeStructure& t, const SensorSpec& sensors) {
  Json nodes = Json::array();
  for (int j = 0; j < t.num_nodes(); ++j) {
    const auto& n = t.nodes[static_cast<std::size_t>(j)];
    nodes.push_back({{"id", j},
                     {"acquired", sensors.Names(n.acquired)},
                     {"negative", ChildToJson(n.negative)},
                     {"positive", ChildToJson(n.positive)}});
  }
  Json leaves = Json::array();
  for (int k = 0; k < t.num_leaves(); ++k) {
    leaves.push_back({{"id", k}, {"sensors", sensors.Names(t.leaves[static_cast<std::size_t>(k)].sensors)}});
  }
  return {{"nodes", nodes}, {"leaves", leaves}, {"P", t.P}, {"N", t.N}};
}

// Accepts the tree block of a model file, or a hand-written tree where each
// leaf is either {"sensors":[names]} or a bare list of names. Node 0 is the
// root; nodes are renumbered in preorder.
inline TreeStructure TreeFromJson(const Json& j, const SensorSpec& sensors) {
  try {
    std::vector<Leaf> leaves;
    for (const auto& l : j.at("leaves")) {
      const Json& names = l.is_array() ? l : l.at("sensors");
      leaves.push_back(Leaf{SetFromNames(names, sensors), {}});
    }
    std::vector<InternalNode> nodes;
    for (const auto& n : j.value("nodes", Json::array())) {
      nodes.push_back(InternalNode{SetFromNames(n.value("acquired", Json::array()), sensors),
                                   ChildFromJson(n.at("negative")), ChildFromJson(n.at("positive"))});
    }
    for (const auto& n : nodes) {
      for (ChildRef c : {n.negative, n.positive}) {
        const auto limit = c.is_leaf ? leaves.size() : nodes.size();
        if (c.index < 0 || static_cast<std::size_t>(c.index) >= limit) {
          throw Error(ErrorKind::kConfig, "tree_builder", "child reference out of range");
        }
      }
    }
    if (nodes.size() + 1 != leaves.size()) {
      throw Error(ErrorKind::kConfig, "tree_builder", "a tree with K leaves needs K-1 nodes");
    }
    if (!nodes.empty()) nodes = detail::PreorderNodes(nodes, ChildRef{false, 0});
    auto t = FinalizeTree(std::move(nodes), std::move(leaves), sensors.size());
    if (j.contains("P") && j.contains("N")) {
      auto p = j["P"].get<std::vector<std::vector<std::uint8_t>>>();
      auto n = j["N"].get<std::vector<std::vector<std::uint8_t>>>();
      if (p != t.P || n != t.N) {
        throw Error(ErrorKind::kModelMismatch, "tree_builder", "stored P/N disagree with the tree");
      }
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, "tree_builder", std::string("bad tree JSON: ") + e.what());
  }
}

inline TreeStructure LoadTree(const std::string& path, const SensorSpec& sensors) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cli", "cannot open tree file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, "cli", "tree file '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.contains("tree")) return TreeFromJson(j["tree"], sensors);
  return TreeFromJson(j, sensors);
}

inline Json ToJson(const LogisticModel& m, const SensorSpec& sensors) {
  return {{"subset", sensors.Names(m.subset)},
          {"columns", m.columns},
          {"basis", ToJson(m.basis)},
          {"weights", MatrixToJson(m.weights)},
          {"train",
           {{"iterations", m.info.iterations},
            {"loss", m.info.loss},
            {"grad_inf_norm", m.info.grad_inf_norm},
            {"error", m.info.training_error}}}};
}

inline LogisticModel LogisticFromJson(const Json& j, const SensorSpec& sensors) {
  LogisticModel m;
  m.subset = SetFromNames(j.at("subset"), sensors);
  m.columns = j.at("columns").get<std::vector<int>>();
  m.basis = BasisFromJson(j.at("basis"));
  m.weights = MatrixFromJson(j.at("weights"));
  if (m.columns != sensors.Columns(m.subset)) {
    throw Error(ErrorKind::kModelMismatch, "leaf_classifier", "model columns disagree with sensors");
  }
  if (m.weights.cols() != BasisSize(static_cast<int>(m.columns.size()), m.basis)) {
    throw Error(ErrorKind::kModelMismatch, "leaf_classifier", "weight width disagrees with basis");
  }
  if (const auto it = j.find("train"); it != j.end()) {
    m.info.iterations = it->value("iterations", 0);
    m.info.loss = it->value("loss", 0.0);
    m.info.grad_inf_norm = it->value("grad_inf_norm", 0.0);
    m.info.training_error = it->value("error", 0.0);
  }
  return m;
}

inline Json ToJson(const DecisionFunctions& d, const SensorSpec& sensors) {
  Json nodes = Json::array();
  for (const auto& n : d.nodes) {
    nodes.push_back({{"acquired", sensors.Names(n.acquired)},
                     {"columns", n.columns},
                     {"basis", ToJson(n.basis)},
                     {"weights", std::vector<double>(n.weights.data(), n.weights.data() + n.weights.size())}});
  }
  return {{"w_max", d.w_max}, {"nodes", nodes}};
}

inline DecisionFunctions DecisionsFromJson(const Json& j, const SensorSpec& sensors) {
  DecisionFunctions d;
  d.w_max = j.at("w_max").get<double>();
  for (const auto& n : j.at("nodes")) {
    NodeDecision nd;
    nd.acquired = SetFromNames(n.at("acquired"), sensors);
    nd.columns = n.at("columns").get<std::vector<int>>();
    nd.basis = BasisFromJson(n.at("basis"));
    auto w = n.at("weights").get<std::vector<double>>();
    nd.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    if (nd.columns != sensors.Columns(nd.acquired) ||
        nd.weights.size() != BasisSize(static_cast<int>(nd.columns.size()), nd.basis)) {
      throw Error(ErrorKind::kModelMismatch, "lp_train", "decision block is inconsistent");
    }
    d.nodes.push_back(std::move(nd));
  }
  return d;
}

// Everything needed to evaluate a trained system later.
struct ModelFile {
  DecisionSystem system;
  Split split;
  std::vector<std::string> feature_columns;
  std::vector<std::string> class_names;
  std::string label_column;
  Json config = Json::object();
  Json diagnostics = Json::object();
};

inline Json ToJson(const ModelFile& m) {
  const auto& s = m.system;
  Json leaf_models = Json::array();
  for (const auto& lm : s.leaf_models) leaf_models.push_back(ToJson(lm, s.sensors));
  return {{"format", kModelFormat},
          {"alpha", s.alpha},
          {"label", m.label_column},
          {"feature_columns", m.feature_columns},
          {"classes", m.class_names},
          {"sensors", ToJson(s.sensors)["sensors"]},
          {"scaler", ToJson(s.scaler)},
          {"split", ToJson(m.split)},
          {"classifier_basis", ToJson(s.classifier_basis)},
          {"decision_basis", ToJson(s.decision_basis)},
          {"tree", ToJson(s.tree, s.sensors)},
          {"leaf_models", leaf_models},
          {"decisions", ToJson(s.decisions, s.sensors)},
          {"diagnostics", m.diagnostics},
          {"config", m.config}};
}

inline ModelFile ModelFromJson(const Json& j) {
  if (!j.is_object() || !j.contains("format")) {
    throw Error(ErrorKind::kModelMismatch, "cli", "not a model file (no \"format\" field)");
  }
  if (j["format"] != kModelFormat) {
    throw Error(ErrorKind::kModelMismatch, "cli",
                "unsupported model format '" + j["format"].dump() + "', expected " + kModelFormat);
  }
  ModelFile m;
  try {
    auto& s = m.system;
    s.sensors = SensorSpecFromJson(Json{{"sensors", j.at("sensors")}});
    s.alpha = j.at("alpha").get<double>();
    s.scaler = ScalerFromJson(j.at("scaler"));
    s.classifier_basis = BasisFromJson(j.at("classifier_basis"));
    s.decision_basis = BasisFromJson(j.at("decision_basis"));
    s.tree = TreeFromJson(j.at("tree"), s.sensors);
    for (const auto& lm : j.at("leaf_models")) s.leaf_models.push_back(LogisticFromJson(lm, s.sensors));
    s.decisions = DecisionsFromJson(j.at("decisions"), s.sensors);
    m.split = SplitFromJson(j.at("split"));
    m.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
    m.class_names = j.at("classes").get<std::vector<std::string>>();
    m.label_column = j.at("label").get<std::string>();
    m.config = j.value("config", Json::object());
    m.diagnostics = j.value("diagnostics", Json::object());
    s.sensors.Validate(static_cast<int>(m.feature_columns.size()));
    s.Validate();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kModelMismatch, "cli", std::string("malformed model file: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kModelMismatch) throw;
    throw Error(ErrorKind::kModelMismatch, e.module(), e.detail());
  }
  return m;
}

inline ModelFile LoadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cli", "cannot open model file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kModelMismatch, "cli", "model file '" + path + "' is not JSON: " + e.what());
  }
  return ModelFromJson(j);
}

inline void SaveModel(const std::string& path, const ModelFile& m) {
  WriteFileAtomic(path, ToJson(m).dump(1) + "\n");
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_MODEL_IO_HPP_
