#ifndef BUDGET_TREE_SENSORS_HPP_
#define BUDGET_TREE_SENSORS_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "budget_tree/error.hpp"

namespace budget_tree {

// Sorted, duplicate-free list of sensor ids.
using SensorSet = std::vector<int>;

inline SensorSet MakeSensorSet(std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

inline SensorSet SetUnion(const SensorSet& a, const SensorSet& b) {
  SensorSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline SensorSet SetIntersection(const SensorSet& a, const SensorSet& b) {
  SensorSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

inline SensorSet SetDifference(const SensorSet& a, const SensorSet& b) {
  SensorSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

inline bool IsSubset(const SensorSet& inner, const SensorSet& outer) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

struct Sensor {
  std::string name;
  double cost = 1.0;
  std::vector<int> columns;
};

// The L priced sensors, each owning a disjoint group of feature columns.
class SensorSpec {
 public:
  SensorSpec() = default;
  explicit SensorSpec(std::vector<Sensor> sensors) : sensors_(std::move(sensors)) {}

  int size() const { return static_cast<int>(sensors_.size()); }
  const Sensor& operator[](int m) const { return sensors_.at(static_cast<std::size_t>(m)); }
  const std::vector<Sensor>& sensors() const { return sensors_; }

  SensorSet All() const {
    SensorSet all(sensors_.size());
    for (int m = 0; m < size(); ++m) all[static_cast<std::size_t>(m)] = m;
    return all;
  }

  double Cost(const SensorSet& s) const {
    double c = 0.0;
    for (int m : s) c += (*this)[m].cost;
    return c;
  }

  double TotalCost() const { return Cost(All()); }

  // Feature columns of a sensor set, in sensor order then declaration order.
  std::vector<int> Columns(const SensorSet& s) const {
    std::vector<int> cols;
    for (int m : s) {
      const auto& c = (*this)[m].columns;
      cols.insert(cols.end(), c.begin(), c.end());
    }
    return cols;
  }

  int IdOf(const std::string& name) const {
    for (int m = 0; m < size(); ++m) {
      if (sensors_[static_cast<std::size_t>(m)].name == name) return m;
    }
    throw Error(ErrorKind::kConfig, "data", "unknown sensor name '" + name + "'");
  }

  std::vector<std::string> Names(const SensorSet& s) const {
    std::vector<std::string> out;
    for (int m : s) out.push_back((*this)[m].name);
    return out;
  }

  // Checks the invariants against a dataset with `num_features` columns.
  void Validate(int num_features) const {
    if (size() < 2) {
      throw Error(ErrorKind::kConfig, "data", "need at least 2 sensors, got " +
                                                  std::to_string(size()));
    }
    std::set<int> seen;
    std::set<std::string> names;
    for (const auto& s : sensors_) {
      if (!std::isfinite(s.cost) || s.cost < 0.0) {
        throw Error(ErrorKind::kConfig, "data",
                    "sensor '" + s.name + "' has invalid cost");
      }
      if (s.columns.empty()) {
        throw Error(ErrorKind::kConfig, "data",
                    "sensor '" + s.name + "' has no columns");
      }
      if (!names.insert(s.name).second) {
        throw Error(ErrorKind::kConfig, "data", "duplicate sensor name '" + s.name + "'");
      }
      for (int c : s.columns) {
        if (c < 0 || c >= num_features) {
          throw Error(ErrorKind::kConfig, "data",
                      "sensor '" + s.name + "' column " + std::to_string(c) +
                          " out of range [0," + std::to_string(num_features) + ")");
        }
        if (!seen.insert(c).second) {
          throw Error(ErrorKind::kConfig, "data",
                      "column " + std::to_string(c) + " claimed by two sensors");
        }
      }
    }
  }

 private:
  std::vector<Sensor> sensors_;
};

inline nlohmann::json ToJson(const SensorSpec& spec) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : spec.sensors()) {
    arr.push_back({{"name", s.name}, {"cost", s.cost}, {"columns", s.columns}});
  }
  return {{"sensors", arr}};
}

// Parses {"sensors":[{"name":..,"cost":..,"columns":[..]}, ...]}. A missing
// cost defaults to 1.
inline SensorSpec SensorSpecFromJson(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("sensors") || !doc["sensors"].is_array()) {
    throw Error(ErrorKind::kConfig, "data", "sensor config needs a \"sensors\" array");
  }
  std::vector<Sensor> sensors;
  try {
    for (const auto& item : doc["sensors"]) {
      Sensor s;
      s.name = item.at("name").get<std::string>();
      s.cost = item.contains("cost") ? item["cost"].get<double>() : 1.0;
      s.columns = item.at("columns").get<std::vector<int>>();
      sensors.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, "data", std::string("bad sensor config: ") + e.what());
  }
  return SensorSpec(std::move(sensors));
}

inline SensorSpec LoadSensorSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "data", "cannot open sensor config '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, "data",
                "sensor config '" + path + "' is not valid JSON: " + e.what());
  }
  return SensorSpecFromJson(doc);
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_SENSORS_HPP_
