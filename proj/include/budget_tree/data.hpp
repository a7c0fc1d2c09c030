#ifndef BUDGET_TREE_DATA_HPP_
#define BUDGET_TREE_DATA_HPP_

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "budget_tree/error.hpp"
#include "budget_tree/sensors.hpp"

namespace budget_tree {

// Labeled tabular data. Labels are dense ids into class_names.
struct Dataset {
  Eigen::MatrixXd x;  // N x D
  std::vector<int> y;
  std::vector<std::string> columns;
  std::vector<std::string> class_names;

  int size() const { return static_cast<int>(y.size()); }
  int num_features() const { return static_cast<int>(x.cols()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  Dataset Rows(std::span<const int> idx) const {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    out.y.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.x.row(static_cast<Eigen::Index>(r)) = x.row(idx[r]);
      out.y.push_back(y[static_cast<std::size_t>(idx[r])]);
    }
    out.columns = columns;
    out.class_names = class_names;
    return out;
  }
};

inline Eigen::MatrixXd SelectColumns(const Eigen::MatrixXd& x, std::span<const int> cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = x.col(cols[c]);
  }
  return out;
}

namespace detail {

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(Trim(line.substr(start)));
      break;
    }
    fields.push_back(Trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

inline bool ParseDouble(std::string_view s, double* out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

// CSV with a header row; `label_column` names the class column, every other
// column must be numeric and finite.
inline Dataset ParseCsv(std::istream& in, const std::string& label_column) {
  std::string line;
  if (!std::getline(in, line) || detail::Trim(line).empty()) {
    throw Error(ErrorKind::kData, "data", "empty file");
  }
  auto header = detail::SplitFields(line);
  int label_idx = -1;
  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) {
      label_idx = static_cast<int>(c);
    } else {
      ds.columns.emplace_back(header[c]);
    }
  }
  if (label_idx < 0) {
    throw Error(ErrorKind::kData, "data", "missing label column '" + label_column + "'");
  }
  if (ds.columns.empty()) throw Error(ErrorKind::kData, "data", "no feature columns");

  const std::size_t d = ds.columns.size();
  std::vector<double> values;
  std::unordered_map<std::string, int> label_ids;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::Trim(line).empty()) continue;
    auto fields = detail::SplitFields(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::kData, "data",
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (static_cast<int>(c) == label_idx) {
        std::string key(fields[c]);
        auto [it, inserted] = label_ids.emplace(key, static_cast<int>(ds.class_names.size()));
        if (inserted) ds.class_names.push_back(key);
        ds.y.push_back(it->second);
        continue;
      }
      double v = 0.0;
      if (!detail::ParseDouble(fields[c], &v)) {
        throw Error(ErrorKind::kData, "data",
                    "line " + std::to_string(line_no) + ": non-numeric value '" +
                        std::string(fields[c]) + "' in column '" +
                        std::string(header[c]) + "'");
      }
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kNonFiniteValue, "data",
                    "line " + std::to_string(line_no) + ": non-finite value in column '" +
                        std::string(header[c]) + "'");
      }
      values.push_back(v);
    }
  }
  if (ds.y.empty()) throw Error(ErrorKind::kData, "data", "no data rows");
  const auto n = static_cast<Eigen::Index>(ds.y.size());
  ds.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, static_cast<Eigen::Index>(d));
  return ds;
}

inline Dataset LoadDataset(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "data", "cannot open dataset '" + path + "'");
  return ParseCsv(in, label_column);
}

// Per-column affine standardization fitted on training data.
struct Scaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  Eigen::MatrixXd Apply(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      out.col(c) = (x.col(c).array() - mean[c]) / stddev[c];
    }
    return out;
  }

  Eigen::MatrixXd Invert(const Eigen::MatrixXd& z) const {
    Eigen::MatrixXd out(z.rows(), z.cols());
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      out.col(c) = z.col(c).array() * stddev[c] + mean[c];
    }
    return out;
  }
};

// Constant columns get mean 0 and std 1, so they pass through unchanged.
inline Scaler FitScaler(const Eigen::MatrixXd& x) {
  Scaler s;
  const auto n = static_cast<double>(x.rows());
  s.mean.resize(x.cols());
  s.stddev.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    double mu = x.col(c).sum() / n;
    double var = (x.col(c).array() - mu).square().sum() / n;
    double sd = std::sqrt(var);
    if (sd <= 1e-12 * std::max(1.0, std::abs(mu))) {
      s.mean[c] = 0.0;
      s.stddev[c] = 1.0;
    } else {
      s.mean[c] = mu;
      s.stddev[c] = sd;
    }
  }
  return s;
}

inline std::pair<Scaler, Dataset> Standardize(const Dataset& train) {
  Scaler s = FitScaler(train.x);
  Dataset out = train;
  out.x = s.Apply(train.x);
  return {s, out};
}

struct BasisConfig {
  int degree = 2;
  bool homogeneous = false;
  bool include_bias = true;

  bool operator==(const BasisConfig&) const = default;
};

// Length of ExpandBasis output for a d-dimensional input.
inline int BasisSize(int d, const BasisConfig& cfg) {
  int size = 0;
  if (cfg.degree == 1 || !cfg.homogeneous) size += d;
  if (cfg.degree == 2) size += d * (d + 1) / 2;
  if (cfg.include_bias) size += 1;
  return size;
}

// Degree 1: identity. Degree 2 homogeneous: every x_a*x_b with a <= b in
// lexicographic order. Degree 2 non-homogeneous: the linear terms followed by
// the products. The bias, when requested, is last.
inline void ExpandBasisInto(std::span<const double> x, const BasisConfig& cfg,
                            double* out) {
  const std::size_t d = x.size();
  std::size_t k = 0;
  if (cfg.degree == 1 || !cfg.homogeneous) {
    for (std::size_t a = 0; a < d; ++a) out[k++] = x[a];
  }
  if (cfg.degree == 2) {
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) out[k++] = x[a] * x[b];
    }
  }
  if (cfg.include_bias) out[k++] = 1.0;
}

inline Eigen::VectorXd ExpandBasis(std::span<const double> x, const BasisConfig& cfg) {
  Eigen::VectorXd out(BasisSize(static_cast<int>(x.size()), cfg));
  ExpandBasisInto(x, cfg, out.data());
  return out;
}

// Row-wise expansion of an N x d matrix into N x BasisSize(d).
inline Eigen::MatrixXd ExpandRows(const Eigen::MatrixXd& x, const BasisConfig& cfg) {
  const int d = static_cast<int>(x.cols());
  const int b = BasisSize(d, cfg);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(x.rows(), b);
  std::vector<double> row(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int c = 0; c < d; ++c) row[static_cast<std::size_t>(c)] = x(i, c);
    ExpandBasisInto(row, cfg, out.row(i).data());
  }
  return out;
}

struct Split {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
  std::uint64_t seed = 0;

  bool operator==(const Split&) const = default;
};

// Deterministic shuffled partition; part sizes use largest remainders so each
// differs from n * fraction by less than one.
inline Split MakeSplit(int n, std::array<double, 3> fractions, std::uint64_t seed) {
  if (n < 3) throw Error(ErrorKind::kConfig, "data", "split needs at least 3 examples");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw Error(ErrorKind::kConfig, "data", "split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::kConfig, "data", "split fractions must sum to 1");
  }
  std::array<int, 3> sizes{};
  std::array<double, 3> rem{};
  int assigned = 0;
  for (int p = 0; p < 3; ++p) {
    double exact = n * fractions[static_cast<std::size_t>(p)];
    sizes[static_cast<std::size_t>(p)] = static_cast<int>(std::floor(exact));
    rem[static_cast<std::size_t>(p)] = exact - std::floor(exact);
    assigned += sizes[static_cast<std::size_t>(p)];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t p = 1; p < 3; ++p) {
      if (rem[p] > rem[best]) best = p;
    }
    ++sizes[best];
    rem[best] = -1.0;
    ++assigned;
  }

  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  // Fisher-Yates with an explicit draw so the permutation does not depend on
  // the standard library's distribution implementation.
  std::mt19937_64 rng(seed);
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    const std::uint64_t bound = i + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(perm[i], perm[static_cast<std::size_t>(r % bound)]);
  }

  Split s;
  s.seed = seed;
  auto it = perm.begin();
  s.train.assign(it, it + sizes[0]);
  it += sizes[0];
  s.val.assign(it, it + sizes[1]);
  it += sizes[1];
  s.test.assign(it, perm.end());
  return s;
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_DATA_HPP_
