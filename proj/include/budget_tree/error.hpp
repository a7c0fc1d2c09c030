#ifndef BUDGET_TREE_ERROR_HPP_
#define BUDGET_TREE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace budget_tree {

enum class ErrorKind {
  kConfig,          // bad configuration or unreadable input file
  kData,            // malformed dataset contents
  kNonFiniteValue,  // NaN/Inf in a feature cell
  kDimension,       // mismatched sizes between collaborating objects
  kDivergence,      // optimizer produced a non-finite loss
  kAllSubsetsEmpty, // greedy search never accepted a sensor
  kModelMismatch,   // model file format/version not understood
  kSolver,          // LP not solved to optimality
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(module), detail_(what) {}

  ErrorKind kind() const { return kind_; }
  const std::string& module() const { return module_; }
  // Message without the module prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string detail_;
};

// Process exit code for the command-line tool.
inline int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kData:
    case ErrorKind::kNonFiniteValue:
      return 2;
    case ErrorKind::kAllSubsetsEmpty:
      return 3;
    case ErrorKind::kModelMismatch:
      return 4;
    case ErrorKind::kSolver:
      return 5;
    default:
      return 1;
  }
}

}  // namespace budget_tree

#endif  // BUDGET_TREE_ERROR_HPP_
