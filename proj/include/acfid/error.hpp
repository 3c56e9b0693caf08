#pragma once

#include <stdexcept>
#include <string>

namespace acfid {

enum class ErrorKind {
  InvalidParameter,
  Unsupported,
  DegenerateGap,
  NoNeighbor,
  OutOfStencil,
  Convergence,
  NonUnitary,
  IntegrationFailure,
  RefinementDiverged,
  FitFailure,
  AtomAtZero,
  Resource,
  Parse,
};

// Single exception type for the library; the kind decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

// 1 usage, 2 numerical failure, 3 resource cap.
int exit_code(ErrorKind kind) noexcept;

}  // namespace acfid
