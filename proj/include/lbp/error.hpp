#pragma once

#include <stdexcept>
#include <string>

namespace lbp {

// Parameter outside the documented domain of an operation.
class InvalidParameter : public std::invalid_argument {
 public:
  explicit InvalidParameter(const std::string& what) : std::invalid_argument(what) {}
};

// Operation not defined for this variant (e.g. tail function of an explicit pmf).
class UnsupportedOperation : public std::logic_error {
 public:
  explicit UnsupportedOperation(const std::string& what) : std::logic_error(what) {}
};

// Problem size beyond what a dense routine accepts.
class UnsupportedSize : public std::length_error {
 public:
  explicit UnsupportedSize(const std::string& what) : std::length_error(what) {}
};

// Attempt to step an extinct population.
class AbsorbingState : public std::runtime_error {
 public:
  explicit AbsorbingState(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lbp
