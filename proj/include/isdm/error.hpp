#pragma once

#include <stdexcept>
#include <string>

namespace isdm {

// Argument outside the domain of an operation (bad delta, mismatched supports,
// malformed instance). The CLI maps this to exit status 2.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// An enumeration (transcripts, policies) would exceed its configured cap.
// The CLI maps this to exit status 3.
class CapExceeded : public std::length_error {
 public:
  explicit CapExceeded(const std::string& what) : std::length_error(what) {}
};

// A numerical routine failed to reach its stated accuracy.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DomainError(message);
}

}  // namespace isdm
