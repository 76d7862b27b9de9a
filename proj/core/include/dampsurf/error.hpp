#pragma once

#include <stdexcept>
#include <string>

namespace dampsurf {

/// Raised when an input violates a domain precondition (bad mesh, invalid
/// parameter, failed solve). The CLI maps it to exit code 1.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MeshError : public DomainError {
 public:
  using DomainError::DomainError;
};

class SolverError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace dampsurf
