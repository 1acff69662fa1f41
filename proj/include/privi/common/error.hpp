#pragma once

#include <stdexcept>
#include <string>

namespace privi {

// Precondition or shape violation by the caller. Maps to CLI exit code 2.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A stage input artifact is absent from the workspace.
class MissingArtifactError : public ContractError {
 public:
  using ContractError::ContractError;
};

// External model provider failed (timeout, connection, 5xx after retries).
// Work items stay pending. Maps to CLI exit code 3.
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A provider answered, but the payload violates the wire schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric fault: NaN/Inf in values or gradients.
class FaultError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractError(what);
}

}  // namespace privi
