#pragma once

#include <stdexcept>
#include <string>

namespace ppgad {

// Root of every error the library throws. The CLI maps each subclass to a
// distinct exit code (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or an inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that makes the requested computation meaningless
// (constant signal, zero variance).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Missing files, malformed records, count mismatches, non-finite samples.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// A fit could not be carried out (too few samples, zero variance).
class FitError : public Error {
 public:
  using Error::Error;
};

// An evaluation could not be scored (empty class, unmet protocol needs).
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Caller broke an interface contract: shape or dimension mismatch.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace ppgad
