#pragma once

#include <stdexcept>
#include <string>

namespace ainr {

// Base for every error raised by the library. Callers that only care about
// "something failed" can catch this; the subclasses carry the category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes (or vector lengths) disagree with an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A value lies outside an operation's mathematical domain (log of a
// non-positive number, division by zero, non-finite result, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A caller broke a usage contract (non-scalar loss, second backward, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (WAV, model file).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// A training loop produced a NaN/Inf loss or gradient.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace ainr
