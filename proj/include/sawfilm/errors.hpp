#pragma once

#include <stdexcept>
#include <string>

namespace sawfilm {

// Invalid physical input (out-of-range fraction, unstable constants, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Malformed material database, config file or CSV.
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Partial-wave eigensystem is defective at this (omega, k).
class DegeneratePointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// The forward model found no surface mode, or could not evaluate a point.
class ModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NoModeError : public ModelError {
public:
  using ModelError::ModelError;
};

class SynthesisError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ExtractionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace sawfilm
