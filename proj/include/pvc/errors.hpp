// Copyright 2026 The PVC Authors
// Error taxonomy shared by all modules.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pvc {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("i/o error: " + msg) {}
};

/// An operation received an input with no usable content.
class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& msg)
      : Error("empty input: " + msg) {}
};

/// A documented precondition was violated by the caller.
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& msg)
      : Error("contract violation: " + msg) {}
};

/// Malformed text input. Carries a 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line)
      : Error("parse error at line " + std::to_string(line) + ": " + msg),
        line_(line) {}
  explicit ParseError(const std::string& msg) : Error("parse error: " + msg) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

/// Structurally valid input that fails a semantic check.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg)
      : Error("validation error: " + msg) {}
};

/// Not enough data to carry out the requested estimation.
class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& msg)
      : Error("insufficient data: " + msg) {}
};

/// A required input artifact was not provided.
class MissingInputError : public Error {
 public:
  explicit MissingInputError(const std::string& msg)
      : Error("missing input: " + msg) {}
};

}  // namespace pvc
