// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace kcgen {

/// Base for every error raised by the library. The CLI maps subclasses to
/// process exit codes (see exit_code()).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Malformed input record; message names the file and line.
class ParseError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// A cross-reference that should resolve does not (dangling ids, unclustered
/// KCs, zero Q-matrix rows).
class IntegrityError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Argument outside an operation's domain.
class DomainError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class TemplateError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class PrerequisiteError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Provider unreachable, HTTP failure, or an unreadable response envelope.
class TransportError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

/// LLM output that does not satisfy the expected JSON schema. Carries the raw
/// response so callers can log or re-prompt.
class StructuredOutputError : public Error {
 public:
  StructuredOutputError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }
  int exit_code() const noexcept override { return 4; }

 private:
  std::string raw_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 5; }
};

/// Metric undefined for the given input (e.g. AUC with a single class).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 5; }
};

}  // namespace kcgen
