#pragma once

#include <stdexcept>
#include <string>

namespace stfem {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateElement : public Error {
 public:
  DegenerateElement(int element, const std::string& what)
      : Error(what), element_(element) {}
  int element() const noexcept { return element_; }

 private:
  int element_;
};

/// A twisted extrusion produced an element whose orientation flipped.
class InvertedElement : public Error {
 public:
  InvertedElement(int element, int level, const std::string& what)
      : Error(what), element_(element), level_(level) {}
  int element() const noexcept { return element_; }
  int level() const noexcept { return level_; }

 private:
  int element_;
  int level_;
};

class MeshTopologyError : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class UnsupportedRule : public Error {
 public:
  using Error::Error;
};

class NonFiniteTau : public Error {
 public:
  using Error::Error;
};

class ZeroDenominator : public Error {
 public:
  using Error::Error;
};

class NonFiniteResidual : public Error {
 public:
  using Error::Error;
};

class MissingPreviousState : public Error {
 public:
  using Error::Error;
};

/// Inconsistent scenario setup (overlapping boundary tags, bad dimensions, ...).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class LinearSolveFailure : public Error {
 public:
  using Error::Error;
};

class EmptySlice : public Error {
 public:
  using Error::Error;
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class UnknownKey : public ParseError {
 public:
  UnknownKey(int line, const std::string& key)
      : ParseError(line, "unknown key '" + key + "'"), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace stfem
