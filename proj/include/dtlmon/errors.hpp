#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dtlmon {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A model violates a structural or stochastic invariant.
class ModelError : public Error {
public:
  using Error::Error;
};

/// The Bayes filter normalizer vanished: the observation is impossible under
/// the predicted belief.
class ZeroLikelihood : public Error {
public:
  ZeroLikelihood(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

/// Malformed formula text. `position()` is a byte offset into the input.
class SyntaxError : public Error {
public:
  SyntaxError(std::size_t position, std::size_t line, std::size_t column,
              const std::string& message)
      : Error("syntax error at line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + message),
        position_(position), line_(line), column_(column) {}

  std::size_t position() const noexcept { return position_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t position_;
  std::size_t line_;
  std::size_t column_;
};

class UnknownSymbol : public Error {
public:
  using Error::Error;
};

/// Negation (or an implication antecedent) wraps a temporal operator.
class NonAtomicNegation : public Error {
public:
  using Error::Error;
};

/// Determinization exceeded the configured state cap.
class StateBlowup : public Error {
public:
  using Error::Error;
};

/// Every initial state has zero smoothed weight: the execution cannot occur
/// under the model.
class AllZero : public Error {
public:
  using Error::Error;
};

class InconsistentState : public Error {
public:
  using Error::Error;
};

/// Path enumeration would exceed the configured cap.
class CapExceeded : public Error {
public:
  using Error::Error;
};

class DegeneratePearson : public Error {
public:
  using Error::Error;
};

/// A trace does not match its model (unknown names, inconsistent beliefs).
class TraceError : public Error {
public:
  using Error::Error;
};

} // namespace dtlmon
