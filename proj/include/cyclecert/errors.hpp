#pragma once

#include <stdexcept>
#include <string>

namespace cyclecert {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed case text. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, int line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    int line() const noexcept { return line_; }

  private:
    int line_;
};

/// Well-formed input that violates a model invariant (unknown bus, disconnected graph, ...).
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// |z_e| > 1 outside the clamping guard; the arcsin of the normalized flow is undefined.
class DomainError : public Error {
  public:
    DomainError(int edge, double value)
        : Error("normalized flow outside [-1, 1] on edge " + std::to_string(edge) + " (z = " +
                std::to_string(value) + ")"),
          edge_(edge), value_(value) {}

    int edge() const noexcept { return edge_; }
    double value() const noexcept { return value_; }

  private:
    int edge_;
    double value_;
};

/// A linear system that should be nonsingular was not (e.g. disconnected Laplacian).
class SolveError : public Error {
  public:
    using Error::Error;
};

/// Recovered angles do not reproduce the flows they were built from.
class ConsistencyError : public Error {
  public:
    using Error::Error;
};

}  // namespace cyclecert
