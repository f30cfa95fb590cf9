#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace instret {

/// Input or configuration that violates a documented contract.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A malformed record in a text or binary input. `line()` is 1-based for
/// line-oriented formats and a byte offset for binary ones.
class ParseError : public ValidationError {
  public:
    enum class Location { Line, ByteOffset };

    ParseError(std::size_t line, std::string field, const std::string& message, Location location = Location::Line);

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }
    Location location() const noexcept { return location_; }

  private:
    std::size_t line_;
    std::string field_;
    Location location_;
};

/// An LM backend that could not produce a response (transport, HTTP status,
/// retries exhausted, or a mock table without a matching row).
class BackendError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace instret
