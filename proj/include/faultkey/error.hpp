#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace faultkey {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed `.bench` text, pattern file, transcript or key file.
class ParseError : public Error
{
public:
  ParseError( std::string message, std::size_t line = 0, std::size_t column = 0 );

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

/// Vector length does not match the circuit it is applied to.
class DimensionError : public Error
{
public:
  using Error::Error;
};

/// A locking transform cannot be applied to the given netlist.
class LockError : public Error
{
public:
  using Error::Error;
};

/// Stuck-at fault cannot be activated under the given constraints.
class ActivationConflict : public Error
{
public:
  using Error::Error;
};

/// Replayed oracle was asked a query that is not in its transcript.
class ReplayMiss : public Error
{
public:
  using Error::Error;
};

} // namespace faultkey
