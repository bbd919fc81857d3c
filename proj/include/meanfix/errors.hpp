#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace meanfix {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two operands live in different ℓ^p spaces.
class AmbientSpaceError : public Error {
 public:
  using Error::Error;
};

/// A point was handed to a map outside the set the map is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed parameters: bad multi-index, bad gauge, unsamplable domain, etc.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The monotone selection found a window with no admissible index.
class ExtractionError : public Error {
 public:
  ExtractionError(const std::string& what, std::size_t window_begin, std::size_t window_end)
      : Error(what), window_begin_(window_begin), window_end_(window_end) {}

  std::size_t window_begin() const noexcept { return window_begin_; }
  std::size_t window_end() const noexcept { return window_end_; }

 private:
  std::size_t window_begin_;
  std::size_t window_end_;
};

}  // namespace meanfix
