// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace delius {

enum class ErrorKind {
  Config,      // invalid parameters or unsatisfied preconditions
  Io,          // file could not be opened, read or written
  Format,      // malformed on-disk content
  Data,        // well-formed input with unusable values (NaN, missing labels, ...)
  Shape,       // dimension mismatch between operands
  Numeric,     // non-finite loss / gradient during optimization
  Degenerate,  // collapsed centroids or clusters
};

const char* to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace delius
