// SPDX-License-Identifier: Apache-2.0
#include "delius/error.hpp"

namespace delius {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "config error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Degenerate: return "degenerate error";
  }
  return "error";
}

}  // namespace delius
