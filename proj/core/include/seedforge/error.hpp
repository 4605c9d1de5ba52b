#pragma once

#include <stdexcept>

namespace seedforge {

/// Base for all seedforge errors so callers can catch the whole family.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace seedforge
