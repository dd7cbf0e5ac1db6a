#pragma once

#include <stdexcept>
#include <string>

namespace suitap {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad flags, bad configuration values. CLI exit code 1.
struct UsageError : Error {
  using Error::Error;
};

// Malformed or inconsistent input data (schema, catalogs, windows). CLI exit code 2.
struct DataError : Error {
  using Error::Error;
};

// Model capacity, field-width, or image-corruption failures. CLI exit code 3.
struct ModelError : Error {
  using Error::Error;
};

}  // namespace suitap
