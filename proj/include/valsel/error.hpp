#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace valsel {

// Malformed or inconsistent data (bad file, schema mismatch, empty input).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that is well-formed but uses a construct this toolkit does not read.
class UnsupportedFeatureError : public DataError {
 public:
  using DataError::DataError;
};

// Invalid parameters (out-of-range epsilon, unknown method, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(std::string_view)>;

// Warnings go to stderr unless a handler is installed. Returns the previous one.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace valsel
