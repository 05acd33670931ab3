#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace tact {

/// Error with a machine-readable category ("io", "schema", "config",
/// "usage", "numeric", "client", "runtime"). The CLI prints
/// "error: <category>: <message>" as a single line and exits nonzero.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

inline Error io_error(const std::string& m) { return Error("io", m); }
inline Error schema_error(const std::string& m) { return Error("schema", m); }
inline Error config_error(const std::string& m) { return Error("config", m); }
inline Error usage_error(const std::string& m) { return Error("usage", m); }
inline Error numeric_error(const std::string& m) { return Error("numeric", m); }
inline Error client_error(const std::string& m) { return Error("client", m); }

}  // namespace tact
