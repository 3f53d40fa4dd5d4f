#pragma once

#include <stdexcept>
#include <string>

namespace adahi {

// Precondition / dimension violations. These indicate caller bugs, not
// recoverable runtime conditions.
class ContractError : public std::logic_error {
  public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class CalibrationError : public std::runtime_error {
  public:
    explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

class ProtocolError : public std::runtime_error {
  public:
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

class TransportError : public std::runtime_error {
  public:
    enum class Kind { timeout, connection, http_status, fallback };

    TransportError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

}  // namespace adahi
