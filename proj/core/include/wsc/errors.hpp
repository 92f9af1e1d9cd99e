#pragma once

#include <stdexcept>
#include <string>

namespace wsc {

// Bad input: dims, degrees, die ids, gene vectors.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Faults left no path between two enabled dies.
class NoRouteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A stream group cannot be laid out as a one-hop chain.
class TopologyMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broken internal invariant (unrouted op, inconsistent plan).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Enumeration would exceed the configured cap.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config file problems. `field` names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace wsc
