// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pucci {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid geometry, kernel, or problem parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A quadrature or operator evaluation produced a non-finite value.
class NonFiniteResult : public Error {
 public:
  using Error::Error;
};

/// Per-node operator failure; carries the interior node index.
class NodeError : public Error {
 public:
  NodeError(std::size_t node, const std::string& what)
      : Error("node " + std::to_string(node) + ": " + what), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

/// Iterative solver hit its iteration limit. The residual history is attached.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// Explicit iteration diverging (residual growth or non-finite values).
class Instability : public Error {
 public:
  Instability(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// No node carries a positive weight a(x) > 0.
class EmptyPositivitySet : public Error {
 public:
  using Error::Error;
};

/// Threshold search bracket does not contain a sign change.
class BracketFailure : public Error {
 public:
  using Error::Error;
};

/// Threshold ladder is not strictly decreasing (indicates a solver fault).
class MonotonicityViolation : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

/// Scenario configuration error with the offending key and, when known, line.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, int line, const std::string& what)
      : Error(format(key, line, what)), key_(key), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& key, int line, const std::string& what) {
    std::string out = "config";
    if (line > 0) out += ":" + std::to_string(line);
    if (!key.empty()) out += " [" + key + "]";
    return out + ": " + what;
  }
  std::string key_;
  int line_;
};

}  // namespace pucci
