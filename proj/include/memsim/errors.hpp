#pragma once

#include <stdexcept>
#include <string>

namespace memsim {

// Malformed input: torn records, bad magic, bad CSV, bad config schema.
class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid input that violates a contract (bad split point,
// overlapping regions, inconsistent cache geometry, ...).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class SimulationError : public std::runtime_error {
public:
  explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace memsim
