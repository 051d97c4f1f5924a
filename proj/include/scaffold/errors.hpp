#pragma once

#include <stdexcept>
#include <string>

namespace scaffold {

// Invalid configuration value or unknown key. key() names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// A caller broke an operation precondition (e.g. stepping a finished episode).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Artifact on disk is missing or unreadable.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scaffold
