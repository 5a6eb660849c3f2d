#pragma once

// Flat key = value configuration with includes.
//
//   # comment
//   include base.cfg        (relative to the including file)
//   model.width = 512
//
// Every key must be declared in the schema; later assignments override
// earlier ones, command-line overrides win over files.

#include <map>
#include <string>
#include <vector>

#include "intertraj/core/error.hpp"

namespace intertraj {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

// All known keys with their defaults.
const std::vector<ConfigKey>& config_schema();

class Config {
 public:
  // Schema defaults.
  Config();

  static Config load(const std::string& path);
  static Config parse(const std::string& text, const std::string& origin = "<string>");

  // Applies `key=value`; throws InvalidArgument on unknown keys.
  void set(const std::string& key, const std::string& value);
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& str(const std::string& key) const;
  long integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<long> integers(const std::string& key) const;

  // Canonical text: every key in schema order, one per line.
  std::string serialize() const;
  // FNV-1a of serialize(), as 16 hex digits.
  std::string hash() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  void parse_into(const std::string& text, const std::string& origin, const std::string& base_dir, int depth);

  std::map<std::string, std::string> values_;
};

}  // namespace intertraj
