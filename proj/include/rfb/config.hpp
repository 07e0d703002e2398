// Run configuration: a flat `key = value` text format with dotted keys.
//
//   # comment
//   battery.T = 307
//   [operating]          # later bare keys are read as operating.<key>
//   W = 0.100            # L/min
//   initial_current = open_switch
//
// Every field carries a provenance flag so outputs never mix paper-given,
// calibrated and user-supplied values silently.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rfb/analysis.hpp"
#include "rfb/integrator.hpp"
#include "rfb/model.hpp"

namespace rfb {

class ConfigParseError : public std::runtime_error {
 public:
  ConfigParseError(const std::string& source, int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

class ConfigValidationError : public std::runtime_error {
 public:
  explicit ConfigValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

enum class Provenance { PaperDefault, CalibratedDefault, ToolDefault, UserSet };
std::string_view to_string(Provenance p);

struct RunConfig {
  RfbSystem system;
  OperatingCondition operating;
  IntegratorConfig integrator;
  ClassifierThresholds classifier;
  std::filesystem::path output_dir = "out";

  std::map<std::string, Provenance> provenance;  //!< one entry per key in config_keys()
  std::vector<std::string> warnings;

  std::vector<std::string> violations() const;
};

struct ConfigKey {
  std::string name;
  std::string unit;
  Provenance default_provenance;
  std::string description;
  std::function<void(RunConfig&, const std::string&)> set;  //!< throws std::invalid_argument
  std::function<std::string(const RunConfig&)> get;
};

/// Every accepted key, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// All defaults with their provenance; calibrated fields produce warnings.
RunConfig default_config();

/// Parses `text`; `source` names it in error messages. Validates the result.
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Sets one key as if it appeared in the file, marking it user-set. Throws
/// ConfigParseError (line 0) for unknown keys or unparsable values.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

/// Throws ConfigValidationError listing every violation.
void validate(const RunConfig& cfg);

}  // namespace rfb
