#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "iidwb/icp.hpp"
#include "iidwb/regressor.hpp"
#include "iidwb/scm.hpp"

namespace iidwb {

enum class Method { iid, icp };

std::string to_string(Method m);
Method parse_method(const std::string& name);

struct ExperimentConfig {
  std::size_t num_dags = 50;
  GenConfig gen;
  std::vector<int> confounder_levels{0, 1, 2};
  std::vector<Method> methods{Method::iid, Method::icp};
  std::size_t samples_per_env = 2000;
  std::uint64_t master_seed = 0;
  bool observational_env = false;
  // Replace random DAGs by the fixed four-node example.
  bool fixed_example = false;
  TrainConfig train;
  IcpConfig icp;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const ExperimentConfig& cfg);

/// Parse error carrying the line number (0 when not tied to a line) and key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, std::string key, const std::string& message);
  std::size_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

/// Parses the flat `[section]` / `key = value` format. `#` and `;` start
/// comments. Missing keys keep their defaults; unknown sections or keys,
/// malformed values and duplicates are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Writes every key, with a comment per key when `commented` is set.
void write_config(std::ostream& out, const ExperimentConfig& cfg, bool commented = true);

struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
};

/// Every key in file order with its formatted value.
std::vector<ConfigEntry> config_entries(const ExperimentConfig& cfg);

/// Canonical key = value text, independent of comments.
std::string canonical_config(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace iidwb
