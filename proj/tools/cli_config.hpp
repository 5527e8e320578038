#pragma once

// Flat "section.key = value" run configuration backed by an INI property tree.

#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace simcim::cli {

/// Bad config key or value. The message always names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  std::string key;    // "section.name"
  std::string value;  // default, as text
  std::string help;
};

/// Every recognized key with its default, in manifest order.
const std::vector<ConfigKey>& config_keys();

class Config {
 public:
  Config();  // defaults

  /// Merges an INI file. Unknown keys are an error; a [seeds] section
  /// (written into manifests) is ignored since seeds derive from run.seed.
  void merge_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  std::string text(const std::string& key) const;
  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t seed(const std::string& key) const;
  bool flag(const std::string& key) const;
  /// Value must be one of `choices`.
  std::string choice(const std::string& key, const std::vector<std::string>& choices) const;

  /// Writes the configuration plus a [seeds] section.
  void write_manifest(const std::filesystem::path& path,
                      const std::map<std::string, std::uint64_t>& seeds) const;

  const boost::property_tree::ptree& tree() const noexcept { return tree_; }

 private:
  void require_known(const std::string& key) const;
  boost::property_tree::ptree tree_;
};

}  // namespace simcim::cli
