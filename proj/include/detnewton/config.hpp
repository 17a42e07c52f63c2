#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "detnewton/errors.hpp"

namespace detnewton {

/// One `[name arg]` section of a config file: flat key = value pairs.
/// Typed getters mark keys as consumed; finish() rejects leftovers so
/// typos surface as errors with their line number.
class ConfigSection {
 public:
  std::string name;
  std::string arg;
  int line = 0;

  void set(const std::string& key, const std::string& value, int line_no);
  bool has(const std::string& key) const;

  std::optional<std::string> get_string(const std::string& key) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> get_double_opt(const std::string& key) const;
  double require_double(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t require_u64(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Whitespace-separated doubles.
  std::vector<double> get_double_list(const std::string& key) const;
  /// Integer list; "a:b" expands to the inclusive range.
  std::vector<int> get_int_list(const std::string& key) const;

  /// Throws ConfigError naming any key that no getter consumed.
  void finish() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry& require(const std::string& key) const;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> consumed_;
};

struct ConfigFile {
  std::vector<ConfigSection> sections;

  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text);

  const ConfigSection* find(const std::string& name) const;
  const ConfigSection& require(const std::string& name) const;
  std::vector<const ConfigSection*> all(const std::string& name) const;
};

}  // namespace detnewton
