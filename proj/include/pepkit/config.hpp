#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pepkit/errors.hpp"

namespace pepkit {

// Flat `key = value` configuration with [section] headers; keys become
// "section.key". '#' and ';' start comments. Duplicate keys are errors.
class ConfigMap {
 public:
  ConfigMap() = default;
  static ConfigMap parse_file(const std::filesystem::path& path);
  static ConfigMap parse_text(std::string_view text, const std::string& origin);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string get_string(const std::string& key, std::string fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Throws config_error naming the first key outside `known`.
  void expect_keys(const std::vector<std::string>& known) const;

 private:
  std::map<std::string, std::string> entries_;
  std::string origin_ = "<none>";
};

}  // namespace pepkit
