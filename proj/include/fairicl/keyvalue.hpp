#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fairicl {

// One `key = value` line of a schema preset or experiment config.
struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// Parses `key = value` lines. Blank lines and lines starting with '#' are
// skipped, `[section]` headers prefix following keys as `section.key`, and a
// value wrapped in double quotes is unquoted. Throws ConfigError on a line
// without '='.
std::vector<KeyValue> parse_key_values(std::string_view text);

std::vector<std::string> split_list(std::string_view value, char separator = ',');
std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
std::string read_file(const std::string& path);

}  // namespace fairicl
