#pragma once
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace glmrot {

/** @brief One right-hand side of the TOML subset we accept. */
struct TomlValue {
  enum Type { String, Number, Bool, Array } type = Number;
  std::string str;
  double num = 0.0;
  bool integral = false;
  bool flag = false;
  std::vector<double> arr;
  int line = 0;
};

using TomlTable = std::map<std::string, TomlValue>;

/**
 * @brief Flat `key = value` files: strings, numbers, booleans, numeric
 * arrays (may span lines), comments. `[name]` headers prefix keys with "name.".
 * Throws ConfigError with the line number.
 */
TomlTable parse_toml(std::string_view text, const std::string& origin = "<input>");
TomlTable read_toml_file(const std::string& path);

/** @brief Parse the right-hand side of a `--set key=value` override. */
TomlValue parse_toml_value(std::string_view text, int line = 0);

/** @brief Shortest decimal that reads back to the same double; "nan", "inf", "-inf" otherwise. */
std::string format_double(double v);
double parse_double(std::string_view s);

/** @brief Write through a sibling temporary and rename; creates parent directories. */
void atomic_write(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace glmrot
