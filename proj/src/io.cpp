#include "glmrot/io.hpp"

#include <unistd.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "glmrot/errors.hpp"

namespace glmrot {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

// strip a trailing comment that is not inside a string
std::string_view strip_comment(std::string_view s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

bool parse_number(std::string_view s, double& out, bool& integral) {
  std::string t;
  for (char c : s)
    if (c != '_') t.push_back(c);
  if (t.empty()) return false;
  if (t == "nan" || t == "+nan" || t == "-nan") {
    out = NAN;
    integral = false;
    return true;
  }
  if (t == "inf" || t == "+inf") {
    out = INFINITY;
    integral = false;
    return true;
  }
  if (t == "-inf") {
    out = -INFINITY;
    integral = false;
    return true;
  }
  const char* b = t.data();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size()) return false;
  integral = t.find_first_of(".eE") == std::string::npos;
  return true;
}

}  // namespace

TomlValue parse_toml_value(std::string_view text, int line) {
  std::string_view s = trim(text);
  TomlValue v;
  v.line = line;
  if (s.empty()) throw ConfigError("line " + std::to_string(line) + ": missing value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw ConfigError("line " + std::to_string(line) + ": unterminated string");
    v.type = TomlValue::String;
    std::string_view body = s.substr(1, s.size() - 2);
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '\\' && i + 1 < body.size()) {
        char c = body[++i];
        v.str.push_back(c == 'n' ? '\n' : c == 't' ? '\t' : c);
      } else {
        v.str.push_back(body[i]);
      }
    }
    return v;
  }
  if (s == "true" || s == "false") {
    v.type = TomlValue::Bool;
    v.flag = s == "true";
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError("line " + std::to_string(line) + ": unterminated array");
    v.type = TomlValue::Array;
    std::string_view body = trim(s.substr(1, s.size() - 2));
    while (!body.empty()) {
      std::size_t c = body.find(',');
      std::string_view item = trim(body.substr(0, c));
      if (!item.empty()) {
        double x;
        bool integral;
        if (!parse_number(item, x, integral))
          throw ConfigError("line " + std::to_string(line) + ": array entries must be numbers, got '" +
                            std::string(item) + "'");
        v.arr.push_back(x);
      }
      if (c == std::string_view::npos) break;
      body.remove_prefix(c + 1);
    }
    return v;
  }
  double x;
  bool integral;
  if (!parse_number(s, x, integral))
    throw ConfigError("line " + std::to_string(line) + ": cannot parse value '" + std::string(s) + "'");
  v.type = TomlValue::Number;
  v.num = x;
  v.integral = integral;
  v.str = std::string(s);
  return v;
}

TomlTable parse_toml(std::string_view text, const std::string& origin) {
  TomlTable table;
  std::string prefix;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[' && s.find('=') == std::string_view::npos) {
      if (s.back() != ']') fail(origin, lineno, "malformed table header");
      std::string_view name = trim(s.substr(1, s.size() - 2));
      if (name.empty()) fail(origin, lineno, "empty table name");
      prefix = std::string(name) + ".";
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string_view::npos) fail(origin, lineno, "expected key = value");
    std::string key = std::string(trim(s.substr(0, eq)));
    if (key.empty()) fail(origin, lineno, "empty key");
    for (char c : key)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
        fail(origin, lineno, "invalid key '" + key + "'");
    std::string rhs = std::string(trim(s.substr(eq + 1)));
    const int start = lineno;
    // arrays may continue over several lines
    if (!rhs.empty() && rhs.front() == '[') {
      while (rhs.find(']') == std::string::npos) {
        if (!std::getline(in, raw)) fail(origin, start, "unterminated array for '" + key + "'");
        ++lineno;
        rhs += " ";
        rhs += std::string(trim(strip_comment(raw)));
      }
    }
    std::string full = prefix + key;
    if (table.count(full)) fail(origin, start, "duplicate key '" + full + "'");
    try {
      table[full] = parse_toml_value(rhs, start);
    } catch (const ConfigError& e) {
      fail(origin, start, "field '" + full + "': " + e.what());
    }
  }
  return table;
}

TomlTable read_toml_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_toml(ss.str(), path);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double parse_double(std::string_view s) {
  s = trim(s);
  double x;
  bool integral;
  if (!parse_number(s, x, integral)) throw ConfigError("not a number: '" + std::string(s) + "'");
  return x;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot move output into place at '" + path + "': " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    std::size_t c = line.find(',', start);
    out.emplace_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

}  // namespace glmrot
