#include "util/ini.hpp"

#include <fstream>
#include <sstream>

#include "util/error.hpp"
#include "util/text.hpp"

namespace owc {

Ini Ini::parse_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

Ini Ini::parse_string(const std::string& text, const std::string& origin) {
  Ini ini;
  std::string section;
  int lineno = 0;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      require(line.back() == ']', ErrorCode::ParseError,
              origin + ":" + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::ParseError,
            origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorCode::ParseError,
            origin + ":" + std::to_string(lineno) + ": empty key");
    ini.values_[section.empty() ? key : section + "." + key] = value;
  }
  return ini;
}

bool Ini::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Ini::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Ini::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(it->second, key);
}

long Ini::get_long(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_long(it->second, key);
}

bool Ini::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  for (auto& c : v) c = static_cast<char>(std::tolower(c));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorCode::ParseError, "bad boolean for " + key + ": " + it->second);
}

std::vector<double> Ini::get_list(const std::string& key,
                                  const std::vector<double>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& part : split(it->second, ','))
    out.push_back(parse_double(part, key));
  return out;
}

void Ini::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

}  // namespace owc
