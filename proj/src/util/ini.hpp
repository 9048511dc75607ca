#ifndef OWC_UTIL_INI_HPP
#define OWC_UTIL_INI_HPP

#include <map>
#include <string>
#include <vector>

namespace owc {

// Minimal INI reader: [section] headers, key = value lines, '#' or ';'
// comments. Lookups are "section.key".
class Ini {
public:
  Ini() = default;

  static Ini parse_file(const std::string& path);
  static Ini parse_string(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // comma-separated list of numbers
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const;

  void set(const std::string& key, const std::string& value);

private:
  std::map<std::string, std::string> values_;
};

}  // namespace owc

#endif
