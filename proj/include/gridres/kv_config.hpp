#ifndef GRIDRES_KV_CONFIG_HPP_
#define GRIDRES_KV_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gridres {

// `key = value` text, `#` comments, blank lines ignored. Duplicate keys are
// rejected. Accessors throw DataError naming the key and its line.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::string& raw(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  // comma separated
  std::vector<double> get_doubles(const std::string& key) const;

  // keys that were never read through an accessor
  std::vector<std::string> unused_keys() const;
  void require_all_used() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry& entry(const std::string& key) const;

  std::map<std::string, Entry> entries_;
  mutable std::map<std::string, bool> used_;
};

// shortest decimal text that parses back to the same double
std::string format_exact(double v);
double parse_exact(std::string_view text);

}  // namespace gridres

#endif  // GRIDRES_KV_CONFIG_HPP_
