#include "gridres/kv_config.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "gridres/error.hpp"
#include "gridres/feeder.hpp"

namespace gridres {
namespace {

std::string_view trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  int line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(start, end - start);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      auto eq = line.find('=');
      if (eq == std::string_view::npos) throw DataError("expected 'key = value'", line_no);
      auto key = std::string(trim(line.substr(0, eq)));
      auto value = std::string(trim(line.substr(eq + 1)));
      if (key.empty()) throw DataError("empty key", line_no);
      if (!cfg.entries_.emplace(key, Entry{value, line_no}).second) {
        throw DataError(fmt::format("duplicate key '{}'", key), line_no);
      }
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  auto text = read_text_file(path);
  try {
    return parse(text);
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

const KeyValueConfig::Entry& KeyValueConfig::entry(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw DataError(fmt::format("missing key '{}'", key));
  used_[key] = true;
  return it->second;
}

const std::string& KeyValueConfig::raw(const std::string& key) const { return entry(key).value; }

double KeyValueConfig::get_double(const std::string& key) const {
  const auto& e = entry(key);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || ptr != e.value.data() + e.value.size() || !std::isfinite(v)) {
    throw DataError(fmt::format("'{}' expects a number, got '{}'", key, e.value), e.line);
  }
  return v;
}

int KeyValueConfig::get_int(const std::string& key) const {
  const auto& e = entry(key);
  int v = 0;
  auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || ptr != e.value.data() + e.value.size()) {
    throw DataError(fmt::format("'{}' expects an integer, got '{}'", key, e.value), e.line);
  }
  return v;
}

bool KeyValueConfig::get_bool(const std::string& key) const {
  const auto& e = entry(key);
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  throw DataError(fmt::format("'{}' expects true or false, got '{}'", key, e.value), e.line);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
  const auto& e = entry(key);
  std::vector<double> out;
  std::string_view rest = e.value;
  while (true) {
    auto comma = rest.find(',');
    auto tok = trim(rest.substr(0, comma));
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw DataError(fmt::format("'{}' expects a comma separated list of numbers", key), e.line);
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

void KeyValueConfig::require_all_used() const {
  auto unused = unused_keys();
  if (!unused.empty()) {
    const auto& e = entries_.at(unused.front());
    throw DataError(fmt::format("unknown key '{}'", unused.front()), e.line);
  }
}

std::string format_exact(double v) { return fmt::format("{}", v); }

double parse_exact(std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError(fmt::format("expected number, got '{}'", text));
  }
  return v;
}

}  // namespace gridres
