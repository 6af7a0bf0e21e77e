#pragma once

// Plain-text experiment configuration:
//
//   # comment
//   [system]
//   antennas = 64
//   channel = los
//   [formats]
//   b-vp.vp_w = {M=7, f=[11,9,7,6]}
//
// Keys are addressed as "section.key".

#include <cmath>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "varpoint/error.hpp"
#include "varpoint/format_io.hpp"

namespace varpoint {

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text) {
    KeyValueConfig cfg;
    std::string section;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      std::string_view body = detail::trim(std::string_view(line).substr(0, hash));
      if (body.empty()) continue;
      if (body.front() == '[') {
        if (body.back() != ']') throw error(line_no, "unterminated section header");
        section = std::string(detail::trim(body.substr(1, body.size() - 2)));
        if (section.empty()) throw error(line_no, "empty section name");
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw error(line_no, "expected key = value");
      const std::string key(detail::trim(body.substr(0, eq)));
      if (key.empty()) throw error(line_no, "empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (!cfg.values_.emplace(full, std::string(detail::trim(body.substr(eq + 1)))).second) {
        throw error(line_no, "duplicate key '" + full + "'");
      }
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<long long> get_int(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    return detail::parse_integer(*v, key);
  }

  std::optional<double> get_double(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    return parse_double(*v, key);
  }

  std::optional<bool> get_bool(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("expected true/false for " + key + ", got '" + *v + "'");
  }

  /// "[a, b, c]" or "a, b, c".
  std::optional<std::vector<std::string>> get_list(const std::string& key) const {
    auto v = get(key);
    if (!v) return std::nullopt;
    std::string_view body = detail::trim(*v);
    if (!body.empty() && body.front() == '[') {
      if (body.back() != ']') throw ConfigError("unterminated list for " + key);
      body = body.substr(1, body.size() - 2);
    }
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= body.size()) {
      const auto comma = body.find(',', start);
      const auto item = detail::trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
      if (!item.empty()) out.emplace_back(item);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return out;
  }

  std::optional<FxpFormat> get_fxp(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    return parse_fxp_format(*v);
  }

  std::optional<VpFormat> get_vp(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    return parse_vp_format(*v);
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_) out.push_back(key);
    return out;
  }

  static double parse_double(std::string_view text, std::string_view what) {
    text = detail::trim(text);
    if (text == "inf" || text == "+inf") return HUGE_VAL;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end) {
      throw ConfigError("expected a number for " + std::string(what) + ", got '" + std::string(text) + "'");
    }
    return value;
  }

 private:
  static ConfigError error(int line, const std::string& what) {
    return ConfigError("config line " + std::to_string(line) + ": " + what);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace varpoint
