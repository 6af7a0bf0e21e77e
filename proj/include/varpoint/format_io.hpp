#pragma once

// Text form of format descriptors:
//   fxp = {W=12, F=11}
//   vp  = {M=7, f=[11,9,7,6]}
// Exponent lists keep the order they were given in.

#include <algorithm>
#include <charconv>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "varpoint/error.hpp"
#include "varpoint/formats.hpp"

namespace varpoint {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline long long parse_integer(std::string_view text, std::string_view what) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  long long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError("expected an integer for " + std::string(what) + ", got '" + std::string(text) + "'");
  }
  return value;
}

inline std::vector<int> parse_int_list(std::string_view text, std::string_view what) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
    throw ConfigError("expected a bracketed list for " + std::string(what) + ", got '" + std::string(text) + "'");
  }
  text = trim(text.substr(1, text.size() - 2));
  std::vector<int> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(static_cast<int>(parse_integer(text.substr(start, comma - start), what)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Splits "{a=1, b=[1,2]}" into {a: "1", b: "[1,2]"}.
inline std::map<std::string, std::string, std::less<>> parse_braced_fields(std::string_view text) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '{' || text.back() != '}') {
    throw ConfigError("format descriptor must be enclosed in braces: '" + std::string(text) + "'");
  }
  text = text.substr(1, text.size() - 2);
  std::map<std::string, std::string, std::less<>> fields;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t pos = 0; pos <= text.size(); ++pos) {
    const char c = pos < text.size() ? text[pos] : ',';
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c != ',' || depth != 0) continue;
    const auto item = trim(text.substr(start, pos - start));
    start = pos + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key=value in '" + std::string(item) + "'");
    const auto key = std::string(trim(item.substr(0, eq)));
    if (!fields.emplace(key, std::string(trim(item.substr(eq + 1)))).second) {
      throw ConfigError("duplicate field '" + key + "'");
    }
  }
  return fields;
}

inline const std::string& required_field(const std::map<std::string, std::string, std::less<>>& fields,
                                         std::string_view key, std::string_view descriptor) {
  const auto it = fields.find(key);
  if (it == fields.end()) {
    throw ConfigError(std::string(descriptor) + " descriptor is missing field '" + std::string(key) + "'");
  }
  return it->second;
}

inline void reject_unknown(const std::map<std::string, std::string, std::less<>>& fields,
                           std::initializer_list<std::string_view> known, std::string_view descriptor) {
  for (const auto& [key, value] : fields) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown field '" + key + "' in " + std::string(descriptor) + " descriptor");
    }
  }
}

}  // namespace detail

inline std::string to_config_string(const FxpFormat& f) {
  return "{W=" + std::to_string(f.width()) + ", F=" + std::to_string(f.frac()) + "}";
}

inline std::string to_config_string(const VpFormat& f) {
  std::string s = "{M=" + std::to_string(f.significand_bits()) + ", f=[";
  for (int k = 0; k < f.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(f.exponent(k));
  }
  return s + "]}";
}

/// Parse errors throw ConfigError; out-of-range parameters throw FormatError.
inline FxpFormat parse_fxp_format(std::string_view text) {
  const auto fields = detail::parse_braced_fields(text);
  detail::reject_unknown(fields, {"W", "F"}, "FXP");
  const auto w = detail::parse_integer(detail::required_field(fields, "W", "FXP"), "W");
  const auto f = detail::parse_integer(detail::required_field(fields, "F", "FXP"), "F");
  return FxpFormat(static_cast<int>(w), static_cast<int>(f));
}

inline VpFormat parse_vp_format(std::string_view text) {
  const auto fields = detail::parse_braced_fields(text);
  detail::reject_unknown(fields, {"M", "f"}, "VP");
  const auto m = detail::parse_integer(detail::required_field(fields, "M", "VP"), "M");
  return VpFormat(static_cast<int>(m), detail::parse_int_list(detail::required_field(fields, "f", "VP"), "f"));
}

}  // namespace varpoint
