#pragma once

// Flat key-value experiment configs with typed sections:
//
//   # comment
//   kind = msd-scan            top-level keys come before any section
//   [model]
//   alpha = 1.5                or: couplings = 1:1.0 2:0.25
//   beta = 1.0
//   h = 1.0 0.0
//   [grid]
//   n_list = 16 32 64 128 256
//   [mcmc]
//   sweeps = 22000
//   ...
//
// Lists are whitespace-separated. The config hash is FNV-1a 64 over the raw
// file bytes, so hash equality means byte equality.

#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "polychain/couplings.hpp"
#include "polychain/csv.hpp"
#include "polychain/util.hpp"

namespace polychain {

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class Config {
 public:
  static Config parse_string(std::string text) {
    Config cfg;
    cfg.raw_ = std::move(text);
    std::istringstream in(cfg.raw_);
    std::string line;
    std::string section;  // "" = top level
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash_pos = line.find('#');
      if (hash_pos != std::string::npos) line.erase(hash_pos);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']')
          throw std::invalid_argument(parse_error(line_no, "unterminated section header"));
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        if (section.empty())
          throw std::invalid_argument(parse_error(line_no, "empty section name"));
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument(parse_error(line_no, "expected 'key = value'"));
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw std::invalid_argument(parse_error(line_no, "empty key"));
      cfg.entries_[section][key] = value;
    }
    return cfg;
  }

  static Config parse_file(const std::filesystem::path& path) {
    return parse_string(read_file(path));
  }

  const std::string& raw() const { return raw_; }
  std::uint64_t hash() const { return fnv1a64(raw_); }
  std::string hash_hex() const { return hex64(hash()); }

  bool has(const std::string& section, const std::string& key) const {
    auto sit = entries_.find(section);
    return sit != entries_.end() && sit->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key) const {
    auto sit = entries_.find(section);
    if (sit == entries_.end() || sit->second.count(key) == 0)
      throw std::invalid_argument("config: missing required key '" + qualified(section, key) + "'");
    return sit->second.at(key);
  }

  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    return has(section, key) ? get_string(section, key) : fallback;
  }

  double get_real(const std::string& section, const std::string& key) const {
    return to_real(get_string(section, key), section, key);
  }

  double get_real_or(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? get_real(section, key) : fallback;
  }

  long get_int(const std::string& section, const std::string& key) const {
    return to_int(get_string(section, key), section, key);
  }

  long get_int_or(const std::string& section, const std::string& key, long fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
  }

  std::uint64_t get_u64_or(const std::string& section, const std::string& key,
                           std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get_string(section, key);
    try {
      std::size_t pos = 0;
      const std::uint64_t out = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return out;
    } catch (...) {
      throw std::invalid_argument("config: key '" + qualified(section, key) +
                                  "' is not an unsigned integer: " + v);
    }
  }

  bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get_string(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: key '" + qualified(section, key) +
                                "' is not a boolean: " + v);
  }

  std::vector<double> get_real_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const std::string& tok : tokens(get_string(section, key)))
      out.push_back(to_real(tok, section, key));
    if (out.empty())
      throw std::invalid_argument("config: key '" + qualified(section, key) + "' is empty");
    return out;
  }

  std::vector<int> get_int_list(const std::string& section, const std::string& key) const {
    std::vector<int> out;
    for (const std::string& tok : tokens(get_string(section, key)))
      out.push_back(static_cast<int>(to_int(tok, section, key)));
    if (out.empty())
      throw std::invalid_argument("config: key '" + qualified(section, key) + "' is empty");
    return out;
  }

  Vec2 get_vec2(const std::string& section, const std::string& key) const {
    const auto vals = get_real_list(section, key);
    if (vals.size() != 2)
      throw std::invalid_argument("config: key '" + qualified(section, key) +
                                  "' must have exactly two components");
    return {vals[0], vals[1]};
  }

  Vec2 get_vec2_or(const std::string& section, const std::string& key, Vec2 fallback) const {
    return has(section, key) ? get_vec2(section, key) : fallback;
  }

  // Either 'alpha = 1.5' (power law) or 'couplings = 1:1.0 2:0.25' (table).
  CouplingSpec get_couplings(const std::string& section) const {
    const bool has_alpha = has(section, "alpha");
    const bool has_table = has(section, "couplings");
    if (has_alpha == has_table)
      throw std::invalid_argument(
          "config: [" + section + "] needs exactly one of 'alpha' or 'couplings'");
    if (has_alpha) {
      const int cutoff = static_cast<int>(
          get_int_or(section, "max_distance", CouplingSpec::kNoCutoff));
      return CouplingSpec::power_law(get_real(section, "alpha"), cutoff);
    }
    std::map<int, double> table;
    for (const std::string& tok : tokens(get_string(section, "couplings"))) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("config: coupling entries must look like 'r:value', got " + tok);
      const int r = static_cast<int>(to_int(tok.substr(0, colon), section, "couplings"));
      const double v = to_real(tok.substr(colon + 1), section, "couplings");
      table[r] = v;
    }
    return CouplingSpec::explicit_table(std::move(table));
  }

 private:
  static std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  }

  static std::vector<std::string> tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
  }

  static std::string parse_error(int line, const std::string& what) {
    return "config parse error at line " + std::to_string(line) + ": " + what;
  }

  static std::string qualified(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
  }

  static double to_real(const std::string& v, const std::string& section, const std::string& key) {
    try {
      std::size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return out;
    } catch (...) {
      throw std::invalid_argument("config: key '" + qualified(section, key) +
                                  "' is not a real number: " + v);
    }
  }

  static long to_int(const std::string& v, const std::string& section, const std::string& key) {
    try {
      std::size_t pos = 0;
      const long out = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return out;
    } catch (...) {
      throw std::invalid_argument("config: key '" + qualified(section, key) +
                                  "' is not an integer: " + v);
    }
  }

  std::string raw_;
  std::map<std::string, std::map<std::string, std::string>> entries_;
};

}  // namespace polychain
