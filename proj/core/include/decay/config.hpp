#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace decay {

/// Flat key-value configuration with dotted section names, e.g.
///
///   model.kind = wave1d
///   feedback.name = power
///   feedback.p = 3
///   scheme.dt_rule = half_dx
///
/// '#' starts a comment; values are free text, numbers parsed as decimal
/// with scientific notation. Unknown keys are rejected by the CLI after the
/// relevant sections have been consumed.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value);

  /// Keys in deterministic (sorted) order, for manifests and hashing.
  std::string canonical_text() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace decay
