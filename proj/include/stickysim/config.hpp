#pragma once

// Key-value configuration: `key = value` lines, `#` comments, `[section]`
// headers. Keys above the first header (or under [defaults]) apply to every
// experiment; a section named after an experiment applies to it alone.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stickysim/core.hpp"

namespace stickysim {

using ParamMap = std::map<std::string, std::string>;

struct ConfigFile {
  std::map<std::string, ParamMap> sections;  // "" holds the defaults

  /// Defaults overlaid with the experiment's own section.
  [[nodiscard]] ParamMap for_experiment(const std::string& name) const;
};

/// Throws ValidationError on malformed lines, with the line number.
ConfigFile parse_config(std::istream& in);
ConfigFile load_config(const std::filesystem::path& path);

/// Parses "k=v" into map[k] = v. Throws ValidationError without '='.
void apply_override(ParamMap& params, const std::string& assignment);

/// Typed, tracked access to a ParamMap. Every key must be consumed:
/// finish() rejects leftovers so misspelled keys do not pass silently.
class ParamReader {
 public:
  explicit ParamReader(ParamMap params) : params_(std::move(params)) {}

  double get_double(const std::string& key, double fallback);
  long get_int(const std::string& key, long fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::string get_string(const std::string& key, const std::string& fallback);
  /// Integer or "inf".
  Threshold get_threshold(const std::string& key, Threshold fallback);
  /// Comma list of integers and `a:b` or `a:b:step` ranges.
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback);
  std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback);
  /// Comma list whose items may carry an `n` suffix meaning "times n"
  /// (e.g. "2n,5n,5000").
  std::vector<std::size_t> get_count_list(const std::string& key, std::size_t n,
                                          const std::vector<std::size_t>& fallback);

  [[nodiscard]] bool has(const std::string& key) const { return params_.count(key) > 0; }

  /// Throws ValidationError naming any unread keys.
  void finish() const;

 private:
  const std::string* find(const std::string& key);

  ParamMap params_;
  std::set<std::string> used_;
};

std::vector<int> parse_int_list(const std::string& text);

}  // namespace stickysim
