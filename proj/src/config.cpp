#include "stickysim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace stickysim {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ValidationError("parameter '" + key + "': cannot parse '" + value + "' as " + what);
}

long to_long(const std::string& key, const std::string& text) {
  long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) bad_value(key, text, "an integer");
  return v;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) bad_value(key, text, "a number");
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, text, "a number");
  }
}

}  // namespace

ParamMap ConfigFile::for_experiment(const std::string& name) const {
  ParamMap out;
  if (auto it = sections.find(""); it != sections.end()) out = it->second;
  if (auto it = sections.find(name); it != sections.end()) {
    for (const auto& [k, v] : it->second) out[k] = v;
  }
  return out;
}

ConfigFile parse_config(std::istream& in) {
  ConfigFile cfg;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') {
        throw ValidationError("config line " + std::to_string(lineno) + ": unterminated section");
      }
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      if (section == "defaults") section.clear();
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(text).substr(0, eq));
    if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    cfg.sections[section][key] = trim(std::string_view(text).substr(eq + 1));
  }
  return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  return parse_config(in);
}

void apply_override(ParamMap& params, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("expected key=value, got '" + assignment + "'");
  }
  params[trim(std::string_view(assignment).substr(0, eq))] =
      trim(std::string_view(assignment).substr(eq + 1));
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(static_cast<int>(to_long("list", parts[0])));
      continue;
    }
    if (parts.size() > 3) throw ValidationError("bad range '" + item + "'");
    const long a = to_long("list", parts[0]);
    const long b = to_long("list", parts[1]);
    const long step = parts.size() == 3 ? to_long("list", parts[2]) : 1;
    if (step <= 0 || b < a) throw ValidationError("bad range '" + item + "'");
    for (long v = a; v <= b; v += step) out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ValidationError("empty list '" + text + "'");
  return out;
}

const std::string* ParamReader::find(const std::string& key) {
  auto it = params_.find(key);
  if (it == params_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

double ParamReader::get_double(const std::string& key, double fallback) {
  const auto* v = find(key);
  return v ? to_double(key, *v) : fallback;
}

long ParamReader::get_int(const std::string& key, long fallback) {
  const auto* v = find(key);
  return v ? to_long(key, *v) : fallback;
}

std::uint64_t ParamReader::get_u64(const std::string& key, std::uint64_t fallback) {
  const auto* v = find(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto* end = v->data() + v->size();
  auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, *v, "an unsigned integer");
  return out;
}

bool ParamReader::get_bool(const std::string& key, bool fallback) {
  const auto* v = find(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "no") return false;
  bad_value(key, *v, "a boolean");
}

std::string ParamReader::get_string(const std::string& key, const std::string& fallback) {
  const auto* v = find(key);
  return v ? *v : fallback;
}

Threshold ParamReader::get_threshold(const std::string& key, Threshold fallback) {
  const auto* v = find(key);
  if (!v) return fallback;
  if (*v == "inf" || *v == "infinity") return Threshold::infinite();
  return Threshold::finite(static_cast<int>(to_long(key, *v)));
}

std::vector<int> ParamReader::get_int_list(const std::string& key,
                                           const std::vector<int>& fallback) {
  const auto* v = find(key);
  return v ? parse_int_list(*v) : fallback;
}

std::vector<double> ParamReader::get_double_list(const std::string& key,
                                                 const std::vector<double>& fallback) {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split(*v, ',')) out.push_back(to_double(key, item));
  if (out.empty()) bad_value(key, *v, "a list of numbers");
  return out;
}

std::vector<std::size_t> ParamReader::get_count_list(const std::string& key, std::size_t n,
                                                     const std::vector<std::size_t>& fallback) {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<std::size_t> out;
  for (auto item : split(*v, ',')) {
    std::size_t scale = 1;
    if (!item.empty() && (item.back() == 'n' || item.back() == 'N')) {
      scale = n;
      item.pop_back();
    }
    const long count = to_long(key, item);
    if (count < 1) bad_value(key, *v, "a list of positive counts");
    out.push_back(static_cast<std::size_t>(count) * scale);
  }
  if (out.empty()) bad_value(key, *v, "a list of counts");
  return out;
}

void ParamReader::finish() const {
  std::vector<std::string> unused;
  for (const auto& [k, v] : params_) {
    if (!used_.count(k)) unused.push_back(k);
  }
  if (unused.empty()) return;
  std::string msg = "unknown parameter(s):";
  for (const auto& k : unused) msg += " " + k;
  throw ValidationError(msg);
}

}  // namespace stickysim
