#include "detnewton/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace detnewton {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void ConfigSection::set(const std::string& key, const std::string& value,
                        int line_no) {
  if (entries_.count(key)) {
    throw ConfigError("duplicate key '" + key + "' in section [" + name + "]",
                      line_no);
  }
  entries_[key] = {value, line_no};
}

bool ConfigSection::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

const ConfigSection::Entry& ConfigSection::require(
    const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw ConfigError("missing key '" + key + "' in section [" + name +
                          (arg.empty() ? "" : " " + arg) + "]",
                      line);
  }
  consumed_.insert(key);
  return it->second;
}

std::optional<std::string> ConfigSection::get_string(
    const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  consumed_.insert(key);
  return it->second.value;
}

std::string ConfigSection::require_string(const std::string& key) const {
  return require(key).value;
}

double ConfigSection::get_double(const std::string& key,
                                 double fallback) const {
  const auto v = get_double_opt(key);
  return v ? *v : fallback;
}

std::optional<double> ConfigSection::get_double_opt(
    const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  consumed_.insert(key);
  char* end = nullptr;
  const double v = std::strtod(it->second.value.c_str(), &end);
  if (end == it->second.value.c_str() || *end != '\0') {
    throw ConfigError("key '" + key + "': cannot parse '" + it->second.value +
                          "' as a number",
                      it->second.line);
  }
  return v;
}

double ConfigSection::require_double(const std::string& key) const {
  require(key);
  return *get_double_opt(key);
}

int ConfigSection::get_int(const std::string& key, int fallback) const {
  const auto v = get_double_opt(key);
  if (!v) return fallback;
  const int i = static_cast<int>(*v);
  if (static_cast<double>(i) != *v) {
    throw ConfigError("key '" + key + "': expected an integer", line);
  }
  return i;
}

std::uint64_t ConfigSection::require_u64(const std::string& key) const {
  const Entry& e = require(key);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(e.value.c_str(), &end, 10);
  if (end == e.value.c_str() || *end != '\0') {
    throw ConfigError("key '" + key + "': cannot parse '" + e.value +
                          "' as an unsigned integer",
                      e.line);
  }
  return v;
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) const {
  const auto v = get_string(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("key '" + key + "': expected a boolean", line);
}

std::vector<double> ConfigSection::get_double_list(
    const std::string& key) const {
  const auto raw = get_string(key);
  std::vector<double> out;
  if (!raw) return out;
  std::stringstream ss(*raw);
  std::string tok;
  while (ss >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
      throw ConfigError("key '" + key + "': cannot parse '" + tok + "'", line);
    }
    out.push_back(v);
  }
  return out;
}

std::vector<int> ConfigSection::get_int_list(const std::string& key) const {
  const auto raw = get_string(key);
  std::vector<int> out;
  if (!raw) return out;
  std::stringstream ss(*raw);
  std::string tok;
  while (ss >> tok) {
    const auto colon = tok.find(':');
    if (colon != std::string::npos) {
      const int a = std::atoi(tok.substr(0, colon).c_str());
      const int b = std::atoi(tok.substr(colon + 1).c_str());
      if (b < a) {
        throw ConfigError("key '" + key + "': bad range '" + tok + "'", line);
      }
      for (int v = a; v <= b; ++v) out.push_back(v);
    } else {
      out.push_back(std::atoi(tok.c_str()));
    }
  }
  return out;
}

void ConfigSection::finish() const {
  for (const auto& [key, entry] : entries_) {
    if (!consumed_.count(key)) {
      throw ConfigError("unknown key '" + key + "' in section [" + name +
                            (arg.empty() ? "" : " " + arg) + "]",
                        entry.line);
    }
  }
}

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile out;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  ConfigSection* current = nullptr;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ConfigError("unterminated section header '" + t + "'", line_no);
      }
      const std::string inner = trim(t.substr(1, t.size() - 2));
      ConfigSection section;
      const auto space = inner.find_first_of(" \t");
      if (space == std::string::npos) {
        section.name = inner;
      } else {
        section.name = inner.substr(0, space);
        section.arg = trim(inner.substr(space + 1));
      }
      if (section.name.empty()) {
        throw ConfigError("empty section name", line_no);
      }
      section.line = line_no;
      out.sections.push_back(std::move(section));
      current = &out.sections.back();
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value', got '" + t + "'", line_no);
    }
    if (!current) {
      throw ConfigError("key outside any section", line_no);
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    current->set(key, value, line_no);
  }
  return out;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

const ConfigSection* ConfigFile::find(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const ConfigSection& ConfigFile::require(const std::string& name) const {
  const ConfigSection* s = find(name);
  if (!s) throw ConfigError("missing required section [" + name + "]");
  return *s;
}

std::vector<const ConfigSection*> ConfigFile::all(
    const std::string& name) const {
  std::vector<const ConfigSection*> out;
  for (const auto& s : sections) {
    if (s.name == name) out.push_back(&s);
  }
  return out;
}

}  // namespace detnewton
