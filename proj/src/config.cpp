#include "wcp/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "wcp/errors.hpp"

namespace wcp {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) throw IoError("malformed config line: " + line);
    cfg.entries_[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string KeyValueConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw InvalidArgumentError("missing config key: " + key);
  return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : std::stod(it->second);
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : std::stoi(it->second);
}

uint64_t KeyValueConfig::get_u64(const std::string& key, uint64_t fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : std::stoull(it->second);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
  std::istringstream ss(get(key));
  std::vector<double> out;
  double v;
  while (ss >> v) out.push_back(v);
  return out;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash missing file: " + path);
  uint64_t h = 14695981039346656037ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void write_manifest(const std::map<std::string, std::string>& entries, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
}

}  // namespace wcp
