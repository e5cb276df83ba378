#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wcp {

// key=value text config. Lines starting with '#' and blank lines are
// ignored; later keys override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;  // space-separated

  void set(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// FNV-1a 64-bit over a file's bytes, hex-encoded.
std::string file_hash(const std::string& path);

// Run manifest: sorted key=value lines, enough to reproduce a CLI run
// (flags, seed, input hashes).
void write_manifest(const std::map<std::string, std::string>& entries, const std::string& path);

}  // namespace wcp
