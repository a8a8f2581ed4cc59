#pragma once

#include "dexpush/geometry.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace dexpush {

/// Flat `key = value` text with `#` comments. Used for weights, optimizer
/// and training configs, object manifests and run manifests.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<stream>");
  static KeyValueConfig parse_string(const std::string& text, const std::string& source = "<string>");
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& source() const { return source_; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// Canonical text: sorted keys, one `key = value` per line.
  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
};

/// One line of a record file: `<kind> key=value key=value ...`.
struct Record {
  std::string kind;
  std::map<std::string, std::string> fields;
  int line = 0;

  bool has(const std::string& key) const { return fields.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  Vec3 get_vec3(const std::string& key) const;
  Vec3 get_vec3(const std::string& key, const Vec3& fallback) const;
};

std::vector<Record> parse_records(std::istream& in, const std::string& source = "<stream>");

/// Comma or whitespace separated numbers.
std::vector<double> parse_doubles(const std::string& text);
std::vector<std::string> split_list(const std::string& text);
std::string trim(const std::string& s);

}  // namespace dexpush
