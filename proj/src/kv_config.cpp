#include "dexpush/kv_config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace dexpush {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  for (const auto& tok : split_list(text)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw std::runtime_error("not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
  KeyValueConfig cfg;
  cfg.source_ = source;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) eq = body.find(':');
    if (eq == std::string::npos)
      throw std::runtime_error(source + ":" + std::to_string(line) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw std::runtime_error(source + ":" + std::to_string(line) + ": empty key");
    cfg.values_[key] = trim(body.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  return parse(in, source);
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse(in, path);
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::runtime_error(source_ + ": missing key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const auto v = parse_doubles(get_string(key));
  if (v.size() != 1) throw std::runtime_error(source_ + ": key '" + key + "' must hold one number");
  return v[0];
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key) const {
  const std::string s = get_string(key);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw std::runtime_error(source_ + ": key '" + key + "' must be an integer");
  return v;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_string(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::runtime_error(source_ + ": key '" + key + "' must be a boolean");
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const { return parse_doubles(get_string(key)); }

std::vector<std::string> KeyValueConfig::get_strings(const std::string& key) const {
  return split_list(get_string(key));
}

std::string KeyValueConfig::serialize() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

const std::string& Record::get(const std::string& key) const {
  auto it = fields.find(key);
  if (it == fields.end())
    throw std::runtime_error("line " + std::to_string(line) + ": '" + kind + "' record needs field '" + key + "'");
  return it->second;
}

double Record::get_double(const std::string& key) const {
  const auto v = parse_doubles(get(key));
  if (v.size() != 1) throw std::runtime_error("line " + std::to_string(line) + ": field '" + key + "' needs one number");
  return v[0];
}

double Record::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Record::get_int(const std::string& key, int fallback) const {
  return has(key) ? int(get_double(key)) : fallback;
}

Vec3 Record::get_vec3(const std::string& key) const {
  const auto v = parse_doubles(get(key));
  if (v.size() != 3) throw std::runtime_error("line " + std::to_string(line) + ": field '" + key + "' needs 3 numbers");
  return {v[0], v[1], v[2]};
}

Vec3 Record::get_vec3(const std::string& key, const Vec3& fallback) const {
  return has(key) ? get_vec3(key) : fallback;
}

std::vector<Record> parse_records(std::istream& in, const std::string& source) {
  std::vector<Record> out;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    std::istringstream ls(body);
    Record rec;
    rec.line = line;
    ls >> rec.kind;
    for (std::string tok; ls >> tok;) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0)
        throw std::runtime_error(source + ":" + std::to_string(line) + ": expected key=value, got '" + tok + "'");
      rec.fields[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace dexpush
