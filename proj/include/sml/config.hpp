#pragma once
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <complex>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "sml/errors.hpp"
#include "sml/model_operators.hpp"

namespace sml {

// `key = value` lines under `[section]` headers; keys are addressed as "section.key".
class Config {
 public:
  Config() = default;

  static Config from_string(const std::string& text) {
    Config c;
    std::istringstream is(text);
    try {
      boost::property_tree::ini_parser::read_ini(is, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ParseError(std::string("config: ") + e.what());
    }
    return c;
  }

  static Config from_file(const std::filesystem::path& path) {
    Config c;
    try {
      boost::property_tree::ini_parser::read_ini(path.string(), c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ParseError(std::string("config: ") + e.what());
    }
    return c;
  }

  bool has(const std::string& key) const { return bool(tree_.get_optional<std::string>(key)); }

  std::string str(const std::string& key, const std::string& def = "") const {
    auto v = tree_.get_optional<std::string>(key);
    return v ? trim(*v) : def;
  }

  double num(const std::string& key, double def) const { return has(key) ? parse_double(str(key), key) : def; }

  int integer(const std::string& key, int def) const {
    if (!has(key)) return def;
    const double v = num(key, def);
    if (v != std::floor(v)) throw ParseError("config key '" + key + "' must be an integer");
    return int(v);
  }

  std::uint64_t u64(const std::string& key, std::uint64_t def) const {
    if (!has(key)) return def;
    try {
      return std::stoull(str(key), nullptr, 0);
    } catch (const std::exception&) {
      throw ParseError("config key '" + key + "' must be an unsigned integer");
    }
  }

  bool flag(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError("config key '" + key + "' must be a boolean");
  }

  std::vector<double> nums(const std::string& key, std::vector<double> def = {}) const {
    if (!has(key)) return def;
    std::vector<double> out;
    for (const auto& item : split(str(key))) out.push_back(parse_double(item, key));
    return out;
  }

  std::vector<int> ints(const std::string& key, std::vector<int> def = {}) const {
    if (!has(key)) return def;
    std::vector<int> out;
    for (double v : nums(key)) {
      if (v != std::floor(v)) throw ParseError("config key '" + key + "' must hold integers");
      out.push_back(int(v));
    }
    return out;
  }

  // "a:b:n" gives a log grid, otherwise a comma list.
  std::vector<double> grid(const std::string& key, std::vector<double> def = {}) const {
    if (!has(key)) return def;
    const std::string v = str(key);
    if (v.find(':') != std::string::npos) {
      std::vector<std::string> parts;
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ':')) parts.push_back(trim(item));
      if (parts.size() != 3) throw ParseError("config key '" + key + "' must be a:b:count");
      const double n = parse_double(parts[2], key);
      if (n < 1 || n != std::floor(n)) throw ParseError("config key '" + key + "' needs an integer count");
      return log_grid(parse_double(parts[0], key), parse_double(parts[1], key), int(n));
    }
    return nums(key);
  }

  // Sorted key = value dump, for provenance.
  std::string canonical() const {
    std::vector<std::string> lines;
    for (const auto& [sec, sub] : tree_) {
      if (sub.empty()) lines.push_back(sec + "=" + trim(sub.data()));
      for (const auto& [k, v] : sub) lines.push_back(sec + "." + k + "=" + trim(v.data()));
    }
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines) out += (out.empty() ? "" : ";") + l;
    return out;
  }

  void set(const std::string& key, const std::string& value) { tree_.put(key, value); }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t\r\n") - a + 1);
  }
  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!trim(item).empty()) out.push_back(trim(item));
    return out;
  }
  static double parse_double(const std::string& s, const std::string& key) {
    const std::string v = trim(s);
    if (v == "inf" || v == "infinity") return kInf;
    if (v == "-inf") return -kInf;
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw ParseError("");
      return d;
    } catch (const std::exception&) {
      throw ParseError("config key '" + key + "' has a non-numeric value '" + v + "'");
    }
  }

  boost::property_tree::ptree tree_;
};

inline ModelSpec model_spec_from(const Config& c, const std::string& sec = "model") {
  ModelSpec s;
  const std::string k = sec + ".";
  s.family = c.str(k + "family", s.family);
  s.sizes = c.ints(k + "sizes", s.sizes);
  s.boundary = c.str(k + "boundary", s.boundary);
  s.symbol = c.str(k + "symbol", s.symbol);
  s.symbol_mode = c.str(k + "symbol_mode", s.symbol_mode);
  s.period = c.num(k + "period", s.period);
  s.potential = c.str(k + "potential", s.potential);
  s.potential_mass = c.num(k + "potential_mass", s.potential_mass);
  s.potential_sigma = c.num(k + "potential_sigma", s.potential_sigma);
  s.bilaplacian_symbol = c.str(k + "bilaplacian_symbol", s.bilaplacian_symbol);
  s.level = c.integer(k + "level", s.level);
  s.metric = c.str(k + "metric", s.metric);
  s.seed = c.u64(k + "seed", s.seed);
  return s;
}

inline std::string describe(const ModelSpec& s) {
  std::ostringstream os;
  os << "family=" << s.family << ";sizes=";
  for (std::size_t i = 0; i < s.sizes.size(); ++i) os << (i ? "x" : "") << s.sizes[i];
  if (s.family == "path_laplacian" || s.family == "grid_laplacian") os << ";boundary=" << s.boundary;
  if (s.family == "torus_symbol") os << ";symbol=" << s.symbol << ";mode=" << s.symbol_mode << ";period=" << s.period;
  if (s.family == "bilaplacian_potential")
    os << ";potential=" << s.potential << ";mass=" << s.potential_mass << ";sigma=" << s.potential_sigma
       << ";symbol=" << s.bilaplacian_symbol;
  if (s.family == "sierpinski_gasket") os << ";level=" << s.level << ";metric=" << s.metric;
  return os.str();
}

}  // namespace sml
