#pragma once
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sml/condition_checkers.hpp"
#include "sml/errors.hpp"

namespace sml {

inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::ordered_json;
using Cell = std::variant<double, std::string>;

// Shortest round-trip representation, fixed for every platform.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0) return "0";
  char buf[40];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

struct ExperimentTable {
  std::string id;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, std::string>> provenance;
  bool truncated = false;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw EvaluationError("row of table '" + id + "' is incomplete");
    rows.push_back(std::move(row));
  }
  void set(const std::string& key, std::string value) {
    for (auto& [k, v] : provenance)
      if (k == key) {
        v = std::move(value);
        return;
      }
    provenance.emplace_back(key, std::move(value));
  }
  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw InvalidArgument("no column '" + name + "' in table '" + id + "'");
  }
  double number(std::size_t row, const std::string& name) const { return std::get<double>(rows.at(row)[column(name)]); }
  const std::string& text(std::size_t row, const std::string& name) const {
    return std::get<std::string>(rows.at(row)[column(name)]);
  }
};

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::string csv_field(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_number(*d);
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

// Provenance as '#' lines (timestamp on its own line), then header and rows.
inline void write_csv(std::ostream& os, const ExperimentTable& t, const std::string& timestamp = utc_timestamp()) {
  os << "# experiment: " << t.id << "\n";
  for (const auto& [k, v] : t.provenance) os << "# " << k << ": " << v << "\n";
  os << "# timestamp: " << timestamp << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_field(r[i]);
    os << "\n";
  }
  if (t.truncated) os << "# TRUNCATED\n";
}

inline json to_json(const ExperimentTable& t, const std::string& timestamp = utc_timestamp()) {
  json j;
  j["experiment"] = t.id;
  json prov = json::object();
  for (const auto& [k, v] : t.provenance) prov[k] = v;
  prov["timestamp"] = timestamp;
  j["provenance"] = prov;
  j["columns"] = t.columns;
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row = json::array();
    for (const auto& c : r) {
      if (const double* d = std::get_if<double>(&c)) row.push_back(number_json(*d));
      else row.push_back(std::get<std::string>(c));
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["truncated"] = t.truncated;
  return j;
}

inline json to_json(const ConditionReport& r) {
  json j;
  j["condition"] = r.condition;
  json params = json::object();
  for (const auto& [k, v] : r.params) params[k] = number_json(v);
  j["params"] = params;
  j["C_hat"] = number_json(r.C_hat);
  j["c_hat"] = number_json(r.c_hat);
  j["worst_ratio"] = number_json(r.worst_ratio);
  j["verdict"] = r.pass ? "pass" : "fail";
  j["status"] = r.status;
  j["sample_count"] = r.sample_count;
  j["excluded"] = r.excluded;
  j["tightness"] = number_json(r.tightness);
  j["budget"] = number_json(r.budget);
  json extras = json::object();
  for (const auto& [k, v] : r.extras) extras[k] = number_json(v);
  j["extras"] = extras;
  if (!r.sub.empty()) {
    json sub = json::array();
    for (const auto& s : r.sub) sub.push_back(to_json(s));
    j["sub"] = sub;
  }
  if (!r.rows.empty()) {
    json rows = json::array();
    for (const auto& row : r.rows) {
      json o = json::object();
      for (const auto& [k, v] : row) o[k] = number_json(v);
      rows.push_back(o);
    }
    j["rows"] = rows;
  }
  return j;
}

// Row dump of a report (union of row keys, sorted) as a table.
inline ExperimentTable report_rows_table(const ConditionReport& r) {
  ExperimentTable t;
  t.id = "check_" + r.condition;
  std::set<std::string> keys;
  for (const auto& row : r.rows)
    for (const auto& [k, v] : row) keys.insert(k);
  t.columns.assign(keys.begin(), keys.end());
  for (const auto& row : r.rows) {
    std::vector<Cell> cells;
    for (const auto& k : t.columns) {
      auto it = row.find(k);
      cells.emplace_back(it == row.end() ? std::nan("") : it->second);
    }
    t.add_row(std::move(cells));
  }
  return t;
}

// Drops the provenance timestamp so reruns compare byte-for-byte.
inline std::string strip_timestamp(const std::string& text) {
  std::istringstream is(text);
  std::ostringstream os;
  std::string line;
  const bool is_json = !text.empty() && text[0] == '{';
  if (is_json) {
    json j = json::parse(text);
    if (j.contains("provenance")) j["provenance"].erase("timestamp");
    return j.dump(2);
  }
  while (std::getline(is, line))
    if (line.rfind("# timestamp:", 0) != 0) os << line << "\n";
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw EvaluationError("cannot write " + path.string());
  f << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::string render(const ExperimentTable& t, const std::string& format, const std::string& timestamp = utc_timestamp()) {
  if (format == "json") return to_json(t, timestamp).dump(2) + "\n";
  std::ostringstream os;
  write_csv(os, t, timestamp);
  return os.str();
}

}  // namespace sml
