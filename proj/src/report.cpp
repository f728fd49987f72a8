#include "cpstir/report.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#ifndef CPSTIR_VERSION
#define CPSTIR_VERSION "0.0.0"
#endif
#ifndef CPSTIR_BUILD_HASH
#define CPSTIR_BUILD_HASH "unknown"
#endif

namespace cpstir {

std::string_view version() { return CPSTIR_VERSION; }
std::string_view build_hash() { return CPSTIR_BUILD_HASH; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::invalid_argument("row width differs from header in " + schema);
  rows.push_back(std::move(row));
}

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) {
    if (s->find_first_of(",\"\n") == std::string::npos) return *s;
    std::string q = "\"";
    for (char ch : *s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  }
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  return std::to_string(std::get<std::int64_t>(c));
}

nlohmann::ordered_json cell_json(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return format_double(*d);
    return *d;
  }
  return std::get<std::int64_t>(c);
}

}  // namespace

void write_csv(std::ostream& out, const Table& table, const Provenance& p) {
  out << "# cpstir " << version() << " build=" << build_hash() << " seed=" << p.seed << " schema=" << table.schema
      << "/v1\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i]);
    out << '\n';
  }
}

void write_json(std::ostream& out, const Table& table, const Provenance& p) {
  nlohmann::ordered_json j;
  j["tool"] = "cpstir";
  j["version"] = std::string(version());
  j["build"] = std::string(build_hash());
  j["seed"] = p.seed;
  j["schema"] = table.schema + "/v1";
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json r;
    for (std::size_t i = 0; i < row.size(); ++i) r[table.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  out << j.dump(2) << '\n';
}

}  // namespace cpstir
