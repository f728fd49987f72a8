#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cpstir {

std::string_view version();
std::string_view build_hash();

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

using Cell = std::variant<std::string, double, std::int64_t>;

/// Rows of one output schema. Rows are written in insertion order; callers
/// insert them sorted by their key columns.
struct Table {
  std::string schema;  ///< e.g. "excursion-mean"
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  /// Throws std::invalid_argument if the row width differs from the header.
  void add(std::vector<Cell> row);
};

struct Provenance {
  std::uint64_t seed = 0;
};

/// "# cpstir <version> build=<hash> seed=<seed> schema=<schema>/v1", then the
/// header line and one line per row.
void write_csv(std::ostream& out, const Table& table, const Provenance& p);

/// {"tool", "version", "build", "seed", "schema", "rows": [{column: value}]}.
void write_json(std::ostream& out, const Table& table, const Provenance& p);

}  // namespace cpstir
