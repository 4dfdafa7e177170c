#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace fvlab {

using Value = std::variant<std::int64_t, double, bool, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
};

enum class Format { csv, json };

/// Experiment output: manifest entries, scalar results and optional tables,
/// all in insertion order.
struct Report {
  std::vector<std::pair<std::string, Value>> manifest;
  std::vector<std::pair<std::string, Value>> summary;
  std::vector<Table> tables;
  std::vector<std::string> assert_failures;

  void add(std::string key, Value v) { summary.emplace_back(std::move(key), std::move(v)); }
  void check(bool ok, std::string what) {
    if (!ok) {
      assert_failures.push_back(std::move(what));
    }
  }
  const Value* find(const std::string& key) const;
};

/// CSV: manifest as "# key = value" comment lines, then the scalar results
/// as a key,value table, then each further table. Every table starts with a
/// "# table: name" line and a header row; tables are separated by a blank
/// line. LF line endings, RFC-4180 quoting.
/// JSON: {"manifest": {...}, "results": {"summary": {...}, "tables": {...}}}.
void write_report(const Report& report, Format format, std::ostream& out);

std::string format_value(const Value& v);
std::string csv_field(const std::string& s);

} // namespace fvlab
