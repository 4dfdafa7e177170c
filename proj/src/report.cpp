#include "fvlab/report.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

namespace fvlab {

const Value* Report::find(const std::string& key) const {
  for (const auto& [k, v] : summary) {
    if (k == key) {
      return &v;
    }
  }
  return nullptr;
}

std::string format_value(const Value& v) {
  struct Visitor {
    std::string operator()(std::int64_t i) const { return fmt::format("{}", i); }
    std::string operator()(double d) const {
      if (std::isnan(d)) {
        return "nan";
      }
      if (std::isinf(d)) {
        return d > 0 ? "inf" : "-inf";
      }
      return fmt::format("{}", d);
    }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) {
    return s;
  }
  std::string q = "\"";
  for (const char c : s) {
    if (c == '"') {
      q += '"';
    }
    q += c;
  }
  q += '"';
  return q;
}

namespace {

using nlohmann::ordered_json;

ordered_json to_json(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    // Non-finite doubles have no JSON literal; emit them as strings.
    if (!std::isfinite(*d)) {
      return format_value(v);
    }
    return *d;
  }
  if (const auto* i = std::get_if<std::int64_t>(&v)) {
    return *i;
  }
  if (const auto* b = std::get_if<bool>(&v)) {
    return *b;
  }
  return std::get<std::string>(v);
}

void write_csv(const Report& r, std::ostream& out) {
  for (const auto& [k, v] : r.manifest) {
    out << "# " << k << " = " << format_value(v) << '\n';
  }
  out << "# table: summary\n";
  out << "key,value\n";
  for (const auto& [k, v] : r.summary) {
    out << csv_field(k) << ',' << csv_field(format_value(v)) << '\n';
  }
  for (const Table& t : r.tables) {
    out << '\n';
    out << "# table: " << t.name << '\n';
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      out << (c ? "," : "") << csv_field(t.columns[c]);
    }
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        out << (c ? "," : "") << csv_field(format_value(row[c]));
      }
      out << '\n';
    }
  }
}

void write_json(const Report& r, std::ostream& out) {
  ordered_json manifest = ordered_json::object();
  for (const auto& [k, v] : r.manifest) {
    manifest[k] = to_json(v);
  }
  ordered_json summary = ordered_json::object();
  for (const auto& [k, v] : r.summary) {
    summary[k] = to_json(v);
  }
  ordered_json tables = ordered_json::object();
  for (const Table& t : r.tables) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : t.rows) {
      ordered_json obj = ordered_json::object();
      for (std::size_t c = 0; c < row.size() && c < t.columns.size(); ++c) {
        obj[t.columns[c]] = to_json(row[c]);
      }
      rows.push_back(std::move(obj));
    }
    tables[t.name] = std::move(rows);
  }
  ordered_json doc = ordered_json::object();
  doc["manifest"] = std::move(manifest);
  doc["results"] = ordered_json{{"summary", std::move(summary)}, {"tables", std::move(tables)}};
  out << doc.dump(2) << '\n';
}

} // namespace

void write_report(const Report& report, Format format, std::ostream& out) {
  if (format == Format::json) {
    write_json(report, out);
  } else {
    write_csv(report, out);
  }
}

} // namespace fvlab
