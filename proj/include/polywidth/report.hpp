#pragma once

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <polywidth/version.hpp>

namespace polywidth {

// 17 significant digits round-trip an IEEE double exactly, which is what
// makes golden-file comparisons of the emitted reports byte-stable.
// Infinities are rendered as "inf"/"-inf" tokens because JSON has no native
// infinity and the CSV output should match the JSON text for the same value.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON rendering of a numeric value: finite numbers stay bare; non-finite
// values become the quoted token, since bare inf is not valid JSON.
inline std::string json_number(double v) {
  if (std::isfinite(v)) return format_double(v);
  return "\"" + format_double(v) + "\"";
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

// RFC-4180-style field quoting: quote only when the field contains a comma,
// a quote, or a line break; double any embedded quotes.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

// One table or config cell: either a number (formatted with format_double)
// or a piece of text.
struct Cell {
  bool is_number = true;
  double number = 0.0;
  std::string text;

  static Cell num(double v) {
    Cell c;
    c.is_number = true;
    c.number = v;
    return c;
  }
  static Cell str(std::string s) {
    Cell c;
    c.is_number = false;
    c.text = std::move(s);
    return c;
  }
};

// One named check: a computed value against its oracle, with the tolerance
// pinned at the call site. `scale` names the comparison rule:
//   "abs"         pass iff |value - oracle| <= tolerance
//   "rel"         pass iff |value - oracle| <= tolerance * |oracle|
//   "lower-bound" pass iff value >= oracle - tolerance
//   "upper-bound" pass iff value <= oracle + tolerance
// `provenance` records where the oracle value comes from (closed form,
// transcendental-root scan, exact identity, structural rule, ...) so every
// row is auditable without the source.
struct CheckRow {
  std::string id;
  double value = 0.0;
  double oracle = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  double tolerance = 0.0;
  std::string scale;
  std::string provenance;
  bool pass = false;
};

inline CheckRow make_check(std::string id, double value, double oracle, double tolerance,
                           std::string scale, std::string provenance) {
  CheckRow row;
  row.id = std::move(id);
  row.value = value;
  row.oracle = oracle;
  row.tolerance = tolerance;
  row.scale = std::move(scale);
  row.provenance = std::move(provenance);

  if (std::isinf(value) && std::isinf(oracle) && (value > 0.0) == (oracle > 0.0)) {
    // Equal infinities: structural values compare exactly.
    row.abs_err = 0.0;
    row.rel_err = 0.0;
  } else {
    row.abs_err = std::abs(value - oracle);
    row.rel_err = row.abs_err == 0.0 ? 0.0 : row.abs_err / std::abs(oracle);
  }

  if (row.scale == "abs") {
    row.pass = row.abs_err <= row.tolerance;
  } else if (row.scale == "rel") {
    row.pass = row.rel_err <= row.tolerance;
  } else if (row.scale == "lower-bound") {
    row.pass = value >= oracle - tolerance;
    row.abs_err = value >= oracle ? 0.0 : oracle - value;
    row.rel_err = oracle != 0.0 && std::isfinite(oracle) ? row.abs_err / std::abs(oracle)
                                                         : row.abs_err;
  } else if (row.scale == "upper-bound") {
    row.pass = value <= oracle + tolerance;
    row.abs_err = value <= oracle ? 0.0 : value - oracle;
    row.rel_err = oracle != 0.0 && std::isfinite(oracle) ? row.abs_err / std::abs(oracle)
                                                         : row.abs_err;
  } else {
    row.pass = false;  // unknown scale: fail loudly in the report
  }
  return row;
}

struct ReportTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

// Everything one subcommand run emits: the echoed configuration (the seed is
// always part of it), free-form notes, the named checks, and the plot-ready
// tables. The exit status of the process is derived from all_pass().
struct ResultEnvelope {
  std::string subcommand;
  std::vector<std::pair<std::string, Cell>> config;
  std::vector<std::string> notes;
  std::vector<CheckRow> checks;
  std::vector<ReportTable> tables;

  bool all_pass() const {
    for (const CheckRow& row : checks)
      if (!row.pass) return false;
    return true;
  }
};

namespace detail {

inline std::string cell_json(const Cell& c) {
  if (c.is_number) return json_number(c.number);
  return "\"" + json_escape(c.text) + "\"";
}

inline std::string cell_csv(const Cell& c) {
  if (c.is_number) return csv_field(format_double(c.number));
  return csv_field(c.text);
}

}  // namespace detail

// Hand-rolled writer so that key order, spacing, and float formatting are
// fixed by this file alone: two runs with the same envelope produce the same
// bytes on any platform.
inline void write_json(const ResultEnvelope& envelope, std::ostream& out) {
  out << "{\n";
  out << "  \"schema\": 1,\n";
  out << "  \"artifact\": \"" << artifact_name << "\",\n";
  out << "  \"version\": \"" << artifact_version << "\",\n";
  out << "  \"subcommand\": \"" << json_escape(envelope.subcommand) << "\",\n";

  out << "  \"config\": {";
  for (std::size_t i = 0; i < envelope.config.size(); ++i) {
    if (i) out << ", ";
    out << "\"" << json_escape(envelope.config[i].first)
        << "\": " << detail::cell_json(envelope.config[i].second);
  }
  out << "},\n";

  out << "  \"notes\": [";
  for (std::size_t i = 0; i < envelope.notes.size(); ++i) {
    if (i) out << ", ";
    out << "\"" << json_escape(envelope.notes[i]) << "\"";
  }
  out << "],\n";

  out << "  \"checks\": [";
  for (std::size_t i = 0; i < envelope.checks.size(); ++i) {
    const CheckRow& row = envelope.checks[i];
    out << (i ? ",\n    " : "\n    ");
    out << "{\"id\": \"" << json_escape(row.id) << "\", \"value\": " << json_number(row.value)
        << ", \"oracle\": " << json_number(row.oracle)
        << ", \"abs_err\": " << json_number(row.abs_err)
        << ", \"rel_err\": " << json_number(row.rel_err)
        << ", \"tolerance\": " << json_number(row.tolerance) << ", \"scale\": \""
        << json_escape(row.scale) << "\", \"provenance\": \"" << json_escape(row.provenance)
        << "\", \"pass\": " << (row.pass ? "true" : "false") << "}";
  }
  out << (envelope.checks.empty() ? "" : "\n  ") << "],\n";

  out << "  \"tables\": [";
  for (std::size_t t = 0; t < envelope.tables.size(); ++t) {
    const ReportTable& table = envelope.tables[t];
    out << (t ? ",\n    " : "\n    ");
    out << "{\"name\": \"" << json_escape(table.name) << "\", \"columns\": [";
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out << ", ";
      out << "\"" << json_escape(table.columns[c]) << "\"";
    }
    out << "], \"rows\": [";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      if (r) out << ", ";
      out << "[";
      for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
        if (c) out << ", ";
        out << detail::cell_json(table.rows[r][c]);
      }
      out << "]";
    }
    out << "]}";
  }
  out << (envelope.tables.empty() ? "" : "\n  ") << "],\n";

  out << "  \"all_pass\": " << (envelope.all_pass() ? "true" : "false") << "\n";
  out << "}\n";
}

// CSV in tidy (long) form with a single header row: every emitted value is
// one line `table,row,column,value`. Checks appear under table "checks" with
// their id as the row key; config under "config"; data tables under their
// own names with the 0-based row index as the key. Line endings are "\n".
inline void write_csv(const ResultEnvelope& envelope, std::ostream& out) {
  out << "table,row,column,value\n";
  out << "meta,schema,value,1\n";
  out << "meta,artifact,value," << csv_field(artifact_name) << "\n";
  out << "meta,version,value," << csv_field(artifact_version) << "\n";
  out << "meta,subcommand,value," << csv_field(envelope.subcommand) << "\n";
  for (const auto& [key, cell] : envelope.config)
    out << "config," << csv_field(key) << ",value," << detail::cell_csv(cell) << "\n";
  for (std::size_t i = 0; i < envelope.notes.size(); ++i)
    out << "notes," << i << ",text," << csv_field(envelope.notes[i]) << "\n";
  for (const CheckRow& row : envelope.checks) {
    const std::string key = csv_field(row.id);
    out << "checks," << key << ",value," << format_double(row.value) << "\n";
    out << "checks," << key << ",oracle," << format_double(row.oracle) << "\n";
    out << "checks," << key << ",abs_err," << format_double(row.abs_err) << "\n";
    out << "checks," << key << ",rel_err," << format_double(row.rel_err) << "\n";
    out << "checks," << key << ",tolerance," << format_double(row.tolerance) << "\n";
    out << "checks," << key << ",scale," << csv_field(row.scale) << "\n";
    out << "checks," << key << ",provenance," << csv_field(row.provenance) << "\n";
    out << "checks," << key << ",pass," << (row.pass ? "true" : "false") << "\n";
  }
  for (const ReportTable& table : envelope.tables)
    for (std::size_t r = 0; r < table.rows.size(); ++r)
      for (std::size_t c = 0; c < table.rows[r].size() && c < table.columns.size(); ++c)
        out << csv_field(table.name) << "," << r << "," << csv_field(table.columns[c]) << ","
            << detail::cell_csv(table.rows[r][c]) << "\n";
  out << "summary,all_pass,value," << (envelope.all_pass() ? "true" : "false") << "\n";
}

}  // namespace polywidth
