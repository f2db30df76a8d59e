#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "ontram/errors.hpp"
#include "ontram/schema.hpp"

namespace ontram {

// Shortest round-trip decimal representation; parsing it back recovers the
// exact double, and output is byte-stable across runs.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw data_error("csv: unterminated quote on line " + std::to_string(line_no));
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace detail

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("csv: cannot open " + path);
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && line_no > 1) continue;
    auto fields = detail::split_csv_line(line, line_no);
    if (line_no == 1) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size())
        throw data_error("csv: row " + std::to_string(line_no - 1) + " of " + path + " has " +
                         std::to_string(fields.size()) + " fields, expected " +
                         std::to_string(table.header.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) throw data_error("csv: " + path + " is empty");
  return table;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("csv: cannot write " + path);
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += "\"\"";
      else q.push_back(c);
    }
    q += "\"";
    return q;
  };
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << quote(header[i]);
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << quote(row[i]);
    out << "\n";
  }
}

namespace detail {

inline double parse_double_cell(const std::string& cell, const std::string& column,
                                std::size_t row) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end)
    throw data_error("ingest: unparseable cell '" + cell + "' in column " + column + ", row " +
                     std::to_string(row));
  return value;
}

}  // namespace detail

// Reads a cohort CSV against a schema. Empty cells become missing markers
// (covariates only); every error names the offending row and column.
inline CohortTable ingest_csv(const std::string& path, const FeatureSchema& schema) {
  schema.validate();
  const CsvTable csv = read_csv(path);

  std::vector<std::ptrdiff_t> schema_to_csv(schema.columns.size(), -1);
  std::ptrdiff_t id_col = -1;
  for (std::size_t h = 0; h < csv.header.size(); ++h) {
    const std::string& name = csv.header[h];
    if (schema.id_column && name == *schema.id_column) {
      id_col = static_cast<std::ptrdiff_t>(h);
      continue;
    }
    bool known = false;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      if (schema.columns[c].name == name) {
        schema_to_csv[c] = static_cast<std::ptrdiff_t>(h);
        known = true;
        break;
      }
    }
    if (!known) throw data_error("ingest: unknown column " + name + " in " + path);
  }
  for (std::size_t c = 0; c < schema.columns.size(); ++c)
    if (schema_to_csv[c] < 0)
      throw data_error("ingest: column " + schema.columns[c].name + " missing from " + path);
  if (schema.id_column && id_col < 0)
    throw data_error("ingest: identifier column " + *schema.id_column + " missing from " + path);

  CohortTable table;
  table.schema = schema;
  table.columns.assign(schema.columns.size(), {});
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    table.ids.push_back(id_col >= 0 ? row[static_cast<std::size_t>(id_col)]
                                    : std::to_string(r + 1));
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const ColumnSpec& spec = schema.columns[c];
      const std::string& cell = row[static_cast<std::size_t>(schema_to_csv[c])];
      if (cell.empty()) {
        if (spec.role != ColumnRole::covariate)
          throw data_error("ingest: missing " + spec.name + " in row " + std::to_string(r + 1) +
                           " (only covariates may be missing)");
        table.columns[c].push_back(CohortTable::missing());
        continue;
      }
      double value;
      if (spec.role == ColumnRole::covariate && spec.kind == ColumnKind::categorical) {
        const auto it = std::find(spec.levels.begin(), spec.levels.end(), cell);
        if (it == spec.levels.end())
          throw data_error("ingest: unknown level '" + cell + "' for column " + spec.name +
                           ", row " + std::to_string(r + 1));
        value = static_cast<double>(it - spec.levels.begin());
      } else {
        value = detail::parse_double_cell(cell, spec.name, r + 1);
      }
      if (spec.role == ColumnRole::outcome &&
          (value != std::floor(value) || value < 0 ||
           value >= schema.outcome_scale.class_count))
        throw data_error("ingest: outcome '" + cell + "' in row " + std::to_string(r + 1) +
                         " outside valid range 0-" +
                         std::to_string(schema.outcome_scale.class_count - 1));
      if ((spec.role == ColumnRole::treatment ||
           (spec.role == ColumnRole::covariate && spec.kind == ColumnKind::binary)) &&
          value != 0.0 && value != 1.0)
        throw data_error("ingest: column " + spec.name + ", row " + std::to_string(r + 1) +
                         " must be 0 or 1");
      table.columns[c].push_back(value);
    }
  }
  if (table.rows() == 0) throw data_error("ingest: " + path + " has no data rows");
  table.validate();
  return table;
}

// Joins a companion embeddings CSV (identifier + emb_0..emb_{d-1}) onto a
// cohort, appending the embedding block to the schema.
inline CohortTable attach_embeddings(const CohortTable& table, const std::string& path,
                                     const std::string& id_column) {
  if (!table.schema.embedding_columns().empty())
    throw config_error("attach_embeddings: table already has embedding columns");
  const CsvTable csv = read_csv(path);
  if (csv.header.empty() || csv.header[0] != id_column)
    throw data_error("attach_embeddings: first column of " + path + " must be " + id_column);
  const std::size_t dim = csv.header.size() - 1;
  if (dim == 0) throw data_error("attach_embeddings: no embedding columns in " + path);

  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) by_id[csv.rows[r][0]] = r;

  CohortTable out = table;
  for (std::size_t j = 0; j < dim; ++j) {
    ColumnSpec spec;
    spec.name = csv.header[j + 1];
    spec.kind = ColumnKind::continuous;
    spec.role = ColumnRole::embedding;
    out.schema.columns.push_back(spec);
    out.columns.emplace_back();
    out.columns.back().reserve(table.rows());
  }
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto it = by_id.find(table.ids[r]);
    if (it == by_id.end())
      throw data_error("attach_embeddings: no embedding row for patient " + table.ids[r]);
    for (std::size_t j = 0; j < dim; ++j)
      out.columns[table.columns.size() + j].push_back(
          detail::parse_double_cell(csv.rows[it->second][j + 1], csv.header[j + 1], r + 1));
  }
  out.validate();
  return out;
}

}  // namespace ontram
