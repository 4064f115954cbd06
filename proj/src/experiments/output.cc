#include <charconv>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "thp/experiments.h"

namespace thp {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_csv(const ExperimentSpec& spec, const ResultTable& table, std::ostream& out) {
  out << "# thp experiment output\n";
  for (const auto& [key, value] : spec.entries()) out << "# " << key << " = " << value << "\n";
  out << "# rows = " << table.rows.size() << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << table.columns[i];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << "\n";
  }
}

void write_json(const ExperimentSpec& spec, const ResultTable& table, std::ostream& out) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [key, value] : spec.entries()) meta[key] = value;
  doc["spec"] = meta;
  doc["columns"] = table.columns;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::array();
    // JSON has no NaN; undefined entries become null.
    for (double v : row) {
      if (std::isfinite(v)) {
        r.push_back(v);
      } else {
        r.push_back(nullptr);
      }
    }
    rows.push_back(r);
  }
  doc["rows"] = rows;
  out << doc.dump(2) << "\n";
}

}  // namespace thp
