#pragma once

// Serialisation of run reports. Output bytes depend only on the report, so
// identical configs give identical files.

#include "htype/app/tasks.hpp"

#include <fstream>
#include <iostream>
#include <string>

namespace htype::app {

inline json report_to_json(const RunReport& r)
{
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = {{"name", "htype_cli"}, {"version", kToolVersion}};
  j["task"] = to_string(r.task);
  j["config"] = r.config;
  json records = json::array();
  for (const Record& rec : r.records) {
    records.push_back({{"name", rec.name},
                       {"value", rec.value},
                       {"tolerance", rec.tolerance},
                       {"pass", rec.pass},
                       {"informational", rec.informational}});
  }
  j["records"] = records;
  j["points"] = r.points;
  j["notes"] = r.notes;
  j["exploratory"] = r.exploratory;
  j["numerical_failure"] = r.numerical_failure;
  j["pass"] = r.pass();
  return j;
}

inline std::string report_to_csv(const RunReport& r)
{
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(r.csv_header);
  for (const auto& row : r.csv_rows) line(row);
  return out;
}

inline void write_text(const std::string& path, const std::string& text)
{
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

/// JSON always; CSV only when requested and the task produces a grid.
inline void write_outputs(const RunReport& r, const std::string& json_path, const std::string& csv_path)
{
  if (!csv_path.empty() && r.csv_header.empty())
    throw ConfigError("task " + to_string(r.task) + " produces no CSV grid");
  write_text(json_path, report_to_json(r).dump(2) + "\n");
  if (!csv_path.empty()) write_text(csv_path, report_to_csv(r));
}

}  // namespace htype::app
