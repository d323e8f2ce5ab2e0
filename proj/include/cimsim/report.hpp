#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cimsim/errors.hpp"
#include "cimsim/format.hpp"

namespace cimsim {

/// One named metric produced by a run. Everything a report emits is keyed by
/// (experiment, config hash) so numbers stay traceable to their settings.
struct ReportRecord {
  std::string experiment;
  std::string config_hash;
  std::string metric;
  double value = 0.0;
  std::string units;
};

inline std::string records_to_csv(const std::vector<ReportRecord>& records) {
  if (records.empty()) throw ArgumentError("no report records to emit");
  std::string out = "experiment,config_hash,metric,value,units\n";
  for (const auto& r : records) {
    out += r.experiment;
    out += ',';
    out += r.config_hash;
    out += ',';
    out += r.metric;
    out += ',';
    out += fmt_double(r.value);
    out += ',';
    out += r.units;
    out += '\n';
  }
  return out;
}

inline std::string records_to_json(const std::vector<ReportRecord>& records) {
  if (records.empty()) throw ArgumentError("no report records to emit");
  nlohmann::ordered_json doc;
  doc["records"] = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    doc["records"].push_back({{"experiment", r.experiment},
                              {"config_hash", r.config_hash},
                              {"metric", r.metric},
                              {"value", r.value},
                              {"units", r.units}});
  }
  return doc.dump(2) + "\n";
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

/// Emits both report flavors next to each other: <stem>.csv and <stem>.json.
inline void emit_reports(const std::vector<ReportRecord>& records,
                         const std::string& stem) {
  write_text_file(stem + ".csv", records_to_csv(records));
  write_text_file(stem + ".json", records_to_json(records));
}

}  // namespace cimsim
