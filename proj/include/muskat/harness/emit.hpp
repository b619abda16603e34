#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "muskat/harness/record.hpp"
#include "muskat/version.hpp"

namespace muskat::harness {

inline constexpr const char* kSchemaVersion = "1.0";

/// Output file could not be created or written.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::filesystem::path path)
      : std::runtime_error(what + ": " + path.string()), path_(std::move(path)) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// 17 significant digits: enough to round-trip any double.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += t.columns[i];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

inline Json to_json(const ResultRecord& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["library_version"] = kVersion;
  j["experiment"] = to_string(r.config.experiment);
  j["config"] = config_json(r.config);
  j["payload"] = r.payload;
  Json tables = Json::array();
  for (const auto& t : r.tables)
    tables.push_back({{"name", t.name}, {"file", t.name + ".csv"}, {"columns", t.columns},
                      {"rows", t.rows.size()}});
  j["tables"] = tables;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open output file", path);
  os << content;
  os.close();
  if (!os) throw IoError("cannot write output file", path);
}

/// Writes result.json plus one CSV per table into dir; returns the paths written.
inline std::vector<std::filesystem::path> emit(const ResultRecord& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory (" + ec.message() + ")", dir);
  std::vector<std::filesystem::path> written;
  for (const auto& t : r.tables) {
    written.push_back(dir / (t.name + ".csv"));
    write_file(written.back(), to_csv(t));
  }
  written.push_back(dir / "result.json");
  write_file(written.back(), to_json(r).dump(2) + "\n");
  return written;
}

}  // namespace muskat::harness
