// CSV and JSON serialisation of results. Numbers are written in the
// shortest form that parses back to the same double; units live in column
// names.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rfb/analysis.hpp"
#include "rfb/config.hpp"
#include "rfb/integrator.hpp"
#include "rfb/sweep.hpp"

namespace rfb {

std::string format_number(double v);

/// Parses a full-string decimal or "nan"/"inf". Throws std::invalid_argument.
double parse_number(std::string_view s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range.
  std::size_t column(std::string_view name) const;
};

std::string to_csv(const CsvTable& t);
CsvTable parse_csv(std::string_view text);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

// Tables for each result kind.
CsvTable trajectory_table(const Trajectory& traj);
CsvTable map_table(const SweepResult& result);
CsvTable boundary_table(const std::vector<BoundaryPoint>& boundary);
CsvTable branch_table(const BifurcationResult& bif);
CsvTable field_table(const FieldSlice& slice);

nlohmann::json to_json(const std::complex<double>& z);
nlohmann::json to_json(const EigenSpectrum& s);
nlohmann::json to_json(const DimensionlessParams& d);
nlohmann::json to_json(const CalibrationResult& c);

/// Every config key with its value and provenance, plus warnings.
nlohmann::json config_json(const RunConfig& cfg);

}  // namespace rfb
