#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "flexgrid/flex.hpp"
#include "flexgrid/oracle.hpp"

namespace flexgrid {

inline constexpr std::string_view kResultSchema = "flexgrid.result/1";
inline constexpr std::string_view kOracleSchema = "flexgrid.oracle/1";

struct RunConfig {
  std::filesystem::path feeder;
  InverterMode mode = InverterMode::ConstantPF;
  VoltageBand band;
  FlexConfig flex;  // direction and workers live here
  int grid_points = 11;
  std::filesystem::path out_dir = ".";
};

/// Throws ValidationError for an empty band, non-positive tolerances or
/// worker count.
void validate(const RunConfig& c);

/// Row of the per-node limits table, MW.
struct NodeLimitRecord {
  std::size_t node = 0;
  std::string bus;
  char phase = 'a';
  double upper_mw = 0.0;
  double lower_mw = 0.0;
};

struct SetpointRecord {
  std::size_t inverter = 0;
  std::string bus;
  char phase = 'a';
  double value = 0.0;  ///< ratio for constant-pf, kvar otherwise
  double value_pu = 0.0;
  double box_lo = 0.0;  // same unit as value
  double box_hi = 0.0;
  std::string unit;
};

struct MagnitudeRecord {
  std::string scenario;
  std::size_t node = 0;
  std::string bus;
  char phase = 'a';
  double linear = 0.0;
  double nonlinear = 0.0;
};

/// What verify and plotdata need back from a result document.
struct StoredResult {
  std::string feeder;
  InverterMode mode = InverterMode::ConstantPF;
  VoltageBand band;
  Direction direction = Direction::Both;
  bool converged = false;
  double dp_plus_pu = 0.0;
  double dp_minus_pu = 0.0;
  std::vector<SetpointRecord> setpoints;
  std::vector<NodeLimitRecord> nodes;
};

std::vector<NodeLimitRecord> node_limit_records(const FlexContext& ctx, const WorstCaseTable& t);
std::vector<SetpointRecord> setpoint_records(const FlexContext& ctx, const std::vector<double>& setpoints);

/// Worst-case table alone (worst-case command).
std::string worst_case_json(const FlexContext& ctx, const RunConfig& c, const WorstCaseTable& t);
/// Full result document.  Wall-clock timings are left out so that a
/// single-worker run is byte-reproducible; see timings_json.
std::string result_json(const FlexContext& ctx, const RunConfig& c, const FlexibilityResult& r);
std::string timings_json(const FlexibilityResult& r);

/// Throws ValidationError on a malformed or foreign document.
StoredResult parse_result(std::string_view text, std::string_view source = "<string>");
UpperDecision decision_of(const StoredResult& r);

std::string oracle_report_json(const FlexContext& ctx, const UpperDecision& d, const OracleReport& rep);
std::vector<MagnitudeRecord> parse_oracle_magnitudes(std::string_view text, std::string_view source = "<string>");

void write_limits_csv(const std::filesystem::path& path, const std::vector<NodeLimitRecord>& rows);
void write_setpoints_csv(const std::filesystem::path& path, InverterMode mode,
                         const std::vector<SetpointRecord>& rows);
void write_magnitudes_csv(const std::filesystem::path& path, const std::vector<MagnitudeRecord>& rows);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace flexgrid
