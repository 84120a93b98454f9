#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "flexgrid/report.hpp"

namespace flexgrid {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailed = 1;  ///< verify found violations, or a numerical failure
inline constexpr int kValidation = 2;
inline constexpr int kInfeasibleAnchor = 3;
inline constexpr int kNotConverged = 4;  ///< iteration cap or stalled loop
}  // namespace exit_code

/// FLEXGRID_WORKERS if set to a positive integer, else 1.
int default_workers();

/// Writes limits_per_node.csv and worst_case.json.
int cmd_worst_case(const RunConfig& c, std::ostream& log);
/// Writes result.json and timings.json.
int cmd_solve(const RunConfig& c, std::ostream& log);
/// Checks a stored result against the nonlinear oracle; mode, band and
/// direction come from the result, the feeder from the config.  Writes
/// oracle_report.json.
int cmd_verify(const RunConfig& c, const std::filesystem::path& result, std::ostream& log);
/// Writes limits_per_node.csv, setpoints.csv and magnitudes.csv.  Without an
/// oracle report the magnitudes file carries only its header.
int cmd_plotdata(const std::filesystem::path& result, const std::optional<std::filesystem::path>& report,
                 const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace flexgrid
