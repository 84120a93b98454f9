#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "flexgrid/commands.hpp"
#include "json.hpp"
#include "support.hpp"

namespace fg = flexgrid;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("flexgrid_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fg::RunConfig config(const std::string& feeder, const fs::path& out) {
  fg::RunConfig c;
  c.feeder = fg::testing::data_file(feeder);
  c.out_dir = out;
  c.band = {0.98, 1.03};
  c.grid_points = 5;
  c.flex.workers = 2;
  return c;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST(Commands, ExitCodesForBadInput) {
  TempDir tmp("codes");
  std::ostringstream log;
  auto c = config("four_bus.json", tmp.path);
  c.feeder = tmp.path / "missing.json";
  EXPECT_EQ(fg::cmd_solve(c, log), fg::exit_code::kValidation);

  c = config("four_bus.json", tmp.path);
  c.band = {1.03, 0.98};
  EXPECT_EQ(fg::cmd_worst_case(c, log), fg::exit_code::kValidation);

  c.band = {1.045, 1.1};
  EXPECT_EQ(fg::cmd_worst_case(c, log), fg::exit_code::kInfeasibleAnchor);

  EXPECT_EQ(fg::cmd_verify(config("four_bus.json", tmp.path), tmp.path / "nope.json", log),
            fg::exit_code::kValidation);
}

TEST(Commands, SolveVerifyPlotdataRoundTrip) {
  TempDir tmp("round");
  std::ostringstream log;
  const auto c = config("four_bus.json", tmp.path);
  ASSERT_EQ(fg::cmd_worst_case(c, log), fg::exit_code::kOk) << log.str();
  EXPECT_EQ(first_line(tmp.path / "limits_per_node.csv"), "node,bus,phase,upper_mw,lower_mw");
  EXPECT_EQ(line_count(tmp.path / "limits_per_node.csv"), 10u);

  ASSERT_EQ(fg::cmd_solve(c, log), fg::exit_code::kOk) << log.str();
  ASSERT_TRUE(fs::exists(tmp.path / "timings.json"));
  const auto doc = nlohmann::json::parse(fg::read_text(tmp.path / "result.json"));
  EXPECT_EQ(doc["schema"], "flexgrid.result/1");
  EXPECT_TRUE(doc["converged"].get<bool>());
  EXPECT_FALSE(doc.contains("timings"));

  EXPECT_EQ(fg::cmd_verify(c, tmp.path / "result.json", log), fg::exit_code::kOk) << log.str();
  const auto rep = nlohmann::json::parse(fg::read_text(tmp.path / "oracle_report.json"));
  EXPECT_EQ(rep["schema"], "flexgrid.oracle/1");
  EXPECT_TRUE(rep["passed"].get<bool>());

  const fs::path plots = tmp.path / "plots";
  fs::create_directories(plots);
  ASSERT_EQ(fg::cmd_plotdata(tmp.path / "result.json", std::nullopt, plots, log), fg::exit_code::kOk);
  EXPECT_EQ(first_line(plots / "setpoints.csv"), "inverter,bus,phase,mode,setpoint,unit,box_lo,box_hi");
  EXPECT_EQ(first_line(plots / "magnitudes.csv"), "scenario,node,bus,phase,linear_pu,nonlinear_pu");
  EXPECT_EQ(line_count(plots / "magnitudes.csv"), 1u);
  EXPECT_EQ(line_count(plots / "setpoints.csv"), 3u);

  ASSERT_EQ(fg::cmd_plotdata(tmp.path / "result.json", tmp.path / "oracle_report.json", plots, log),
            fg::exit_code::kOk);
  EXPECT_GT(line_count(plots / "magnitudes.csv"), 1u);
}

TEST(Commands, VerifyRejectsATamperedResult) {
  TempDir tmp("tamper");
  std::ostringstream log;
  const auto c = config("four_bus.json", tmp.path);
  ASSERT_EQ(fg::cmd_solve(c, log), fg::exit_code::kOk) << log.str();
  auto doc = nlohmann::json::parse(fg::read_text(tmp.path / "result.json"));
  const double up = doc["available_mw"]["upper"].get<double>();
  doc["limits"]["dp_plus_mw"] = up;
  doc["limits"]["dp_plus_pu"] = up;  // MW equals p.u. on the 1000 kVA base
  for (auto& s : doc["setpoints"]) {
    s["value"] = s["box"][1];
    s["value_pu"] = s["box"][1];
  }
  fg::write_text(tmp.path / "bad.json", doc.dump(1));
  EXPECT_EQ(fg::cmd_verify(c, tmp.path / "bad.json", log), fg::exit_code::kFailed) << log.str();

  doc["schema"] = "something/else";
  fg::write_text(tmp.path / "foreign.json", doc.dump(1));
  EXPECT_EQ(fg::cmd_verify(c, tmp.path / "foreign.json", log), fg::exit_code::kValidation);
}

TEST(Commands, ResultIsByteReproducible) {
  TempDir a("det_a"), b("det_b");
  std::ostringstream log;
  auto ca = config("four_bus.json", a.path), cb = config("four_bus.json", b.path);
  ca.flex.workers = 1;
  cb.flex.workers = 3;
  ASSERT_EQ(fg::cmd_solve(ca, log), fg::exit_code::kOk);
  ASSERT_EQ(fg::cmd_solve(cb, log), fg::exit_code::kOk);
  EXPECT_EQ(fg::read_text(a.path / "result.json"), fg::read_text(b.path / "result.json"));
}

TEST(Commands, WorkersFromEnvironment) {
  ::setenv("FLEXGRID_WORKERS", "3", 1);
  EXPECT_EQ(fg::default_workers(), 3);
  ::setenv("FLEXGRID_WORKERS", "zero", 1);
  EXPECT_EQ(fg::default_workers(), 1);
  ::unsetenv("FLEXGRID_WORKERS");
  EXPECT_EQ(fg::default_workers(), 1);
}
