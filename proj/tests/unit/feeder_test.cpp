#include <gtest/gtest.h>

#include "flexgrid/error.hpp"
#include "flexgrid/feeder.hpp"
#include "support.hpp"

namespace fg = flexgrid;
using fg::testing::data_file;

TEST(Feeder, CorpusLoadsAndRoundTrips) {
  for (const auto& path : fg::testing::corpus()) {
    SCOPED_TRACE(path.string());
    const fg::FeederModel m = fg::load_feeder(path);
    EXPECT_NO_THROW(fg::validate(m));
    const fg::FeederModel back = fg::parse_feeder(fg::serialize_feeder(m));
    EXPECT_EQ(back, m);
  }
}

TEST(Feeder, Ieee13Shape) {
  const auto m = fg::load_feeder(data_file("ieee13_reconstructed.json"));
  EXPECT_EQ(m.buses.size(), 13u);
  EXPECT_EQ(m.inverters.size(), 15u);
  EXPECT_EQ(fg::index_nodes(m).size(), 36u);  // 12 non-slack buses, all three-phase
}

TEST(Feeder, IndexIsBusMajor) {
  const auto m = fg::load_feeder(data_file("four_bus.json"));
  const fg::BusPhaseIndex idx(m);
  ASSERT_EQ(idx.size(), 9u);
  EXPECT_EQ(idx.at("1", fg::Phase::A), 0u);
  EXPECT_EQ(idx.at("1", fg::Phase::C), 2u);
  EXPECT_EQ(idx.at("3", fg::Phase::B), 7u);
  EXPECT_FALSE(idx.find("s", fg::Phase::A).has_value());
  for (std::size_t k = 0; k < idx.size(); ++k)
    EXPECT_EQ(idx.at(idx.label(k).bus, idx.label(k).phase), k);
}

namespace {

std::string broken(std::string_view what) {
  auto m = fg::load_feeder(data_file("four_bus.json"));
  if (what == "asym") m.segments[1].z_ohm(0, 1) += std::complex<double>(0.1, 0.0);
  if (what == "tap") m.regulators[0].taps[1] = 1.3;
  if (what == "dangling") m.loads[0].bus = "nowhere";
  if (what == "bounds") m.inverters[0].p_min_kw = m.inverters[0].p_max_kw + 1.0;
  if (what == "island") m.segments.pop_back();
  try {
    fg::validate(m);
  } catch (const fg::ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Feeder, ValidationNamesTheField) {
  EXPECT_NE(broken("asym").find("segments[1]"), std::string::npos) << broken("asym");
  EXPECT_NE(broken("tap").find("regulators[0]"), std::string::npos) << broken("tap");
  EXPECT_NE(broken("dangling").find("loads[0]"), std::string::npos) << broken("dangling");
  EXPECT_NE(broken("bounds").find("inverters[0]"), std::string::npos) << broken("bounds");
  EXPECT_FALSE(broken("island").empty());
}

TEST(Feeder, MalformedJsonIsAValidationError) {
  EXPECT_THROW(fg::parse_feeder("{\"buses\": 3}"), fg::ValidationError);
  EXPECT_THROW(fg::parse_feeder("not json"), fg::ValidationError);
}

TEST(Feeder, PhaseParsing) {
  EXPECT_EQ(fg::parse_phase("b"), fg::Phase::B);
  EXPECT_THROW(fg::parse_phase("d"), fg::ValidationError);
  EXPECT_EQ(fg::PhaseSet::parse("ac").to_string(), "ac");
  EXPECT_EQ(fg::parse_mode(fg::mode_name(fg::InverterMode::VoltVar)), fg::InverterMode::VoltVar);
}
