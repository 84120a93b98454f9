#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace flexgrid {

enum class Phase : std::uint8_t { A = 0, B = 1, C = 2 };

inline constexpr std::array<Phase, 3> kAllPhases{Phase::A, Phase::B, Phase::C};

char phase_char(Phase p);
Phase parse_phase(std::string_view text);

/// Subset of {a, b, c}.
struct PhaseSet {
  std::array<bool, 3> present{false, false, false};

  bool has(Phase p) const { return present[static_cast<std::size_t>(p)]; }
  std::size_t count() const { return std::size_t(present[0]) + present[1] + present[2]; }
  std::string to_string() const;
  static PhaseSet parse(std::string_view text);
  static PhaseSet all() { return {{true, true, true}}; }

  bool operator==(const PhaseSet&) const = default;
};

using Matrix3c = Eigen::Matrix3cd;

struct Bus {
  std::string id;
  PhaseSet phases;
  bool operator==(const Bus&) const = default;
};

/// Line (or transformer referred to the primary) between two buses.  The
/// impedance is always given as a full 3x3 phase matrix in ohm; rows and
/// columns of phases absent on the segment are ignored.
struct Segment {
  std::string from;
  std::string to;
  Matrix3c z_ohm = Matrix3c::Zero();
  bool operator==(const Segment&) const = default;
};

/// Ideal per-phase step-voltage regulator at the sending end of a segment.
struct Regulator {
  std::size_t segment = 0;
  std::array<double, 3> taps{1.0, 1.0, 1.0};
  bool operator==(const Regulator&) const = default;
};

enum class InverterMode : std::uint8_t { ConstantPF, ConstantQ, VoltVar };

std::string_view mode_name(InverterMode m);
InverterMode parse_mode(std::string_view text);

struct ModeParams {
  std::optional<double> pf;     ///< power-factor bound of the constant-pf ratio
  std::optional<double> gamma;  ///< reactive/active ratio bound of constant-q
  bool operator==(const ModeParams&) const = default;
};

struct LoadSpec {
  std::string bus;
  Phase phase = Phase::A;
  double p_kw = 0.0;
  double p_min_kw = 0.0;
  double p_max_kw = 0.0;
  double pf = 1.0;
  bool operator==(const LoadSpec&) const = default;
};

struct InverterSpec {
  std::string bus;
  Phase phase = Phase::A;
  double p_kw = 0.0;
  double p_min_kw = 0.0;
  double p_max_kw = 0.0;
  double s_kva = 0.0;
  InverterMode mode = InverterMode::ConstantPF;
  ModeParams params;
  double q_kvar = 0.0;  ///< reactive output at the current operating point
  bool operator==(const InverterSpec&) const = default;
};

/// Network description.  `base_kva` is the single-phase power base and
/// `base_kv` the line-to-neutral voltage base.
struct FeederModel {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Segment> segments;
  std::vector<Regulator> regulators;
  std::string slack;
  double base_kva = 1000.0;
  double base_kv = 1.0;
  std::vector<LoadSpec> loads;
  std::vector<InverterSpec> inverters;

  double z_base_ohm() const { return base_kv * base_kv * 1000.0 / base_kva; }
  double to_pu(double kw) const { return kw / base_kva; }
  double to_kw(double pu) const { return pu * base_kva; }

  std::optional<std::size_t> bus_position(std::string_view id) const;
  const Bus& bus(std::string_view id) const;
  /// Phases carried by a segment: those present at both ends.
  PhaseSet segment_phases(std::size_t s) const;

  bool operator==(const FeederModel&) const = default;
};

/// Throws ValidationError naming the offending field on any violated
/// invariant (connectivity, symmetry, tap range, dangling device references,
/// device bounds).
void validate(const FeederModel& model);

FeederModel parse_feeder(std::string_view json_text, std::string_view source = "<string>");
FeederModel load_feeder(const std::filesystem::path& path);
std::string serialize_feeder(const FeederModel& model);
void save_feeder(const FeederModel& model, const std::filesystem::path& path);

struct NodeLabel {
  std::string bus;
  Phase phase;
  bool operator==(const NodeLabel&) const = default;
};

/// Bijection between present non-slack (bus, phase) pairs and 0..n-1,
/// bus-major in file order, phases a < b < c.
class BusPhaseIndex {
 public:
  explicit BusPhaseIndex(const FeederModel& model);

  std::size_t size() const { return labels_.size(); }
  std::optional<std::size_t> find(std::string_view bus, Phase phase) const;
  std::size_t at(std::string_view bus, Phase phase) const;
  const NodeLabel& label(std::size_t k) const { return labels_.at(k); }
  const std::vector<NodeLabel>& labels() const { return labels_; }
  std::string describe(std::size_t k) const;

  bool operator==(const BusPhaseIndex&) const = default;

 private:
  std::vector<NodeLabel> labels_;
  // (bus position, phase) -> k, or npos
  std::vector<std::array<std::size_t, 3>> lookup_;
  std::vector<std::string> bus_ids_;
};

BusPhaseIndex index_nodes(const FeederModel& model);

}  // namespace flexgrid
