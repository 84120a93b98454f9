#include "flexgrid/feeder.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "flexgrid/error.hpp"

namespace flexgrid {

using nlohmann::json;

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

std::string join(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

const json& member(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(join(path, key), "missing required field");
  return *it;
}

double number(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) fail(join(path, key), "must be finite");
  return x;
}

std::optional<double> optional_number(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) fail(join(path, key), "expected a number");
  return it->get<double>();
}

// Bus ids may be written as strings or integers.
std::string identifier(const json& v, const std::string& path) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  fail(path, "expected a string or integer identifier");
}

std::string identifier(const json& obj, const char* key, const std::string& path) {
  return identifier(member(obj, key, path), join(path, key));
}

const json& array(const json& obj, const char* key, const std::string& path, bool required) {
  static const json empty = json::array();
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) fail(join(path, key), "missing required field");
    return empty;
  }
  if (!it->is_array()) fail(join(path, key), "expected an array");
  return *it;
}

std::string indexed(const char* key, std::size_t i) {
  return std::string(key) + "[" + std::to_string(i) + "]";
}

Phase phase_field(const json& obj, const std::string& path) {
  const json& v = member(obj, "phase", path);
  if (!v.is_string()) fail(path + ".phase", "expected \"a\", \"b\" or \"c\"");
  try {
    return parse_phase(v.get<std::string>());
  } catch (const ValidationError& e) {
    fail(path + ".phase", e.what());
  }
}

}  // namespace

char phase_char(Phase p) { return "abc"[static_cast<std::size_t>(p)]; }

Phase parse_phase(std::string_view text) {
  if (text == "a" || text == "A") return Phase::A;
  if (text == "b" || text == "B") return Phase::B;
  if (text == "c" || text == "C") return Phase::C;
  throw ValidationError("unknown phase '" + std::string(text) + "'");
}

std::string PhaseSet::to_string() const {
  std::string s;
  for (Phase p : kAllPhases)
    if (has(p)) s += phase_char(p);
  return s;
}

PhaseSet PhaseSet::parse(std::string_view text) {
  PhaseSet set;
  for (char ch : text) {
    Phase p = parse_phase(std::string_view(&ch, 1));
    if (set.has(p)) throw ValidationError("phase listed twice");
    set.present[static_cast<std::size_t>(p)] = true;
  }
  return set;
}

std::string_view mode_name(InverterMode m) {
  switch (m) {
    case InverterMode::ConstantPF: return "constant-pf";
    case InverterMode::ConstantQ: return "constant-q";
    case InverterMode::VoltVar: return "volt-var";
  }
  return "?";
}

InverterMode parse_mode(std::string_view text) {
  if (text == "constant-pf") return InverterMode::ConstantPF;
  if (text == "constant-q") return InverterMode::ConstantQ;
  if (text == "volt-var") return InverterMode::VoltVar;
  throw ValidationError("unknown inverter mode '" + std::string(text) +
                        "' (expected constant-pf, constant-q or volt-var)");
}

std::optional<std::size_t> FeederModel::bus_position(std::string_view id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return i;
  return std::nullopt;
}

const Bus& FeederModel::bus(std::string_view id) const {
  auto pos = bus_position(id);
  if (!pos) throw ValidationError("unknown bus '" + std::string(id) + "'");
  return buses[*pos];
}

PhaseSet FeederModel::segment_phases(std::size_t s) const {
  const PhaseSet& a = bus(segments.at(s).from).phases;
  const PhaseSet& b = bus(segments.at(s).to).phases;
  PhaseSet out;
  for (std::size_t p = 0; p < 3; ++p) out.present[p] = a.present[p] && b.present[p];
  return out;
}

void validate(const FeederModel& m) {
  if (!(m.base_kva > 0.0)) fail("base_kva", "must be positive");
  if (!(m.base_kv > 0.0)) fail("base_kv", "must be positive");
  if (m.buses.empty()) fail("buses", "at least the slack bus is required");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < m.buses.size(); ++i) {
    const auto path = indexed("buses", i);
    if (m.buses[i].id.empty()) fail(path + ".id", "must not be empty");
    if (!ids.insert(m.buses[i].id).second)
      fail(path + ".id", "duplicate bus id '" + m.buses[i].id + "'");
    if (m.buses[i].phases.count() == 0) fail(path + ".phases", "no phases present");
  }

  auto slack = m.bus_position(m.slack);
  if (!slack) fail("slack", "references unknown bus '" + m.slack + "'");
  if (m.buses[*slack].phases.count() != 3) fail("slack", "slack bus must carry all three phases");

  for (std::size_t s = 0; s < m.segments.size(); ++s) {
    const auto path = indexed("segments", s);
    const Segment& seg = m.segments[s];
    if (!m.bus_position(seg.from)) fail(path + ".from", "unknown bus '" + seg.from + "'");
    if (!m.bus_position(seg.to)) fail(path + ".to", "unknown bus '" + seg.to + "'");
    if (seg.from == seg.to) fail(path, "segment connects a bus to itself");
    if (m.segment_phases(s).count() == 0) fail(path, "buses share no phase");
    if (!seg.z_ohm.allFinite()) fail(path + ".z", "non-finite impedance");
    const double scale = 1.0 + seg.z_ohm.cwiseAbs().maxCoeff();
    if ((seg.z_ohm - seg.z_ohm.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
      fail(path + ".z", "impedance matrix is not symmetric");
  }

  std::set<std::size_t> regulated;
  for (std::size_t r = 0; r < m.regulators.size(); ++r) {
    const auto path = indexed("regulators", r);
    const Regulator& reg = m.regulators[r];
    if (reg.segment >= m.segments.size())
      fail(path + ".segment", "no segment with index " + std::to_string(reg.segment));
    if (!regulated.insert(reg.segment).second) fail(path + ".segment", "segment already regulated");
    for (double t : reg.taps)
      if (!(t >= 0.9 && t <= 1.1)) fail(path + ".taps", "tap ratio outside [0.9, 1.1]");
  }

  // Every present (bus, phase) must be reachable from the slack through
  // segments carrying that phase.
  for (Phase p : kAllPhases) {
    std::vector<bool> seen(m.buses.size(), false);
    std::queue<std::size_t> frontier;
    seen[*slack] = true;
    frontier.push(*slack);
    while (!frontier.empty()) {
      std::size_t b = frontier.front();
      frontier.pop();
      for (std::size_t s = 0; s < m.segments.size(); ++s) {
        if (!m.segment_phases(s).has(p)) continue;
        std::size_t f = *m.bus_position(m.segments[s].from);
        std::size_t t = *m.bus_position(m.segments[s].to);
        std::size_t other = f == b ? t : (t == b ? f : kNone);
        if (other != kNone && !seen[other]) {
          seen[other] = true;
          frontier.push(other);
        }
      }
    }
    for (std::size_t b = 0; b < m.buses.size(); ++b)
      if (m.buses[b].phases.has(p) && !seen[b])
        fail(indexed("buses", b), "phase " + std::string(1, phase_char(p)) + " of bus '" +
                                      m.buses[b].id + "' is not connected to the slack");
  }

  auto check_node = [&](const std::string& path, const std::string& bus, Phase p) {
    auto pos = m.bus_position(bus);
    if (!pos) fail(path + ".bus", "unknown bus '" + bus + "'");
    if (*pos == *slack) fail(path + ".bus", "devices cannot sit on the slack bus");
    if (!m.buses[*pos].phases.has(p))
      fail(path + ".phase", "bus '" + bus + "' has no phase " + std::string(1, phase_char(p)));
  };

  std::set<std::pair<std::string, Phase>> seen_loads;
  for (std::size_t i = 0; i < m.loads.size(); ++i) {
    const auto path = indexed("loads", i);
    const LoadSpec& l = m.loads[i];
    check_node(path, l.bus, l.phase);
    if (!seen_loads.insert({l.bus, l.phase}).second)
      fail(path, "more than one load on the same single-phase node");
    if (!(l.p_min_kw <= l.p_kw && l.p_kw <= l.p_max_kw))
      fail(path, "requires p_min <= p_kw <= p_max");
    if (!(l.pf > 0.0 && l.pf <= 1.0)) fail(path + ".pf", "must lie in (0, 1]");
  }

  std::set<std::pair<std::string, Phase>> seen_inv;
  for (std::size_t i = 0; i < m.inverters.size(); ++i) {
    const auto path = indexed("inverters", i);
    const InverterSpec& v = m.inverters[i];
    check_node(path, v.bus, v.phase);
    if (!seen_inv.insert({v.bus, v.phase}).second)
      fail(path, "more than one inverter on the same single-phase node");
    if (!(0.0 <= v.p_min_kw && v.p_min_kw <= v.p_kw && v.p_kw <= v.p_max_kw &&
          v.p_max_kw <= v.s_kva))
      fail(path, "requires 0 <= p_min <= p_kw <= p_max <= s_kva");
    if (v.params.pf && !(*v.params.pf > 0.0 && *v.params.pf <= 1.0))
      fail(path + ".mode_params.pf", "must lie in (0, 1]");
    if (v.params.gamma && !(*v.params.gamma >= 0.0))
      fail(path + ".mode_params.gamma", "must be non-negative");
    if (!std::isfinite(v.q_kvar) || std::abs(v.q_kvar) > v.s_kva)
      fail(path + ".q_kvar", "must satisfy |q_kvar| <= s_kva");
  }
}

FeederModel parse_feeder(std::string_view text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
  const std::string root;
  if (!doc.is_object()) fail(std::string(source), "top level must be an object");

  FeederModel m;
  if (auto it = doc.find("name"); it != doc.end() && it->is_string()) m.name = *it;

  const json& buses = array(doc, "buses", root, true);
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto path = indexed("buses", i);
    Bus b;
    b.id = identifier(buses[i], "id", path);
    const json& ph = member(buses[i], "phases", path);
    try {
      if (ph.is_string()) {
        b.phases = PhaseSet::parse(ph.get<std::string>());
      } else if (ph.is_array()) {
        std::string joined;
        for (const auto& e : ph) {
          if (!e.is_string()) fail(path + ".phases", "expected phase letters");
          joined += e.get<std::string>();
        }
        b.phases = PhaseSet::parse(joined);
      } else {
        fail(path + ".phases", "expected a string such as \"abc\"");
      }
    } catch (const ValidationError& e) {
      if (std::string(e.what()).find(path) == 0) throw;
      fail(path + ".phases", e.what());
    }
    m.buses.push_back(std::move(b));
  }

  const json& segments = array(doc, "segments", root, false);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto path = indexed("segments", s);
    Segment seg;
    seg.from = identifier(segments[s], "from", path);
    seg.to = identifier(segments[s], "to", path);
    const json& z = member(segments[s], "z", path);
    if (!z.is_array() || z.size() != 9) fail(path + ".z", "expected 9 [re, im] pairs (row-major)");
    for (std::size_t e = 0; e < 9; ++e) {
      const json& c = z[e];
      if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
        fail(path + ".z[" + std::to_string(e) + "]", "expected [re, im]");
      seg.z_ohm(e / 3, e % 3) = {c[0].get<double>(), c[1].get<double>()};
    }
    m.segments.push_back(std::move(seg));
  }

  const json& regs = array(doc, "regulators", root, false);
  for (std::size_t r = 0; r < regs.size(); ++r) {
    const auto path = indexed("regulators", r);
    Regulator reg;
    const json& seg = member(regs[r], "segment", path);
    if (!seg.is_number_integer() || seg.get<long long>() < 0)
      fail(path + ".segment", "expected a non-negative segment index");
    reg.segment = seg.get<std::size_t>();
    const json& taps = member(regs[r], "taps", path);
    if (!taps.is_array() || taps.size() != 3) fail(path + ".taps", "expected [ta, tb, tc]");
    for (std::size_t p = 0; p < 3; ++p) {
      if (!taps[p].is_number()) fail(path + ".taps", "expected numbers");
      reg.taps[p] = taps[p].get<double>();
    }
    m.regulators.push_back(reg);
  }

  m.slack = identifier(doc, "slack", root);
  m.base_kva = number(doc, "base_kva", root);
  m.base_kv = number(doc, "base_kv", root);

  const json& loads = array(doc, "loads", root, false);
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const auto path = indexed("loads", i);
    LoadSpec l;
    l.bus = identifier(loads[i], "bus", path);
    l.phase = phase_field(loads[i], path);
    l.p_kw = number(loads[i], "p_kw", path);
    l.p_min_kw = number(loads[i], "p_min", path);
    l.p_max_kw = number(loads[i], "p_max", path);
    l.pf = number(loads[i], "pf", path);
    m.loads.push_back(std::move(l));
  }

  const json& invs = array(doc, "inverters", root, false);
  for (std::size_t i = 0; i < invs.size(); ++i) {
    const auto path = indexed("inverters", i);
    InverterSpec v;
    v.bus = identifier(invs[i], "bus", path);
    v.phase = phase_field(invs[i], path);
    v.p_kw = number(invs[i], "p_kw", path);
    v.p_min_kw = number(invs[i], "p_min", path);
    v.p_max_kw = number(invs[i], "p_max", path);
    v.s_kva = number(invs[i], "s_kva", path);
    if (auto it = invs[i].find("mode"); it != invs[i].end()) {
      if (!it->is_string()) fail(path + ".mode", "expected a string");
      try {
        v.mode = parse_mode(it->get<std::string>());
      } catch (const ValidationError& e) {
        fail(path + ".mode", e.what());
      }
    }
    if (auto it = invs[i].find("mode_params"); it != invs[i].end() && !it->is_null()) {
      if (!it->is_object()) fail(path + ".mode_params", "expected an object");
      v.params.pf = optional_number(*it, "pf", path + ".mode_params");
      v.params.gamma = optional_number(*it, "gamma", path + ".mode_params");
    }
    v.q_kvar = optional_number(invs[i], "q_kvar", path).value_or(0.0);
    m.inverters.push_back(std::move(v));
  }

  validate(m);
  return m;
}

FeederModel load_feeder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open feeder file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_feeder(buf.str(), path.string());
}

std::string serialize_feeder(const FeederModel& m) {
  json doc;
  if (!m.name.empty()) doc["name"] = m.name;
  doc["buses"] = json::array();
  for (const Bus& b : m.buses) doc["buses"].push_back({{"id", b.id}, {"phases", b.phases.to_string()}});
  doc["segments"] = json::array();
  for (const Segment& s : m.segments) {
    json z = json::array();
    for (int e = 0; e < 9; ++e) {
      auto c = s.z_ohm(e / 3, e % 3);
      z.push_back({c.real(), c.imag()});
    }
    doc["segments"].push_back({{"from", s.from}, {"to", s.to}, {"z", z}});
  }
  doc["regulators"] = json::array();
  for (const Regulator& r : m.regulators)
    doc["regulators"].push_back({{"segment", r.segment}, {"taps", r.taps}});
  doc["slack"] = m.slack;
  doc["base_kva"] = m.base_kva;
  doc["base_kv"] = m.base_kv;
  doc["loads"] = json::array();
  for (const LoadSpec& l : m.loads)
    doc["loads"].push_back({{"bus", l.bus},
                            {"phase", std::string(1, phase_char(l.phase))},
                            {"p_kw", l.p_kw},
                            {"p_min", l.p_min_kw},
                            {"p_max", l.p_max_kw},
                            {"pf", l.pf}});
  doc["inverters"] = json::array();
  for (const InverterSpec& v : m.inverters) {
    json params = json::object();
    if (v.params.pf) params["pf"] = *v.params.pf;
    if (v.params.gamma) params["gamma"] = *v.params.gamma;
    doc["inverters"].push_back({{"bus", v.bus},
                                {"phase", std::string(1, phase_char(v.phase))},
                                {"p_kw", v.p_kw},
                                {"p_min", v.p_min_kw},
                                {"p_max", v.p_max_kw},
                                {"s_kva", v.s_kva},
                                {"mode", std::string(mode_name(v.mode))},
                                {"mode_params", params},
                                {"q_kvar", v.q_kvar}});
  }
  return doc.dump(2);
}

void save_feeder(const FeederModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError(path.string() + ": cannot write feeder file");
  out << serialize_feeder(model) << '\n';
}

BusPhaseIndex::BusPhaseIndex(const FeederModel& model) {
  lookup_.assign(model.buses.size(), {kNone, kNone, kNone});
  for (std::size_t b = 0; b < model.buses.size(); ++b) {
    bus_ids_.push_back(model.buses[b].id);
    if (model.buses[b].id == model.slack) continue;
    for (Phase p : kAllPhases) {
      if (!model.buses[b].phases.has(p)) continue;
      lookup_[b][static_cast<std::size_t>(p)] = labels_.size();
      labels_.push_back({model.buses[b].id, p});
    }
  }
}

std::optional<std::size_t> BusPhaseIndex::find(std::string_view bus, Phase phase) const {
  for (std::size_t b = 0; b < bus_ids_.size(); ++b) {
    if (bus_ids_[b] != bus) continue;
    std::size_t k = lookup_[b][static_cast<std::size_t>(phase)];
    if (k == kNone) return std::nullopt;
    return k;
  }
  return std::nullopt;
}

std::size_t BusPhaseIndex::at(std::string_view bus, Phase phase) const {
  auto k = find(bus, phase);
  if (!k)
    throw ValidationError("no single-phase node " + std::string(bus) + "." +
                          std::string(1, phase_char(phase)));
  return *k;
}

std::string BusPhaseIndex::describe(std::size_t k) const {
  const NodeLabel& l = label(k);
  return l.bus + "." + std::string(1, phase_char(l.phase));
}

BusPhaseIndex index_nodes(const FeederModel& model) { return BusPhaseIndex(model); }

}  // namespace flexgrid
