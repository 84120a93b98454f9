#include "flexgrid/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "flexgrid/error.hpp"

namespace flexgrid {

using nlohmann::json;

namespace {

double mw(const FlexContext& ctx, double pu) { return ctx.model.to_kw(pu) / 1000.0; }

/// Setpoints are stored in their natural unit: gamma is a ratio, the others
/// are reactive powers.
double setpoint_scale(const FlexContext& ctx) {
  return ctx.mode == InverterMode::ConstantPF ? 1.0 : ctx.model.base_kva;
}

const json& field(const json& obj, const char* key, std::string_view source) {
  if (!obj.is_object() || !obj.contains(key))
    throw ValidationError(std::string(source) + ": missing field '" + key + "'");
  return obj.at(key);
}

double number(const json& obj, const char* key, std::string_view source) {
  const json& v = field(obj, key, source);
  if (!v.is_number()) throw ValidationError(std::string(source) + ": field '" + key + "' is not a number");
  return v.get<double>();
}

std::string text(const json& obj, const char* key, std::string_view source) {
  const json& v = field(obj, key, source);
  if (!v.is_string()) throw ValidationError(std::string(source) + ": field '" + key + "' is not a string");
  return v.get<std::string>();
}

json scenario_json(const FlexContext& ctx, const Scenario& s) {
  const NodeLabel& l = ctx.index.label(s.node);
  return {{"node", s.node},
          {"bus", l.bus},
          {"phase", std::string(1, phase_char(l.phase))},
          {"scenario", s.id()},
          {"activation", s.activation == Activation::Positive ? "positive" : "negative"},
          {"extremum", s.extremum == Extremum::Max ? "max" : "min"}};
}

json config_json(const FlexContext& ctx, const RunConfig& c) {
  return {{"feeder", ctx.model.name},
          {"mode", std::string(mode_name(c.mode))},
          {"vmin", c.band.vmin},
          {"vmax", c.band.vmax},
          {"direction", std::string(direction_name(c.flex.direction))},
          {"tolerances",
           {{"epsilon", c.flex.epsilon},
            {"feasibility", c.flex.feasibility_tol},
            {"bisection", c.flex.bisection_tol},
            {"lambda_box", c.flex.lambda_box},
            {"node_limit", c.flex.node_limit}}}};
}

json worst_table_json(const FlexContext& ctx, const WorstCaseTable& t) {
  json nodes = json::array();
  for (const NodeLimitRecord& r : node_limit_records(ctx, t))
    nodes.push_back({{"node", r.node},
                     {"bus", r.bus},
                     {"phase", std::string(1, r.phase)},
                     {"upper_mw", r.upper_mw},
                     {"lower_mw", r.lower_mw}});
  json scen = json::array();
  for (const ScenarioLimit& l : t.scenarios) {
    json e = scenario_json(ctx, l.scenario);
    e["limit_mw"] = mw(ctx, l.limit);
    e["magnitude"] = l.magnitude;
    scen.push_back(std::move(e));
  }
  auto names = [&](const std::vector<std::size_t>& pos) {
    json a = json::array();
    for (std::size_t p : pos) a.push_back(t.scenarios[p].scenario.describe(ctx.index));
    return a;
  };
  return {{"range_mw", {{"lower", mw(ctx, t.range_lower)}, {"upper", mw(ctx, t.range_upper)}}},
          {"binding_upper", names(t.binding_upper)},
          {"binding_lower", names(t.binding_lower)},
          {"nodes", std::move(nodes)},
          {"scenarios", std::move(scen)}};
}

json setpoints_json(const FlexContext& ctx, const std::vector<double>& setpoints) {
  json a = json::array();
  for (const SetpointRecord& r : setpoint_records(ctx, setpoints))
    a.push_back({{"inverter", r.inverter},
                 {"bus", r.bus},
                 {"phase", std::string(1, r.phase)},
                 {"value", r.value},
                 {"value_pu", r.value_pu},
                 {"unit", r.unit},
                 {"box", {r.box_lo, r.box_hi}}});
  return a;
}

std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

}  // namespace

void validate(const RunConfig& c) {
  if (!(c.band.vmin > 0.0) || !(c.band.vmin < c.band.vmax))
    throw ValidationError("config: need 0 < vmin < vmax");
  const FlexConfig& f = c.flex;
  if (!(f.epsilon > 0.0) || !(f.feasibility_tol > 0.0) || !(f.bisection_tol > 0.0) || !(f.lambda_box > 0.0))
    throw ValidationError("config: tolerances must be positive");
  if (f.workers < 1) throw ValidationError("config: workers must be >= 1");
  if (f.node_limit < 1 || !(f.time_limit_seconds > 0.0)) throw ValidationError("config: limits must be positive");
  if (c.grid_points < 2) throw ValidationError("config: grid_points must be >= 2");
}

std::vector<NodeLimitRecord> node_limit_records(const FlexContext& ctx, const WorstCaseTable& t) {
  std::vector<NodeLimitRecord> rows;
  for (std::size_t k = 0; k < ctx.size(); ++k) {
    const NodeLabel& l = ctx.index.label(k);
    rows.push_back({k, l.bus, phase_char(l.phase), mw(ctx, t.node_upper[k]), mw(ctx, t.node_lower[k])});
  }
  return rows;
}

std::vector<SetpointRecord> setpoint_records(const FlexContext& ctx, const std::vector<double>& setpoints) {
  const double scale = setpoint_scale(ctx);
  std::vector<SetpointRecord> rows;
  for (std::size_t j = 0; j < setpoints.size(); ++j) {
    const InverterSpec& v = ctx.model.inverters[j];
    const Interval box = setpoint_box(ctx, j);
    rows.push_back({j, v.bus, phase_char(v.phase), setpoints[j] * scale, setpoints[j], box.lo * scale,
                    box.hi * scale, ctx.mode == InverterMode::ConstantPF ? "ratio" : "kvar"});
  }
  return rows;
}

std::string worst_case_json(const FlexContext& ctx, const RunConfig& c, const WorstCaseTable& t) {
  json doc = {{"schema", "flexgrid.worst_case/1"}, {"config", config_json(ctx, c)}, {"worst_case", worst_table_json(ctx, t)}};
  return doc.dump(2) + "\n";
}

std::string result_json(const FlexContext& ctx, const RunConfig& c, const FlexibilityResult& r) {
  json iterations = json::array();
  for (const IterationRecord& it : r.log) {
    json followers = json::array();
    for (const Scenario& s : it.followers) followers.push_back(s.describe(ctx.index));
    iterations.push_back({{"iteration", it.iteration},
                          {"followers", std::move(followers)},
                          {"dp_plus_mw", mw(ctx, it.dp_plus)},
                          {"dp_minus_mw", mw(ctx, it.dp_minus)},
                          {"bound_mw", mw(ctx, it.bound)},
                          {"proven", it.proven},
                          {"nodes", it.nodes},
                          {"lambda_box", it.lambda_box},
                          {"max_duality_gap", it.max_duality_gap},
                          {"violations", it.violations}});
  }
  json active = json::array();
  for (const Scenario& s : r.active) active.push_back(scenario_json(ctx, s));

  const UpperDecision& d = r.decision;
  json doc = {
      {"schema", std::string(kResultSchema)},
      {"config", config_json(ctx, c)},
      {"converged", r.converged},
      {"hit_iteration_cap", r.hit_iteration_cap},
      {"limits",
       {{"dp_plus_mw", mw(ctx, d.dp_plus)},
        {"dp_minus_mw", mw(ctx, d.dp_minus)},
        {"dp_plus_pu", d.dp_plus},
        {"dp_minus_pu", d.dp_minus}}},
      {"available_mw", {{"lower", mw(ctx, ctx.dp_min)}, {"upper", mw(ctx, ctx.dp_max)}}},
      {"setpoints", setpoints_json(ctx, d.setpoints)},
      {"iterations", std::move(iterations)},
      {"active_followers", std::move(active)},
      {"worst_case", worst_table_json(ctx, r.worst)}};
  return doc.dump(2) + "\n";
}

std::string timings_json(const FlexibilityResult& r) {
  json per = json::array();
  for (const IterationRecord& it : r.log) per.push_back({{"iteration", it.iteration}, {"seconds", it.seconds}});
  json doc = {{"worst_case_seconds", r.worst_case_seconds}, {"total_seconds", r.total_seconds}, {"iterations", per}};
  return doc.dump(2) + "\n";
}

StoredResult parse_result(std::string_view text_in, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text_in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
  if (text(doc, "schema", source) != kResultSchema)
    throw ValidationError(std::string(source) + ": not a " + std::string(kResultSchema) + " document");

  StoredResult r;
  const json& cfg = field(doc, "config", source);
  r.feeder = text(cfg, "feeder", source);
  r.mode = parse_mode(text(cfg, "mode", source));
  r.band = {number(cfg, "vmin", source), number(cfg, "vmax", source)};
  r.direction = parse_direction(text(cfg, "direction", source));
  const json& conv = field(doc, "converged", source);
  if (!conv.is_boolean()) throw ValidationError(std::string(source) + ": field 'converged' is not a boolean");
  r.converged = conv.get<bool>();

  const json& lim = field(doc, "limits", source);
  r.dp_plus_pu = number(lim, "dp_plus_pu", source);
  r.dp_minus_pu = number(lim, "dp_minus_pu", source);

  const json& sps = field(doc, "setpoints", source);
  if (!sps.is_array()) throw ValidationError(std::string(source) + ": 'setpoints' is not an array");
  for (const json& s : sps) {
    SetpointRecord rec;
    rec.inverter = static_cast<std::size_t>(number(s, "inverter", source));
    rec.bus = text(s, "bus", source);
    rec.phase = text(s, "phase", source).at(0);
    rec.value = number(s, "value", source);
    rec.value_pu = number(s, "value_pu", source);
    rec.unit = text(s, "unit", source);
    const json& box = field(s, "box", source);
    if (!box.is_array() || box.size() != 2) throw ValidationError(std::string(source) + ": bad setpoint box");
    rec.box_lo = box[0].get<double>();
    rec.box_hi = box[1].get<double>();
    r.setpoints.push_back(std::move(rec));
  }

  const json& wc = field(doc, "worst_case", source);
  for (const json& n : field(wc, "nodes", source)) {
    NodeLimitRecord rec;
    rec.node = static_cast<std::size_t>(number(n, "node", source));
    rec.bus = text(n, "bus", source);
    rec.phase = text(n, "phase", source).at(0);
    rec.upper_mw = number(n, "upper_mw", source);
    rec.lower_mw = number(n, "lower_mw", source);
    r.nodes.push_back(std::move(rec));
  }
  return r;
}

UpperDecision decision_of(const StoredResult& r) {
  UpperDecision d;
  d.dp_plus = r.dp_plus_pu;
  d.dp_minus = r.dp_minus_pu;
  d.mode = r.mode;
  for (const SetpointRecord& s : r.setpoints) d.setpoints.push_back(s.value_pu);
  return d;
}

std::string oracle_report_json(const FlexContext& ctx, const UpperDecision& d, const OracleReport& rep) {
  json entries = json::array();
  for (const OracleEntry& e : rep.entries) {
    json j = scenario_json(ctx, e.scenario);
    j["linear"] = e.linear;
    j["nonlinear"] = e.nonlinear;
    j["excess"] = e.excess;
    j["method"] = e.brute_force ? "grid" : "point";
    entries.push_back(std::move(j));
  }
  json mags = json::array();
  for (std::size_t i = 0; i < rep.magnitudes.size(); ++i) {
    const NodeMagnitude& m = rep.magnitudes[i];
    const NodeLabel& l = ctx.index.label(m.node);
    mags.push_back({{"scenario", rep.entries[i].scenario.describe(ctx.index)},
                    {"node", m.node},
                    {"bus", l.bus},
                    {"phase", std::string(1, phase_char(l.phase))},
                    {"linear", m.linear},
                    {"nonlinear", m.nonlinear}});
  }
  json doc = {{"schema", std::string(kOracleSchema)},
              {"feeder", ctx.model.name},
              {"mode", std::string(mode_name(ctx.mode))},
              {"dp_plus_mw", mw(ctx, d.dp_plus)},
              {"dp_minus_mw", mw(ctx, d.dp_minus)},
              {"passed", rep.passed},
              {"tolerance", rep.tolerance},
              {"max_violation", rep.max_violation},
              {"max_linearization_error", rep.max_linearization_error},
              {"max_linearization_error_all_nodes", rep.max_linearization_error_all_nodes},
              {"violating", rep.violating},
              {"points_evaluated", rep.points_evaluated},
              {"points_skipped", rep.points_skipped},
              {"entries", std::move(entries)},
              {"magnitudes", std::move(mags)}};
  return doc.dump(2) + "\n";
}

std::vector<MagnitudeRecord> parse_oracle_magnitudes(std::string_view text_in, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text_in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
  if (text(doc, "schema", source) != kOracleSchema)
    throw ValidationError(std::string(source) + ": not a " + std::string(kOracleSchema) + " document");
  std::vector<MagnitudeRecord> rows;
  for (const json& m : field(doc, "magnitudes", source)) {
    MagnitudeRecord r;
    r.scenario = text(m, "scenario", source);
    r.node = static_cast<std::size_t>(number(m, "node", source));
    r.bus = text(m, "bus", source);
    r.phase = text(m, "phase", source).at(0);
    r.linear = number(m, "linear", source);
    r.nonlinear = number(m, "nonlinear", source);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_limits_csv(const std::filesystem::path& path, const std::vector<NodeLimitRecord>& rows) {
  std::ofstream f = open_out(path);
  f << "node,bus,phase,upper_mw,lower_mw\n";
  for (const NodeLimitRecord& r : rows)
    f << r.node << ',' << r.bus << ',' << r.phase << ',' << csv_number(r.upper_mw) << ','
      << csv_number(r.lower_mw) << '\n';
}

void write_setpoints_csv(const std::filesystem::path& path, InverterMode mode,
                         const std::vector<SetpointRecord>& rows) {
  std::ofstream f = open_out(path);
  f << "inverter,bus,phase,mode,setpoint,unit,box_lo,box_hi\n";
  for (const SetpointRecord& r : rows)
    f << r.inverter << ',' << r.bus << ',' << r.phase << ',' << mode_name(mode) << ',' << csv_number(r.value)
      << ',' << r.unit << ',' << csv_number(r.box_lo) << ',' << csv_number(r.box_hi) << '\n';
}

void write_magnitudes_csv(const std::filesystem::path& path, const std::vector<MagnitudeRecord>& rows) {
  std::ofstream f = open_out(path);
  f << "scenario,node,bus,phase,linear_pu,nonlinear_pu\n";
  for (const MagnitudeRecord& r : rows)
    f << r.scenario << ',' << r.node << ',' << r.bus << ',' << r.phase << ',' << csv_number(r.linear) << ','
      << csv_number(r.nonlinear) << '\n';
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  std::ofstream f = open_out(path);
  f << content;
}

}  // namespace flexgrid
