#include "flexgrid/ybus.hpp"

#include <string>
#include <vector>

#include "flexgrid/error.hpp"

namespace flexgrid {

namespace {

std::size_t position(const FeederModel& model, const BusPhaseIndex& index, const std::string& bus,
                     Phase p) {
  if (bus == model.slack) return static_cast<std::size_t>(p);
  return ybus_position(index.at(bus, p));
}

}  // namespace

Eigen::MatrixXcd assemble_ybus(const FeederModel& model, const BusPhaseIndex& index) {
  const std::size_t dim = kSlackPhases + index.size();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(dim, dim);
  const double z_base = model.z_base_ohm();

  std::vector<const Regulator*> regulator_of(model.segments.size(), nullptr);
  for (const Regulator& r : model.regulators) regulator_of.at(r.segment) = &r;

  for (std::size_t s = 0; s < model.segments.size(); ++s) {
    const Segment& seg = model.segments[s];
    std::vector<Phase> phases;
    for (Phase p : kAllPhases)
      if (model.segment_phases(s).has(p)) phases.push_back(p);
    const auto m = static_cast<Eigen::Index>(phases.size());

    Eigen::MatrixXcd z(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        z(i, j) = seg.z_ohm(static_cast<int>(phases[i]), static_cast<int>(phases[j])) / z_base;

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(z);
    if (!lu.isInvertible())
      throw NumericalError("segments[" + std::to_string(s) + "] (" + seg.from + " -> " + seg.to +
                           "): singular phase impedance matrix");
    const Eigen::MatrixXcd yl = lu.inverse();

    Eigen::VectorXd taps = Eigen::VectorXd::Ones(m);
    if (const Regulator* r = regulator_of[s])
      for (Eigen::Index i = 0; i < m; ++i) taps(i) = r->taps[static_cast<std::size_t>(phases[i])];
    const Eigen::MatrixXcd yff = taps.asDiagonal() * yl * taps.asDiagonal();
    const Eigen::MatrixXcd yft = -(taps.asDiagonal() * yl);
    const Eigen::MatrixXcd ytf = -(yl * taps.asDiagonal());

    std::vector<std::size_t> f(m), t(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      f[i] = position(model, index, seg.from, phases[i]);
      t[i] = position(model, index, seg.to, phases[i]);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        y(f[i], f[j]) += yff(i, j);
        y(f[i], t[j]) += yft(i, j);
        y(t[i], f[j]) += ytf(i, j);
        y(t[i], t[j]) += yl(i, j);
      }
    }
  }
  return y;
}

}  // namespace flexgrid
