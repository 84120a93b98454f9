#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "flexgrid/feeder.hpp"

namespace flexgrid {

/// Number of slack phases placed first in the admittance ordering.
inline constexpr std::size_t kSlackPhases = 3;

/// Position of single-phase node `k` in the admittance ordering.
inline std::size_t ybus_position(std::size_t k) { return kSlackPhases + k; }

/// Per-unit bus admittance matrix of size (3 + n) x (3 + n).  Rows 0..2 are
/// the slack phases a, b, c; row 3 + k is node k of `index`.  Regulators are
/// ideal transformers on the sending end of their segment.
///
/// Throws NumericalError when a segment's phase impedance block is singular.
Eigen::MatrixXcd assemble_ybus(const FeederModel& model, const BusPhaseIndex& index);

inline Eigen::MatrixXcd assemble_ybus(const FeederModel& model) {
  return assemble_ybus(model, index_nodes(model));
}

}  // namespace flexgrid
