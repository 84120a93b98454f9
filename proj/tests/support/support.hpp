#pragma once

// Independent oracles and generators shared by the unit tests and the
// acceptance runner.  Nothing here calls the simplex or the branch-and-bound.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flexgrid/bilinear.hpp"
#include "flexgrid/feeder.hpp"
#include "flexgrid/follower.hpp"
#include "flexgrid/lp.hpp"

namespace flexgrid::testing {

std::filesystem::path data_file(const std::string& name);
/// Every feeder file under data/.
std::vector<std::filesystem::path> corpus();

// ---- LP oracle ------------------------------------------------------------

/// Random bounded LP with a mix of <=, >= and = rows, sized so that vertex
/// enumeration stays cheap.  Roughly one in eight is infeasible.
LinearProgram random_lp(std::mt19937_64& rng, std::size_t max_vars = 12);

struct EnumeratedOptimum {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

/// Optimum of a box-bounded LP by enumerating every basic solution: pick the
/// active rows, put the remaining free directions on bounds, solve the
/// square system with Eigen, keep the best feasible one.
EnumeratedOptimum enumerate_vertices(const LinearProgram& lp, double feas_tol = 1e-9);

// ---- bilinear oracle ------------------------------------------------------

/// max c'x over a box subject to rows whose products all involve x[0] (a
/// "star" pattern).  For fixed x[0] the problem is a two-variable LP.
struct StarBilinear {
  BilinearProgram bp;
};
StarBilinear random_star_bilinear(std::mt19937_64& rng);

/// Dense grid on x[0] with successive refinement around the incumbent; the
/// remaining two variables are solved exactly by 2-D vertex enumeration.
/// Returns nullopt when no grid point is feasible.
std::optional<double> grid_search(const StarBilinear& inst, int points = 4001, int refinements = 6);

// ---- feeders --------------------------------------------------------------

struct RandomFeeder {
  FeederModel model;
  VoltageBand band;
};

/// Feeder with `buses` buses including the slack (2..4), random phasing and
/// impedances, at most four flexible devices and a voltage band a little
/// wider than the anchor's spread so that some limits bind.  Retries until
/// the anchor power flow converges inside the band.
RandomFeeder random_feeder(std::mt19937_64& rng, int buses);

}  // namespace flexgrid::testing
