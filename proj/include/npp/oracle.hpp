#pragma once

#include <span>
#include <vector>

#include "npp/coupling.hpp"
#include "npp/grid.hpp"
#include "npp/model.hpp"

namespace npp {

/// Steady state with Boltzmann-distributed species: c_i is proportional to
/// exp(-beta*z_i*phi), normalized to the prescribed masses, with phi solving
/// the Robin potential problem for the resulting charge.
struct EquilibriumSolution {
  std::vector<double> phi_eq;
  std::vector<std::vector<double>> c_eq;  // [species][cell]
  double newton_residual = 0.0;
  int iterations = 0;
};

/// Damped Newton with an analytic dense Jacobian. Throws SolverError with
/// the residual history on divergence.
EquilibriumSolution solve_equilibrium(const Grid& grid, std::span<const double> masses,
                                      std::span<const int> charges, const BoundaryData& boundary,
                                      double tol = 1e-12, const PhysicalScales& scales = {});

/// Fully coupled backward-Euler step on a tiny mesh: all species balances
/// and the potential equation solved simultaneously by dense Newton with a
/// central-difference numerical Jacobian (step 1e-6 * scale). No operator
/// splitting; structurally independent of the production path. Requires
/// (P+1)*cells <= 72.
State dense_step_oracle(const State& state, double dt, const ProblemSpec& spec,
                        double newton_tol = 1e-12);

}  // namespace npp
