#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "npp/grid.hpp"
#include "npp/model.hpp"

namespace npp {

/// Thrown when an iterative or Newton solve fails to converge; carries the
/// residual history for post-mortem inspection.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

struct PotentialSolve {
  std::vector<double> phi;                         // per cell
  std::vector<double> grad_phi;                    // per interior face: (phi_b - phi_a)/spacing
  std::vector<double> boundary_normal_derivative;  // per boundary face: xi - tau*phi_cell
  double residual_norm = 0.0;                      // max-norm of b - A*phi
  int iterations = 0;
};

/// y = A*phi for the finite-volume Robin-Laplacian: interior two-point
/// fluxes plus tau-weighted boundary closure, scaled by epsilon. Symmetric
/// positive definite whenever tau >= 0 with tau > 0 somewhere.
std::vector<double> apply_potential_operator(const Grid& grid, const BoundaryData& boundary,
                                             std::span<const double> phi, double epsilon = 1.0);

/// Solves  epsilon * (-lap phi) = charge  with Robin faces
/// d_nu(phi) + tau*phi = xi, by Jacobi-preconditioned conjugate gradients.
/// `tol` is relative to the max-norm of the assembled right side.
/// Rejects tau identically zero before assembly; non-convergence throws
/// SolverError with the residual history.
PotentialSolve solve_potential(const Grid& grid, std::span<const double> charge_density,
                               const BoundaryData& boundary, double tol = 1e-10,
                               double epsilon = 1.0, std::span<const double> initial_guess = {});

/// Discrete Laplacian of phi with the same stencil as solve_potential's
/// assembly (Robin closure on boundary faces).
std::vector<double> laplacian_of(const Grid& grid, std::span<const double> phi,
                                 const BoundaryData& boundary);

}  // namespace npp
