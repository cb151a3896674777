#pragma once

#include <span>
#include <vector>

#include "npp/grid.hpp"
#include "npp/model.hpp"
#include "npp/poisson.hpp"

namespace npp {

/// Bernoulli function x/(e^x - 1) with B(0) = 1; strictly positive.
double bernoulli(double x);

/// Exact additive split of one face flux (per unit area, oriented from the
/// left/low cell to the right/high cell). total() reproduces the
/// Scharfetter-Gummel flux plus the central discretization of the
/// regularization term bit-for-bit.
struct FaceFluxParts {
  double diffusive;       // -d * S(x) * grad c, with the SG enhancement S = (B(x)+B(-x))/2
  double drift;           // -d * beta*z * mean(c) * grad phi
  double regularization;  // -d * eta * grad(c^p), central
  double total() const { return diffusive + drift + regularization; }
};

/// dphi is the potential difference phi_right - phi_left across the face.
/// At the Boltzmann ratio c_right = c_left * exp(-beta*z*dphi) the total
/// linear flux vanishes identically.
FaceFluxParts face_flux(double c_left, double c_right, double dphi, double d_face, int z,
                        const Regularization& reg, double spacing, double beta = 1.0);

/// Per-interior-face flux field for a species; boundary faces carry zero
/// flux by construction and are not stored.
struct FluxField {
  std::vector<double> total;
  std::vector<double> diffusive;
  std::vector<double> drift;
  std::vector<double> regularization;
};

FluxField species_flux(const Grid& grid, std::span<const double> c, std::span<const double> phi,
                       std::span<const double> d_cell, int z, const Regularization& reg,
                       double beta = 1.0);

struct SpeciesStepOptions {
  double inner_tol = 1e-11;  // max-norm of the inner update
  int inner_max_iter = 50;
  double beta = 1.0;  // drift scale F/(R*T)
};

/// One backward-Euler step of the species balance against a frozen
/// potential. The eta-nonlinearity is handled by Newton with its full
/// Jacobian, falling back to a lagged-coefficient Picard iteration if a
/// Newton iterate leaves the nonnegative cone. The reaction contribution
/// `rate` is the already-evaluated (lagged) source per cell.
///
/// Results more negative than -1e-13 throw SolverError: that is a scheme
/// bug, never something to clip.
std::vector<double> species_step(const Grid& grid, std::span<const double> c_old,
                                 std::span<const double> phi, std::span<const double> d_cell,
                                 int z, std::span<const double> rate, const Regularization& reg,
                                 double dt, const SpeciesStepOptions& opts = {});

}  // namespace npp
