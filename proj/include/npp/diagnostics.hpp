#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "npp/coupling.hpp"
#include "npp/grid.hpp"
#include "npp/model.hpp"

namespace npp {

/// All monitored functionals at one time instant. Quadrature is midpoint
/// (cell-wise) for volume terms, face-based two-point differences for
/// gradients, and the first-order Robin closure for the boundary term.
struct EnergyReport {
  double t = 0.0;
  double free_energy = 0.0;   // V = sum_i int psi(c_i) + (int |grad phi|^2 + int tau phi^2)/2
  double dissipation = 0.0;   // D = sum_i int |J_i|^2 / (d_i c_i), floored (see below)
  std::vector<double> masses; // per species, int c_i
  double eta_lp = 0.0;        // eta * sum_i int c_i^p
  double entropy_l1 = 0.0;    // sum_i int c_i |log c_i|
  double sup_c = 0.0;         // max over species and cells
  double w132_seminorm = 0.0; // sum_i ||grad c_i||_{L^{3/2}}
  double l2_laplacian_phi = 0.0;  // int |lap phi|^2
};

/// Concentration floor below which the 1/c-weighted integrands are set to
/// zero: 1e-12 times the mean initial concentration. The scheme's fluxes
/// vanish with c at a face, so the floor only suppresses 0/0 noise.
double dissipation_floor(const ProblemSpec& spec);

EnergyReport energy_report(const State& state, const ProblemSpec& spec);

std::string diagnostics_csv_header(int num_species);
std::string diagnostics_csv_row(const EnergyReport& report);

struct InequalityCertificate {
  enum class Kind { EntropyDecay, Gronwall, UniformEtaBound, SupBound };
  Kind kind = Kind::EntropyDecay;
  bool holds = false;
  double worst_margin = 0.0;  // holds <=> worst_margin >= -slack
  std::vector<std::pair<std::string, double>> constants_used;
};

/// The concrete growth constant used by the Gronwall certificate:
/// P * C_f * (1 + |Omega| + max(1, eta*p/(p-1) * sup_c^(p-1))).
/// One admissible choice, documented rather than sharp.
double gronwall_constant(const ProblemSpec& spec, double sup_c);

/// With no reactions, certifies per-step decay V^{n+1} <= V^n + slack.
/// With bounded reactions, certifies
/// V^{n+1} - V^n <= dt * C_G * (1 + V^n) + slack.
InequalityCertificate check_entropy_decay(std::span<const EnergyReport> reports,
                                          const ProblemSpec& spec, double slack);

/// Certifies max_t eta_lp <= C_unif across an eta sweep, where C_unif is
/// fixed from the largest-eta run (factor-2 headroom) before looking at
/// the others. Runs must be ordered by decreasing eta.
InequalityCertificate check_uniform_eta_bound(
    std::span<const std::pair<double, std::vector<EnergyReport>>> runs);

/// The four cutoff-weighted dissipation integrals, each summed over species
/// and subject to the same concentration floor as the dissipation.
struct CutoffDissipation {
  double grad_sq_over_c = 0.0;       // int |grad c|^2 / c * zeta^2
  double reg_drift_sq_over_c = 0.0;  // int |eta grad c^p + z c grad phi|^2 / c * zeta^2
  double grad_p_half_sq = 0.0;       // eta * int |grad c^{p/2}|^2 * zeta^2
  double laplacian_sq = 0.0;         // int |lap phi|^2 * zeta^2
};

CutoffDissipation cutoff_dissipation(const State& state, const ProblemSpec& spec,
                                     const CutoffField& zeta);

/// Certifies max_t sup_c <= k_monitor over a trajectory of reports.
InequalityCertificate sup_bound_monitor(std::span<const EnergyReport> reports, double k_monitor);

}  // namespace npp
