#pragma once

#include <span>
#include <string>
#include <vector>

#include "npp/coupling.hpp"
#include "npp/diagnostics.hpp"
#include "npp/model.hpp"

namespace npp {

/// Smooth concave truncation: identity below k, constant k + 1/2 above
/// k + 1, joined by the C2 concave blend k + t - t^3 + t^4/2 on (k, k+1].
/// 0 <= derivative <= 1 everywhere. Requires r >= 0 and k >= 2.
double smooth_truncate(double r, double k);

/// Concentration snapshots of one run at the common output times.
struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<std::vector<double>>> concentrations;  // [snap][species][cell]
};

struct SweepOptions {
  std::vector<double> output_times;       // common snapshot grid, strictly increasing
  std::vector<double> tk_levels{4.0, 16.0, 256.0};
  int jobs = 0;                           // 0 = hardware concurrency
  CouplingOptions coupling;
};

struct SweepReport {
  std::vector<double> eta_schedule;
  std::vector<double> pairwise_l1;       // L1(Q_T) distance between consecutive runs
  std::vector<double> pairwise_sqrt_l2;  // L2(Q_T) distance between sqrt(c) trajectories
  std::vector<double> tk_levels;
  std::vector<std::vector<double>> tk_l1;  // [pair][level]
  InequalityCertificate uniform_bound;
  bool partial = false;
  std::vector<std::string> errors;  // per run, empty string when the run completed
  std::vector<Trajectory> trajectories;
  std::vector<std::vector<EnergyReport>> reports;  // per run
};

/// Runs the solver over a strictly decreasing eta schedule (everything else
/// pinned) and measures Cauchy behaviour of the solutions. Distances use
/// midpoint quadrature in space and interval weights in time on the shared
/// output grid; no interpolation between runs.
SweepReport eta_sweep(const ProblemSpec& spec, std::span<const double> eta_schedule, double dt,
                      const SweepOptions& opts);

struct ContinuityProfile {
  double k = 0.0;
  double max_jump = 0.0;    // max adjacent-time L1 jump of the truncated field
  double max_tail = 0.0;    // max_t sum_i int_{c_i >= k} c_i
  double tail_bound = 0.0;  // entropy_l1_max / log k
};

/// Per-level time-continuity moduli and tail masses of a stored trajectory.
/// entropy_l1_max is the trajectory's max of sum_i int c_i |log c_i|.
std::vector<ContinuityProfile> l1_continuity_profile(const Trajectory& trajectory,
                                                     const Grid& grid,
                                                     std::span<const double> ks,
                                                     double entropy_l1_max);

}  // namespace npp
