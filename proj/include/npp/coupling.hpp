#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "npp/model.hpp"
#include "npp/poisson.hpp"
#include "npp/transport.hpp"

namespace npp {

/// Discrete trajectory point: nonnegative concentration fields plus the
/// potential solve consistent with them.
struct State {
  double t = 0.0;
  std::vector<std::vector<double>> c;  // [species][cell]
  PotentialSolve potential;

  const std::vector<double>& phi() const { return potential.phi; }
};

struct StepReport {
  int fixed_point_iterations = 0;
  std::vector<double> phi_update_norms;  // max-norm of phi^{k+1} - phi^k per iteration
  double dt_used = 0.0;
  bool converged = false;
  std::vector<double> reaction_increment;  // dt * integral of f_i at the lagged state
};

struct CouplingOptions {
  double damping = 0.8;  // theta in (0,1]
  double tol = 1e-9;     // on the damped potential update, max-norm
  int max_iter = 200;
  double poisson_tol = 1e-10;
  SpeciesStepOptions species;
  bool parallel_species = true;
  bool allow_dt_halving = false;
};

/// One application of the coupling map: advance every species against the
/// frozen state potential, then re-solve the potential from the new charge.
std::pair<std::vector<std::vector<double>>, PotentialSolve> fixed_point_map(
    const State& state, double dt, const ProblemSpec& spec, const CouplingOptions& opts = {});

/// Damped Picard iteration phi^{k+1} = (1-theta)phi^k + theta*T(phi^k),
/// accepted when the update max-norm drops below opts.tol. The accepted
/// state carries the concentrations of the last map application and the
/// potential solved from them, so the pair satisfies the discrete Poisson
/// equation exactly (to solver tolerance).
std::pair<State, StepReport> advance(const State& state, double dt, const ProblemSpec& spec,
                                     const CouplingOptions& opts = {});

/// Solves the initial potential from the initial concentrations.
State initial_state(const ProblemSpec& spec, const CouplingOptions& opts = {});

using Observer = std::function<void(const State&, const StepReport&)>;

struct RunOutcome {
  bool completed = false;
  std::string error;
  int steps = 0;
  State final_state;
};

/// Advances from t=0 to spec.final_time with fixed dt (last step clipped),
/// invoking every observer after each accepted step and once for the
/// initial state. A step failure aborts the run; observers have already
/// seen the partial trajectory.
RunOutcome run(const ProblemSpec& spec, double dt, std::span<const Observer> observers,
               const CouplingOptions& opts = {});

}  // namespace npp
