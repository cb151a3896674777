#include "npp/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace npp {

namespace {

std::vector<double> charge_density(const ProblemSpec& spec,
                                   const std::vector<std::vector<double>>& c) {
  const int n = spec.grid.num_cells();
  std::vector<double> rho(n, 0.0);
  for (int i = 0; i < spec.num_species(); ++i) {
    const double fz = spec.scales.faraday * spec.species[i].charge;
    if (fz == 0.0) continue;
    for (int k = 0; k < n; ++k) rho[k] += fz * c[i][k];
  }
  return rho;
}

std::vector<double> diffusivity_field(const ProblemSpec& spec, int species, double t) {
  const Grid& grid = spec.grid;
  std::vector<double> d(grid.num_cells());
  for (int k = 0; k < grid.num_cells(); ++k)
    d[k] = spec.species[species].diffusivity.eval(t, grid.cell_center(k), grid.dimension());
  return d;
}

// Reaction rates lagged at the pre-step state.
std::vector<std::vector<double>> reaction_rates(const ProblemSpec& spec, const State& state) {
  const Grid& grid = spec.grid;
  const int P = spec.num_species();
  std::vector<std::vector<double>> rates(P, std::vector<double>(grid.num_cells(), 0.0));
  if (spec.reactions.kind() == ReactionSpec::Kind::None) return rates;
  std::vector<double> c_local(P), f_local(P);
  for (int k = 0; k < grid.num_cells(); ++k) {
    for (int i = 0; i < P; ++i) c_local[i] = state.c[i][k];
    spec.reactions.eval(state.t, grid.cell_center(k), c_local, f_local);
    for (int i = 0; i < P; ++i) rates[i][k] = f_local[i];
  }
  return rates;
}

std::vector<std::vector<double>> step_all_species(
    const State& state, const std::vector<double>& phi,
    const std::vector<std::vector<double>>& rates,
    const std::vector<std::vector<double>>& d_fields, double dt, const ProblemSpec& spec,
    const CouplingOptions& opts) {
  const int P = spec.num_species();
  SpeciesStepOptions sopts = opts.species;
  sopts.beta = spec.scales.beta();
  std::vector<std::vector<double>> c_new(P);

  auto solve_one = [&](int i) {
    return species_step(spec.grid, state.c[i], phi, d_fields[i], spec.species[i].charge,
                        rates[i], spec.regularization, dt, sopts);
  };

  if (opts.parallel_species && P > 1) {
    std::vector<std::future<std::vector<double>>> futures;
    futures.reserve(P - 1);
    for (int i = 1; i < P; ++i)
      futures.push_back(std::async(std::launch::async, solve_one, i));
    c_new[0] = solve_one(0);
    for (int i = 1; i < P; ++i) c_new[i] = futures[i - 1].get();
  } else {
    for (int i = 0; i < P; ++i) c_new[i] = solve_one(i);
  }
  return c_new;
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

std::pair<std::vector<std::vector<double>>, PotentialSolve> fixed_point_map(
    const State& state, double dt, const ProblemSpec& spec, const CouplingOptions& opts) {
  const auto rates = reaction_rates(spec, state);
  std::vector<std::vector<double>> d_fields(spec.num_species());
  for (int i = 0; i < spec.num_species(); ++i)
    d_fields[i] = diffusivity_field(spec, i, state.t + dt);
  auto c_new = step_all_species(state, state.phi(), rates, d_fields, dt, spec, opts);
  auto rho = charge_density(spec, c_new);
  auto potential = solve_potential(spec.grid, rho, spec.boundary, opts.poisson_tol,
                                   spec.scales.permittivity, state.phi());
  return {std::move(c_new), std::move(potential)};
}

std::pair<State, StepReport> advance(const State& state, double dt, const ProblemSpec& spec,
                                     const CouplingOptions& opts) {
  if (!(opts.damping > 0.0 && opts.damping <= 1.0))
    throw std::invalid_argument("advance: damping must lie in (0,1]");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("advance: tol must be positive");

  const int P = spec.num_species();
  const double vol = spec.grid.cell_volume();

  const auto rates = reaction_rates(spec, state);
  std::vector<std::vector<double>> d_fields(P);
  for (int i = 0; i < P; ++i) d_fields[i] = diffusivity_field(spec, i, state.t + dt);

  StepReport report;
  report.dt_used = dt;
  report.reaction_increment.assign(P, 0.0);
  for (int i = 0; i < P; ++i) {
    double sum = 0.0;
    for (double r : rates[i]) sum += r;
    report.reaction_increment[i] = dt * vol * sum;
  }

  std::vector<double> phi_k = state.phi();
  for (int k = 0; k < opts.max_iter; ++k) {
    auto c_k = step_all_species(state, phi_k, rates, d_fields, dt, spec, opts);
    auto rho = charge_density(spec, c_k);
    auto solve = solve_potential(spec.grid, rho, spec.boundary, opts.poisson_tol,
                                 spec.scales.permittivity, phi_k);
    const double residual = max_diff(solve.phi, phi_k);
    const double update = opts.damping * residual;
    report.phi_update_norms.push_back(update);
    report.fixed_point_iterations = k + 1;
    if (update <= opts.tol) {
      report.converged = true;
      State next;
      next.t = state.t + dt;
      next.c = std::move(c_k);
      next.potential = std::move(solve);
      return {std::move(next), std::move(report)};
    }
    for (size_t j = 0; j < phi_k.size(); ++j)
      phi_k[j] = (1.0 - opts.damping) * phi_k[j] + opts.damping * solve.phi[j];
  }
  throw SolverError("coupling fixed point did not converge in " +
                        std::to_string(opts.max_iter) + " iterations",
                    report.phi_update_norms);
}

State initial_state(const ProblemSpec& spec, const CouplingOptions& opts) {
  State state;
  state.t = 0.0;
  state.c.resize(spec.num_species());
  for (int i = 0; i < spec.num_species(); ++i)
    state.c[i] = spec.species[i].initial_concentration;
  auto rho = charge_density(spec, state.c);
  state.potential = solve_potential(spec.grid, rho, spec.boundary, opts.poisson_tol,
                                    spec.scales.permittivity);
  return state;
}

namespace {

// Retries a failed step as two half steps, up to `depth` levels deep.
std::pair<State, StepReport> advance_with_halving(const State& state, double dt,
                                                  const ProblemSpec& spec,
                                                  const CouplingOptions& opts, int depth) {
  try {
    return advance(state, dt, spec, opts);
  } catch (const SolverError&) {
    if (!opts.allow_dt_halving || depth <= 0) throw;
  }
  auto [mid, r1] = advance_with_halving(state, 0.5 * dt, spec, opts, depth - 1);
  auto [end, r2] = advance_with_halving(mid, 0.5 * dt, spec, opts, depth - 1);
  StepReport merged;
  merged.dt_used = dt;
  merged.converged = true;
  merged.fixed_point_iterations = r1.fixed_point_iterations + r2.fixed_point_iterations;
  merged.phi_update_norms = std::move(r1.phi_update_norms);
  merged.phi_update_norms.insert(merged.phi_update_norms.end(), r2.phi_update_norms.begin(),
                                 r2.phi_update_norms.end());
  merged.reaction_increment.assign(r1.reaction_increment.size(), 0.0);
  for (size_t i = 0; i < merged.reaction_increment.size(); ++i)
    merged.reaction_increment[i] = r1.reaction_increment[i] + r2.reaction_increment[i];
  return {std::move(end), std::move(merged)};
}

}  // namespace

RunOutcome run(const ProblemSpec& spec, double dt, std::span<const Observer> observers,
               const CouplingOptions& opts) {
  if (!(dt > 0.0)) throw std::invalid_argument("run: dt must be positive");
  RunOutcome outcome;
  State state = initial_state(spec, opts);

  StepReport initial_report;
  initial_report.converged = true;
  initial_report.reaction_increment.assign(spec.num_species(), 0.0);
  for (const auto& obs : observers) obs(state, initial_report);

  const double t_end = spec.final_time;
  while (state.t < t_end - 1e-14 * std::max(1.0, t_end)) {
    const double step_dt = std::min(dt, t_end - state.t);
    try {
      auto [next, report] = advance_with_halving(state, step_dt, spec, opts, 3);
      state = std::move(next);
      ++outcome.steps;
      for (const auto& obs : observers) obs(state, report);
    } catch (const SolverError& err) {
      outcome.error = err.what();
      outcome.final_state = std::move(state);
      return outcome;
    }
  }
  outcome.completed = true;
  outcome.final_state = std::move(state);
  return outcome;
}

}  // namespace npp
