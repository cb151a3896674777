// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "npp/config.hpp"
#include "npp/continuation.hpp"
#include "npp/diagnostics.hpp"
#include "npp/oracle.hpp"

using namespace npp;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::printf("%s  C%02d %-22s %s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct RunArtifacts {
  RunConfig config;
  ProblemSpec spec;
  std::vector<EnergyReport> reports;
  std::vector<StepReport> steps;
  Trajectory trajectory;  // at output times
  State final_state;
  bool completed = false;
  std::string error;
};

RunArtifacts execute(const std::string& fixture_dir, const std::string& name) {
  RunArtifacts art;
  art.config = RunConfig::parse_file(fixture_dir + "/" + name);
  art.spec = art.config.build_problem();
  const auto output_times = art.config.resolved_output_times();
  size_t next_output = 0;
  bool first = true;
  Observer obs = [&](const State& state, const StepReport& step) {
    art.reports.push_back(energy_report(state, art.spec));
    if (!first) art.steps.push_back(step);
    first = false;
    while (next_output < output_times.size() && state.t >= output_times[next_output] - 1e-12) {
      art.trajectory.times.push_back(state.t);
      art.trajectory.concentrations.push_back(state.c);
      ++next_output;
    }
  };
  const Observer observers[] = {obs};
  auto outcome = run(art.spec, art.config.dt, observers, art.config.coupling_options());
  art.completed = outcome.completed;
  art.error = outcome.error;
  art.final_state = std::move(outcome.final_state);
  return art;
}

double mass_drift(const RunArtifacts& art) {
  double worst = 0.0;
  const int P = art.spec.num_species();
  for (int i = 0; i < P; ++i) {
    const double m0 = art.reports.front().masses[i];
    double injected = 0.0;
    for (size_t n = 1; n < art.reports.size(); ++n) {
      injected += art.steps[n - 1].reaction_increment[i];
      worst = std::max(worst,
                       std::abs(art.reports[n].masses[i] - m0 - injected) / std::abs(m0));
    }
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string fixtures = argc > 1 ? argv[1] : std::string(NPP_SOURCE_DIR) + "/fixtures";
  const auto wall_start = std::chrono::steady_clock::now();

  // Shared runs.
  auto minimal = execute(fixtures, "minimal_diffusion.cfg");
  auto ref1d = execute(fixtures, "reference_1d.cfg");
  auto ref2d = execute(fixtures, "reference_2d.cfg");
  auto reaction = execute(fixtures, "reaction_1d.cfg");
  auto equilibrium_run = execute(fixtures, "equilibrium_1d.cfg");

  // 1. Mass control on every shipped run config.
  {
    bool pass = true;
    double worst_f0 = 0.0;
    for (const auto* art : {&minimal, &ref1d, &ref2d, &equilibrium_run}) {
      pass = pass && art->completed;
      worst_f0 = std::max(worst_f0, mass_drift(*art));
    }
    pass = pass && worst_f0 <= 1e-10;
    const double worst_f = mass_drift(reaction);
    pass = pass && reaction.completed && worst_f <= 1e-9;
    report(1, "mass-control", pass,
           "f=0 drift " + fmt(worst_f0) + " (tol 1e-10), reaction identity " + fmt(worst_f) +
               " (tol 1e-9)");
  }

  // 2. Entropy decay on the 1d and 2d reference runs.
  {
    bool pass = true;
    std::string detail;
    for (const auto* art : {&ref1d, &ref2d}) {
      const double slack = 1e-8 * art->reports.front().free_energy;
      const auto cert = check_entropy_decay(art->reports, art->spec, slack);
      pass = pass && art->completed && cert.holds;
      detail += (detail.empty() ? "margins " : ", ") + fmt(cert.worst_margin);
    }
    report(2, "entropy-decay", pass, detail + " (slack 1e-8*V0)");
  }

  // 3. Gronwall bound with the bounded reversible reaction.
  {
    const double slack = 1e-8 * reaction.reports.front().free_energy;
    const auto cert = check_entropy_decay(reaction.reports, reaction.spec, slack);
    report(3, "gronwall-reaction", reaction.completed && cert.holds,
           "margin " + fmt(cert.worst_margin) + ", C_G " +
               fmt(cert.constants_used.size() > 1 ? cert.constants_used[1].second : 0.0));
  }

  // 4 & 5. Uniform-in-eta bound and Cauchy contraction over the sweep.
  {
    auto cfg = RunConfig::parse_file(fixtures + "/sweep_1d.cfg");
    auto spec = cfg.build_problem();
    SweepOptions opts;
    opts.output_times = cfg.resolved_output_times();
    opts.tk_levels = cfg.tk_levels;
    opts.coupling = cfg.coupling_options();
    const auto sweep = eta_sweep(spec, cfg.eta_schedule, cfg.dt, opts);

    report(4, "uniform-eta-bound", !sweep.partial && sweep.uniform_bound.holds,
           "margin " + fmt(sweep.uniform_bound.worst_margin));

    bool decreasing = !sweep.partial && sweep.pairwise_l1.size() >= 2;
    for (size_t i = 0; i + 1 < sweep.pairwise_l1.size(); ++i)
      decreasing = decreasing && sweep.pairwise_l1[i + 1] < sweep.pairwise_l1[i];
    const bool contracted =
        decreasing && sweep.pairwise_l1.back() < sweep.pairwise_l1.front() / 5.0;
    report(5, "eta-cauchy", decreasing && contracted,
           sweep.pairwise_l1.empty()
               ? "sweep failed"
               : "first gap " + fmt(sweep.pairwise_l1.front()) + ", last " +
                     fmt(sweep.pairwise_l1.back()));
  }

  // 6. Long-time state matches the Poisson-Boltzmann oracle; fluxes vanish
  //    at the oracle state.
  {
    const auto& spec = equilibrium_run.spec;
    std::vector<double> masses;
    std::vector<int> charges;
    for (const auto& s : spec.species) {
      double m = 0.0;
      for (double v : s.initial_concentration) m += spec.grid.cell_volume() * v;
      masses.push_back(m);
      charges.push_back(s.charge);
    }
    const auto oracle = solve_equilibrium(spec.grid, masses, charges, spec.boundary, 1e-12);
    double l1 = 0.0;
    for (int i = 0; i < spec.num_species(); ++i) {
      double gap = 0.0;
      for (int k = 0; k < spec.grid.num_cells(); ++k)
        gap += spec.grid.cell_volume() *
               std::abs(equilibrium_run.final_state.c[i][k] - oracle.c_eq[i][k]);
      l1 = std::max(l1, gap);
    }
    double flux_max = 0.0;
    const std::vector<double> d(spec.grid.num_cells(), 1.0);
    for (int i = 0; i < spec.num_species(); ++i) {
      const auto flux =
          species_flux(spec.grid, oracle.c_eq[i], oracle.phi_eq, d, charges[i], {0.0, 2.0});
      for (double j : flux.total) flux_max = std::max(flux_max, std::abs(j));
    }
    report(6, "boltzmann-equilibrium",
           equilibrium_run.completed && l1 <= 1e-6 && flux_max <= 1e-11,
           "L1 gap " + fmt(l1) + " (tol 1e-6), oracle flux " + fmt(flux_max) + " (tol 1e-11)");
  }

  // 7. One modular step equals the fully coupled dense Newton step.
  {
    bool pass = true;
    double worst = 0.0;
    for (const char* name : {"oracle_4cell.cfg", "oracle_8cell.cfg"}) {
      auto cfg = RunConfig::parse_file(fixtures + "/" + name);
      auto spec = cfg.build_problem();
      auto opts = cfg.coupling_options();
      opts.tol = 1e-11;
      const auto s0 = initial_state(spec, opts);
      const auto [split, rep] = advance(s0, cfg.dt, spec, opts);
      const auto dense = dense_step_oracle(s0, cfg.dt, spec, 1e-12);
      for (int i = 0; i < spec.num_species(); ++i)
        for (int k = 0; k < spec.grid.num_cells(); ++k)
          worst = std::max(worst, std::abs(split.c[i][k] - dense.c[i][k]));
      pass = pass && rep.converged;
    }
    report(7, "oracle-equivalence", pass && worst <= 1e-8,
           "max gap " + fmt(worst) + " (tol 1e-8)");
  }

  // 8. Manufactured-solution order for the potential solve.
  {
    const double pi = std::acos(-1.0);
    std::vector<double> errors;
    for (int n : {32, 64, 128}) {
      const auto grid = Grid::build(1, {n}, {1.0});
      BoundaryData bd;
      bd.tau.assign(grid.boundary_faces().size(), 1.0);
      bd.xi.assign(grid.boundary_faces().size(), 0.0);
      bd.xi[0] = 1.0;
      bd.xi[1] = -1.0;
      std::vector<double> charge(grid.num_cells());
      for (int c = 0; c < grid.num_cells(); ++c)
        charge[c] = pi * pi * std::cos(pi * grid.cell_center(c)[0]);
      const auto sol = solve_potential(grid, charge, bd, 1e-12);
      double l2 = 0.0;
      for (int c = 0; c < grid.num_cells(); ++c) {
        const double e = sol.phi[c] - std::cos(pi * grid.cell_center(c)[0]);
        l2 += e * e * grid.cell_volume();
      }
      errors.push_back(std::sqrt(l2));
    }
    const double o1 = std::log2(errors[0] / errors[1]);
    const double o2 = std::log2(errors[1] / errors[2]);
    const bool pass = o1 >= 1.8 && o1 <= 2.2 && o2 >= 1.8 && o2 <= 2.2;
    report(8, "poisson-mms-order", pass, "orders " + fmt(o1) + ", " + fmt(o2));
  }

  // 9. Nonnegativity under 200 randomized trials.
  {
    const std::uint64_t seed = 20240811;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    bool pass = true;
    double worst_min = 0.0;
    int failing_trial = -1;
    for (int trial = 0; trial < 200 && pass; ++trial) {
      const int n = 4 + (int)(12 * u01(rng));
      const auto grid = Grid::build(1, {n}, {1.0});
      std::vector<double> c(n), phi(n), d(n);
      for (auto& v : c) v = u01(rng) < 0.25 ? 0.0 : 3.0 * u01(rng);
      for (auto& v : phi) v = 4.0 * (u01(rng) - 0.5);
      for (auto& v : d) v = 0.1 + 2.0 * u01(rng);
      const double dt = std::pow(10.0, -4.0 + 3.0 * u01(rng));  // [1e-4, 1e-1]
      const int z = (int)std::lround(4.0 * u01(rng)) - 2;
      const Regularization reg{u01(rng) < 0.4 ? 0.0 : 0.5 * u01(rng),
                               u01(rng) < 0.5 ? 2.0 : 3.0};
      const auto c_new = species_step(grid, c, phi, d, z, {}, reg, dt);
      for (double v : c_new) worst_min = std::min(worst_min, v);
      if (worst_min < -1e-13) {
        pass = false;
        failing_trial = trial;
      }
    }
    report(9, "nonnegativity", pass,
           pass ? "200 trials, min " + fmt(worst_min)
                : "FAILED at trial " + std::to_string(failing_trial) + " seed " +
                      std::to_string(seed) + ", min " + fmt(worst_min));
  }

  // 10. Function identities: h' = r*psi'', truncation properties, tail bound.
  {
    bool pass = true;
    std::string what;

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> logu(std::log(1e-8), std::log(1e8));
    for (const Regularization reg :
         {Regularization{0.0, 2.0}, Regularization{0.3, 2.0}, Regularization{0.05, 3.5}}) {
      for (int i = 0; i < 500; ++i) {
        const double r = std::exp(logu(rng));
        const double rhs = diffusion_transform_prime(r, reg);
        if (std::abs(r * entropy_density_second(r, reg) - rhs) > 1e-12 * rhs) {
          pass = false;
          what = "h'=r*psi'' failed at r=" + fmt(r);
        }
      }
    }

    if (std::abs(smooth_truncate(1.0, 2.0) - 1.0) > 0.0 ||
        std::abs(smooth_truncate(5.0, 2.0) - 2.5) > 0.0 ||
        std::abs(smooth_truncate(2.5, 2.0) - 2.40625) > 1e-15) {
      pass = false;
      what = "truncation values";
    }
    double prev = smooth_truncate(0.0, 2.0);
    double prev_slope = 2.0;
    const double h = 1e-3;
    for (double r = h; r <= 4.5; r += h) {
      const double v = smooth_truncate(r, 2.0);
      const double slope = (v - prev) / h;
      if (v < prev - 1e-14 || slope > 1.0 + 1e-9 || slope > prev_slope + 1e-6) {
        pass = false;
        what = "truncation monotone/Lipschitz/concave";
      }
      prev = v;
      prev_slope = slope;
    }
    for (double joint : {2.0, 3.0}) {
      const double l = (smooth_truncate(joint - 2 * h, 2.0) -
                        2 * smooth_truncate(joint - h, 2.0) + smooth_truncate(joint, 2.0)) /
                       (h * h);
      const double r = (smooth_truncate(joint, 2.0) - 2 * smooth_truncate(joint + h, 2.0) +
                        smooth_truncate(joint + 2 * h, 2.0)) /
                       (h * h);
      if (std::abs(l - r) > 20 * h) {
        pass = false;
        what = "truncation C2 joins";
      }
    }

    // Tail bound on the stored 1d reference trajectory.
    double entropy_max = 0.0;
    for (const auto& rep : ref1d.reports) entropy_max = std::max(entropy_max, rep.entropy_l1);
    const double ks[] = {4.0, 16.0, 256.0};
    for (const auto& row :
         l1_continuity_profile(ref1d.trajectory, ref1d.spec.grid, ks, entropy_max)) {
      if (row.max_tail > row.tail_bound + 1e-14) {
        pass = false;
        what = "tail bound at k=" + fmt(row.k);
      }
    }
    report(10, "function-identities", pass, pass ? "identity, truncation, tail all hold" : what);
  }

  // 11. W^{1,3/2} and Laplacian diagnostics stay bounded under refinement
  //     of the 2d reference run.
  {
    auto cfg = RunConfig::parse_file(fixtures + "/reference_2d.cfg");
    std::vector<double> w132_int, lap_int;
    bool completed = true;
    for (int n : {32, 64, 128}) {
      auto refined = cfg;
      refined.cells = {n, n};
      auto spec = refined.build_problem();
      std::vector<EnergyReport> reports;
      Observer obs = [&](const State& s, const StepReport&) {
        reports.push_back(energy_report(s, spec));
      };
      const Observer observers[] = {obs};
      const auto outcome = run(spec, refined.dt, observers, refined.coupling_options());
      completed = completed && outcome.completed;
      double wi = 0.0, li = 0.0;
      for (size_t k = 1; k < reports.size(); ++k) {
        const double dt = reports[k].t - reports[k - 1].t;
        wi += dt * reports[k].w132_seminorm;
        li += dt * reports[k].l2_laplacian_phi;
      }
      w132_int.push_back(wi);
      lap_int.push_back(li);
    }
    const double wr = w132_int.back() / w132_int.front();
    const double lr = lap_int.back() / lap_int.front();
    const bool pass = completed && wr <= 2.0 && lr <= 2.0 && wr >= 0.25 && lr >= 0.25;
    report(11, "refinement-diagnostics", pass,
           "w132 ratio " + fmt(wr) + ", laplacian ratio " + fmt(lr) + " (tol <= 2)");
  }

  const auto wall =
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() -
                                                       wall_start)
          .count();
  std::printf("%d/11 criteria passed in %llds\n", 11 - g_failures, (long long)wall);
  return g_failures == 0 ? 0 : 1;
}
