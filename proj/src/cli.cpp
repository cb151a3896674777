#include "npp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "npp/config.hpp"
#include "npp/continuation.hpp"
#include "npp/diagnostics.hpp"
#include "npp/oracle.hpp"

namespace npp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDiagnosticsSchema = "diagnostics-v1";
constexpr const char* kSweepSchema = "sweep-v1";

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct LoadedConfig {
  RunConfig config;
  ProblemSpec spec;
};

// Parse + structural validation; prints violations and throws ConfigError.
LoadedConfig load_and_validate(const std::string& config_path, const CliFlags& flags) {
  LoadedConfig lc;
  lc.config = RunConfig::parse_file(config_path);
  if (!flags.output_dir.empty()) lc.config.output_directory = flags.output_dir;
  if (flags.jobs > 0) lc.config.jobs = flags.jobs;
  lc.spec = lc.config.build_problem();
  const auto violations = validate(lc.spec);
  if (!violations.empty()) {
    std::string msg = "invalid problem:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ConfigError(msg);
  }
  return lc;
}

void write_snapshot(std::ostream& out, const State& state, const ProblemSpec& spec) {
  for (int i = 0; i < spec.num_species(); ++i) {
    json rec;
    rec["time"] = state.t;
    rec["field"] = "c_" + spec.species[i].name;
    rec["values"] = state.c[i];
    out << rec.dump() << "\n";
  }
  json rec;
  rec["time"] = state.t;
  rec["field"] = "phi";
  rec["values"] = state.phi();
  out << rec.dump() << "\n";
}

const char* kind_name(InequalityCertificate::Kind kind) {
  switch (kind) {
    case InequalityCertificate::Kind::EntropyDecay: return "entropy-decay";
    case InequalityCertificate::Kind::Gronwall: return "gronwall";
    case InequalityCertificate::Kind::UniformEtaBound: return "uniform-eta-bound";
    case InequalityCertificate::Kind::SupBound: return "sup-bound";
  }
  return "?";
}

void print_certificate(std::ostream& out, const std::string& name,
                       const InequalityCertificate& cert) {
  out << "certificate " << name << "\n";
  out << "  kind = " << kind_name(cert.kind) << "\n";
  out << "  holds = " << (cert.holds ? "true" : "false") << "\n";
  out << "  worst_margin = " << fmt(cert.worst_margin) << "\n";
  for (const auto& [k, v] : cert.constants_used) out << "  " << k << " = " << fmt(v) << "\n";
}

struct MassCheck {
  bool holds = true;
  double worst_rel = 0.0;
};

// Telescoped mass identity: mass_i(t) - mass_i(0) - sum of dt*int(f_i).
MassCheck check_mass(const std::vector<EnergyReport>& reports,
                     const std::vector<StepReport>& steps, double tol_rel) {
  MassCheck mc;
  if (reports.empty()) return mc;
  const int P = (int)reports.front().masses.size();
  for (int i = 0; i < P; ++i) {
    const double m0 = reports.front().masses[i];
    const double scale = std::max(std::abs(m0), 1e-30);
    double injected = 0.0;
    for (size_t n = 1; n < reports.size(); ++n) {
      injected += steps[n - 1].reaction_increment.empty() ? 0.0
                                                          : steps[n - 1].reaction_increment[i];
      const double rel = std::abs(reports[n].masses[i] - m0 - injected) / scale;
      mc.worst_rel = std::max(mc.worst_rel, rel);
    }
  }
  mc.holds = mc.worst_rel <= tol_rel;
  return mc;
}

}  // namespace

int cmd_run(const std::string& config_path, const CliFlags& flags) {
  LoadedConfig lc;
  try {
    lc = load_and_validate(config_path, flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const RunConfig& cfg = lc.config;
  const ProblemSpec& spec = lc.spec;

  fs::create_directories(cfg.output_directory);
  std::ofstream csv(fs::path(cfg.output_directory) / "diagnostics.csv");
  std::ofstream ndjson(fs::path(cfg.output_directory) / "snapshots.ndjson");
  csv << diagnostics_csv_header(spec.num_species()) << "\n";

  std::vector<EnergyReport> reports;
  std::vector<StepReport> step_reports;
  const auto output_times = cfg.resolved_output_times();
  size_t next_output = 0;
  bool first = true;

  Observer observer = [&](const State& state, const StepReport& step) {
    reports.push_back(energy_report(state, spec));
    csv << diagnostics_csv_row(reports.back()) << "\n";
    if (!first) step_reports.push_back(step);
    first = false;
    while (next_output < output_times.size() && state.t >= output_times[next_output] - 1e-12) {
      write_snapshot(ndjson, state, spec);
      ++next_output;
    }
  };
  const Observer observers[] = {observer};

  RunOutcome outcome;
  try {
    outcome = run(spec, cfg.dt, observers, cfg.coupling_options());
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
  if (!outcome.completed) {
    std::cerr << "solver error: " << outcome.error << "\n";
    return kExitSolver;
  }

  // Certificates.
  bool all_hold = true;
  std::ofstream summary(fs::path(cfg.output_directory) / "summary.txt");
  summary << "schema = " << kDiagnosticsSchema << "\n";
  summary << "config = " << config_path << "\n";
  summary << "steps = " << outcome.steps << "\n";

  if (cfg.certificates.mass) {
    const auto mc = check_mass(reports, step_reports, cfg.certificates.mass_tol_rel);
    summary << "certificate mass\n  holds = " << (mc.holds ? "true" : "false")
            << "\n  worst_rel_drift = " << fmt(mc.worst_rel)
            << "\n  tol_rel = " << fmt(cfg.certificates.mass_tol_rel) << "\n";
    all_hold = all_hold && mc.holds;
  }
  if (cfg.certificates.entropy && !reports.empty()) {
    const double slack = cfg.certificates.entropy_slack_rel * reports.front().free_energy;
    const auto cert = check_entropy_decay(reports, spec, slack);
    print_certificate(summary, "entropy", cert);
    all_hold = all_hold && cert.holds;
  }
  if (cfg.certificates.sup_bound_k > 0.0) {
    const auto cert = sup_bound_monitor(reports, cfg.certificates.sup_bound_k);
    print_certificate(summary, "sup_bound", cert);
    all_hold = all_hold && cert.holds;
  }

  if (!flags.quiet) {
    std::cout << "run completed: " << outcome.steps << " steps, final t = "
              << fmt(outcome.final_state.t) << ", certificates "
              << (all_hold ? "hold" : "FAILED") << "\n";
  }
  return all_hold ? kExitOk : kExitCertificate;
}

int cmd_sweep(const std::string& config_path, const CliFlags& flags) {
  LoadedConfig lc;
  try {
    lc = load_and_validate(config_path, flags);
    if (lc.config.eta_schedule.empty())
      throw ConfigError("sweep needs a [sweep] section with eta_schedule");
    for (size_t i = 0; i + 1 < lc.config.eta_schedule.size(); ++i) {
      if (!(lc.config.eta_schedule[i] > lc.config.eta_schedule[i + 1]))
        throw ConfigError("eta_schedule must be strictly decreasing");
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const RunConfig& cfg = lc.config;

  SweepOptions opts;
  opts.output_times = cfg.resolved_output_times();
  if (opts.output_times.empty()) {
    std::cerr << "config error: sweep needs output times ([time] outputs or output_times)\n";
    return kExitConfig;
  }
  opts.tk_levels = cfg.tk_levels;
  opts.jobs = cfg.jobs;
  opts.coupling = cfg.coupling_options();

  SweepReport report;
  try {
    report = eta_sweep(lc.spec, cfg.eta_schedule, cfg.dt, opts);
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }

  fs::create_directories(cfg.output_directory);
  std::ofstream csv(fs::path(cfg.output_directory) / "sweep.csv");
  csv << "kind,eta_a,eta_b,l1,sqrt_l2";
  for (double k : report.tk_levels) csv << ",tk_l1_" << fmt(k);
  csv << "\n";
  for (size_t pair = 0; pair < report.pairwise_l1.size(); ++pair) {
    csv << "pair," << fmt(report.eta_schedule[pair]) << "," << fmt(report.eta_schedule[pair + 1])
        << "," << fmt(report.pairwise_l1[pair]) << "," << fmt(report.pairwise_sqrt_l2[pair]);
    for (double v : report.tk_l1[pair]) csv << "," << fmt(v);
    csv << "\n";
  }
  if (!report.pairwise_l1.empty()) {
    csv << "summary," << fmt(report.eta_schedule.front()) << ","
        << fmt(report.eta_schedule.back()) << "," << fmt(report.pairwise_l1.front()) << ","
        << fmt(report.pairwise_l1.back());
    for (size_t i = 0; i < report.tk_levels.size(); ++i) csv << ",";
    csv << "\n";
  }

  std::ofstream summary(fs::path(cfg.output_directory) / "sweep_summary.txt");
  summary << "schema = " << kSweepSchema << "\n";
  summary << "runs = " << report.eta_schedule.size() << "\n";
  summary << "partial = " << (report.partial ? "true" : "false") << "\n";
  for (size_t r = 0; r < report.errors.size(); ++r) {
    if (!report.errors[r].empty())
      summary << "run_error eta=" << fmt(report.eta_schedule[r]) << " : " << report.errors[r]
              << "\n";
  }
  print_certificate(summary, "uniform_eta", report.uniform_bound);

  if (report.partial) {
    std::cerr << "solver error: sweep is partial (a run failed)\n";
    return kExitSolver;
  }

  bool all_hold = true;
  if (cfg.certificates.uniform_eta) all_hold = all_hold && report.uniform_bound.holds;
  if (cfg.certificates.cauchy && report.pairwise_l1.size() >= 2) {
    bool decreasing = true;
    for (size_t i = 0; i + 1 < report.pairwise_l1.size(); ++i)
      decreasing = decreasing && report.pairwise_l1[i + 1] < report.pairwise_l1[i];
    const bool contracted = report.pairwise_l1.back() < report.pairwise_l1.front() / 5.0;
    summary << "certificate cauchy\n  holds = "
            << ((decreasing && contracted) ? "true" : "false")
            << "\n  first_gap = " << fmt(report.pairwise_l1.front())
            << "\n  last_gap = " << fmt(report.pairwise_l1.back()) << "\n";
    all_hold = all_hold && decreasing && contracted;
  }

  if (!flags.quiet)
    std::cout << "sweep completed: " << report.eta_schedule.size() << " runs, certificates "
              << (all_hold ? "hold" : "FAILED") << "\n";
  return all_hold ? kExitOk : kExitCertificate;
}

int cmd_equilibrium(const std::string& config_path, const CliFlags& flags) {
  LoadedConfig lc;
  try {
    lc = load_and_validate(config_path, flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const ProblemSpec& spec = lc.spec;

  std::vector<double> masses;
  std::vector<int> charges;
  for (const auto& s : spec.species) {
    double m = 0.0;
    for (double v : s.initial_concentration) m += v * spec.grid.cell_volume();
    masses.push_back(m);
    charges.push_back(s.charge);
  }

  EquilibriumSolution sol;
  try {
    sol = solve_equilibrium(spec.grid, masses, charges, spec.boundary, 1e-12, spec.scales);
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }

  fs::create_directories(lc.config.output_directory);
  std::ofstream out(fs::path(lc.config.output_directory) / "equilibrium.ndjson");
  for (int i = 0; i < spec.num_species(); ++i) {
    json rec;
    rec["time"] = -1.0;
    rec["field"] = "c_" + spec.species[i].name;
    rec["values"] = sol.c_eq[i];
    out << rec.dump() << "\n";
  }
  json rec;
  rec["time"] = -1.0;
  rec["field"] = "phi";
  rec["values"] = sol.phi_eq;
  out << rec.dump() << "\n";

  if (!flags.quiet)
    std::cout << "equilibrium solved in " << sol.iterations
              << " Newton iterations, residual " << fmt(sol.newton_residual) << "\n";
  return kExitOk;
}

namespace {

struct VerifyRow {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::map<std::string, std::vector<double>> load_ndjson_fields(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing fixture file " + path.string());
  std::map<std::string, std::vector<double>> fields;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("field") || !rec.contains("values"))
      throw std::runtime_error("corrupt ndjson record in " + path.string());
    fields[rec["field"].get<std::string>()] = rec["values"].get<std::vector<double>>();
  }
  return fields;
}

}  // namespace

int cmd_verify(const std::string& fixture_dir, const CliFlags& flags) {
  const fs::path dir(fixture_dir);
  std::vector<VerifyRow> rows;
  bool config_trouble = false;

  // Manufactured-solution convergence order for the potential solve.
  {
    VerifyRow row{"poisson_mms_order", false, ""};
    std::vector<double> errors;
    for (int n : {32, 64, 128}) {
      const auto grid = Grid::build(1, {n}, {1.0});
      BoundaryData bd;
      bd.tau.assign(grid.boundary_faces().size(), 1.0);
      bd.xi.assign(grid.boundary_faces().size(), 0.0);
      // phi*(x) = cos(pi x): zero slope at both ends, xi = tau*phi there.
      bd.xi[0] = 1.0;
      bd.xi[1] = -1.0;
      std::vector<double> charge(grid.num_cells());
      const double pi = std::acos(-1.0);
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
    row.pass = o1 >= 1.8 && o1 <= 2.2 && o2 >= 1.8 && o2 <= 2.2;
    row.detail = "orders " + fmt(o1) + ", " + fmt(o2);
    rows.push_back(row);
  }

  // One advance() against the fully coupled dense Newton step.
  try {
    const auto cfg = RunConfig::parse_file((dir / "oracle_4cell.cfg").string());
    const auto spec = cfg.build_problem();
    auto opts = cfg.coupling_options();
    opts.tol = 1e-11;
    const State s0 = initial_state(spec, opts);
    const auto [split, report] = advance(s0, cfg.dt, spec, opts);
    const State dense = dense_step_oracle(s0, cfg.dt, spec, 1e-12);
    double gap = 0.0;
    for (int i = 0; i < spec.num_species(); ++i)
      for (int k = 0; k < spec.grid.num_cells(); ++k)
        gap = std::max(gap, std::abs(split.c[i][k] - dense.c[i][k]));
    rows.push_back({"oracle_equivalence", gap <= 1e-8, "max gap " + fmt(gap)});
  } catch (const ConfigError& e) {
    rows.push_back({"oracle_equivalence", false, e.what()});
    config_trouble = true;
  } catch (const std::exception& e) {
    rows.push_back({"oracle_equivalence", false, e.what()});
  }

  // Fresh equilibrium solve against the stored golden fields.
  try {
    const auto cfg = RunConfig::parse_file((dir / "equilibrium_1d.cfg").string());
    const auto spec = cfg.build_problem();
    const auto golden = load_ndjson_fields(dir / "equilibrium_1d_golden.ndjson");
    std::vector<double> masses;
    std::vector<int> charges;
    for (const auto& s : spec.species) {
      double m = 0.0;
      for (double v : s.initial_concentration) m += v * spec.grid.cell_volume();
      masses.push_back(m);
      charges.push_back(s.charge);
    }
    const auto sol = solve_equilibrium(spec.grid, masses, charges, spec.boundary);
    double gap = 0.0;
    for (int i = 0; i < spec.num_species(); ++i) {
      const auto it = golden.find("c_" + spec.species[i].name);
      if (it == golden.end() || it->second.size() != sol.c_eq[i].size())
        throw std::runtime_error("golden file lacks field c_" + spec.species[i].name);
      for (size_t k = 0; k < it->second.size(); ++k)
        gap = std::max(gap, std::abs(it->second[k] - sol.c_eq[i][k]));
    }
    const auto it = golden.find("phi");
    if (it == golden.end() || it->second.size() != sol.phi_eq.size())
      throw std::runtime_error("golden file lacks field phi");
    for (size_t k = 0; k < it->second.size(); ++k)
      gap = std::max(gap, std::abs(it->second[k] - sol.phi_eq[k]));
    rows.push_back({"equilibrium_golden", gap <= 1e-9, "max gap " + fmt(gap)});
  } catch (const ConfigError& e) {
    rows.push_back({"equilibrium_golden", false, e.what()});
    config_trouble = true;
  } catch (const std::exception& e) {
    rows.push_back({"equilibrium_golden", false, e.what()});
  }

  // Reference run certificates (entropy decay + mass control).
  try {
    const auto cfg = RunConfig::parse_file((dir / "reference_1d.cfg").string());
    const auto spec = cfg.build_problem();
    std::vector<EnergyReport> reports;
    std::vector<StepReport> steps;
    bool first = true;
    Observer obs = [&](const State& s, const StepReport& r) {
      reports.push_back(energy_report(s, spec));
      if (!first) steps.push_back(r);
      first = false;
    };
    const Observer observers[] = {obs};
    const auto outcome = run(spec, cfg.dt, observers, cfg.coupling_options());
    if (!outcome.completed) throw std::runtime_error(outcome.error);
    const auto mass = check_mass(reports, steps, cfg.certificates.mass_tol_rel);
    const double slack = cfg.certificates.entropy_slack_rel * reports.front().free_energy;
    const auto entropy = check_entropy_decay(reports, spec, slack);
    rows.push_back({"reference_certificates", mass.holds && entropy.holds,
                    "mass drift " + fmt(mass.worst_rel) + ", entropy margin " +
                        fmt(entropy.worst_margin)});
  } catch (const ConfigError& e) {
    rows.push_back({"reference_certificates", false, e.what()});
    config_trouble = true;
  } catch (const std::exception& e) {
    rows.push_back({"reference_certificates", false, e.what()});
  }

  bool all_pass = true;
  for (const auto& row : rows) {
    all_pass = all_pass && row.pass;
    if (!flags.quiet)
      std::cout << (row.pass ? "PASS  " : "FAIL  ") << row.name << "  (" << row.detail << ")\n";
  }
  if (config_trouble) return kExitConfig;
  return all_pass ? kExitOk : kExitCertificate;
}

}  // namespace npp
