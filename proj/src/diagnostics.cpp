#include "npp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "npp/poisson.hpp"
#include "npp/transport.hpp"

namespace npp {

namespace {

double harmonic_mean(double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

std::vector<double> diffusivity_at(const ProblemSpec& spec, int species, double t) {
  const Grid& grid = spec.grid;
  std::vector<double> d(grid.num_cells());
  for (int k = 0; k < grid.num_cells(); ++k)
    d[k] = spec.species[species].diffusivity.eval(t, grid.cell_center(k), grid.dimension());
  return d;
}

}  // namespace

double dissipation_floor(const ProblemSpec& spec) {
  double total = 0.0;
  long count = 0;
  for (const auto& s : spec.species) {
    for (double v : s.initial_concentration) total += v;
    count += (long)s.initial_concentration.size();
  }
  if (count == 0) return 0.0;
  return 1e-12 * (total / count);
}

EnergyReport energy_report(const State& state, const ProblemSpec& spec) {
  const Grid& grid = spec.grid;
  const auto& reg = spec.regularization;
  const int P = spec.num_species();
  const double vol = grid.cell_volume();
  const double floor = dissipation_floor(spec);
  const double beta = spec.scales.beta();

  EnergyReport rep;
  rep.t = state.t;
  rep.masses.assign(P, 0.0);

  // Volume terms.
  double psi_sum = 0.0;
  for (int i = 0; i < P; ++i) {
    const auto& c = state.c[i];
    double mass = 0.0, clp = 0.0, clogc = 0.0;
    for (double v : c) {
      psi_sum += entropy_density(v, reg);
      mass += v;
      if (reg.eta != 0.0) clp += std::pow(v, reg.p);
      if (v > 1e-300) clogc += v * std::abs(std::log(v));
      rep.sup_c = std::max(rep.sup_c, v);
    }
    rep.masses[i] = vol * mass;
    rep.eta_lp += reg.eta * vol * clp;
    rep.entropy_l1 += vol * clogc;
  }

  // Electric energy from face gradients and the Robin boundary closure.
  const auto& phi = state.phi();
  double grad_sq = 0.0;
  for (const auto& f : grid.interior_faces()) {
    const double g = (phi[f.cell_b] - phi[f.cell_a]) / grid.spacing(f.axis);
    grad_sq += g * g * grid.face_volume(f);
  }
  double tau_phi_sq = 0.0;
  const auto bfaces = grid.boundary_faces();
  for (size_t k = 0; k < bfaces.size(); ++k) {
    const double pc = phi[bfaces[k].cell];
    tau_phi_sq += spec.boundary.tau[k] * pc * pc * bfaces[k].area;
  }
  rep.free_energy = vol * psi_sum + 0.5 * (grad_sq + tau_phi_sq);

  // Dissipation and the W^{1,3/2} seminorm, face by face.
  for (int i = 0; i < P; ++i) {
    const auto d_cell = diffusivity_at(spec, i, state.t);
    const auto& c = state.c[i];
    double w32 = 0.0;
    for (const auto& f : grid.interior_faces()) {
      const double dc = (c[f.cell_b] - c[f.cell_a]) / grid.spacing(f.axis);
      w32 += std::pow(std::abs(dc), 1.5) * grid.face_volume(f);

      const double cm = std::min(c[f.cell_a], c[f.cell_b]);
      if (cm < floor) continue;
      const double c_face = harmonic_mean(c[f.cell_a], c[f.cell_b]);
      if (c_face <= 0.0) continue;
      const double d_face = 0.5 * (d_cell[f.cell_a] + d_cell[f.cell_b]);
      const auto J = face_flux(c[f.cell_a], c[f.cell_b], phi[f.cell_b] - phi[f.cell_a], d_face,
                               spec.species[i].charge, reg, grid.spacing(f.axis), beta);
      const double j = J.total();
      rep.dissipation += j * j / (d_face * c_face) * grid.face_volume(f);
    }
    rep.w132_seminorm += std::pow(w32, 2.0 / 3.0);
  }

  const auto lap = laplacian_of(grid, phi, spec.boundary);
  for (double v : lap) rep.l2_laplacian_phi += v * v * vol;
  return rep;
}

std::string diagnostics_csv_header(int num_species) {
  std::string h = "t,V,D";
  for (int i = 1; i <= num_species; ++i) h += ",mass_" + std::to_string(i);
  h += ",eta_lp,entropy_l1,sup_c,w132,l2_lap_phi";
  return h;
}

std::string diagnostics_csv_row(const EnergyReport& rep) {
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  std::string row = fmt(rep.t) + "," + fmt(rep.free_energy) + "," + fmt(rep.dissipation);
  for (double m : rep.masses) row += "," + fmt(m);
  row += "," + fmt(rep.eta_lp) + "," + fmt(rep.entropy_l1) + "," + fmt(rep.sup_c) + "," +
         fmt(rep.w132_seminorm) + "," + fmt(rep.l2_laplacian_phi);
  return row;
}

double gronwall_constant(const ProblemSpec& spec, double sup_c) {
  const auto& reg = spec.regularization;
  const double cf = spec.reactions.sup_bound();
  const double omega = spec.grid.domain_volume();
  double reg_term = 1.0;
  if (reg.eta != 0.0 && sup_c > 0.0)
    reg_term = std::max(1.0, reg.eta * reg.p / (reg.p - 1.0) * std::pow(sup_c, reg.p - 1.0));
  return spec.num_species() * cf * (1.0 + omega + reg_term);
}

InequalityCertificate check_entropy_decay(std::span<const EnergyReport> reports,
                                          const ProblemSpec& spec, double slack) {
  InequalityCertificate cert;
  const bool no_reactions = spec.reactions.kind() == ReactionSpec::Kind::None;
  cert.kind = no_reactions ? InequalityCertificate::Kind::EntropyDecay
                           : InequalityCertificate::Kind::Gronwall;
  cert.constants_used.emplace_back("slack", slack);

  if (reports.size() < 2) {
    cert.holds = true;
    cert.worst_margin = 0.0;
    return cert;
  }

  double sup_max = 0.0;
  for (const auto& r : reports) sup_max = std::max(sup_max, r.sup_c);
  double cg = 0.0;
  if (!no_reactions) {
    cg = gronwall_constant(spec, sup_max);
    cert.constants_used.emplace_back("C_G", cg);
    cert.constants_used.emplace_back("C_f", spec.reactions.sup_bound());
  }

  double worst = std::numeric_limits<double>::infinity();
  for (size_t n = 0; n + 1 < reports.size(); ++n) {
    const double dv = reports[n + 1].free_energy - reports[n].free_energy;
    const double dt = reports[n + 1].t - reports[n].t;
    const double bound = no_reactions ? 0.0 : dt * cg * (1.0 + reports[n].free_energy);
    worst = std::min(worst, bound - dv);
  }
  cert.worst_margin = worst;
  cert.holds = worst >= -slack;
  return cert;
}

InequalityCertificate check_uniform_eta_bound(
    std::span<const std::pair<double, std::vector<EnergyReport>>> runs) {
  InequalityCertificate cert;
  cert.kind = InequalityCertificate::Kind::UniformEtaBound;
  if (runs.empty()) {
    cert.holds = true;
    return cert;
  }
  for (size_t i = 0; i + 1 < runs.size(); ++i) {
    if (!(runs[i].first > runs[i + 1].first))
      throw std::invalid_argument("uniform-eta check expects runs ordered by decreasing eta");
  }

  auto peak = [](const std::vector<EnergyReport>& reports) {
    double m = 0.0;
    for (const auto& r : reports) m = std::max(m, r.eta_lp);
    return m;
  };

  // The constant is pinned from the largest-eta run alone.
  const double c_unif = 2.0 * peak(runs[0].second);
  cert.constants_used.emplace_back("C_unif", c_unif);
  cert.constants_used.emplace_back("eta_max", runs[0].first);

  double worst = std::numeric_limits<double>::infinity();
  for (const auto& [eta, reports] : runs) worst = std::min(worst, c_unif - peak(reports));
  cert.worst_margin = worst;
  cert.holds = worst >= 0.0;
  return cert;
}

CutoffDissipation cutoff_dissipation(const State& state, const ProblemSpec& spec,
                                     const CutoffField& zeta) {
  const Grid& grid = spec.grid;
  const auto& reg = spec.regularization;
  const double floor = dissipation_floor(spec);
  const double beta = spec.scales.beta();
  const auto& phi = state.phi();

  CutoffDissipation out;
  for (int i = 0; i < spec.num_species(); ++i) {
    const auto& c = state.c[i];
    const double z = spec.species[i].charge;
    for (const auto& f : grid.interior_faces()) {
      const double zf = 0.5 * (zeta.values[f.cell_a] + zeta.values[f.cell_b]);
      if (zf == 0.0) continue;
      const double w = zf * zf * grid.face_volume(f);
      const double inv_h = 1.0 / grid.spacing(f.axis);
      const double ca = c[f.cell_a], cb = c[f.cell_b];

      if (reg.eta != 0.0) {
        const double gph = (std::pow(cb, 0.5 * reg.p) - std::pow(ca, 0.5 * reg.p)) * inv_h;
        out.grad_p_half_sq += reg.eta * gph * gph * w;
      }

      if (std::min(ca, cb) < floor) continue;
      const double c_face = harmonic_mean(ca, cb);
      if (c_face <= 0.0) continue;
      const double dc = (cb - ca) * inv_h;
      out.grad_sq_over_c += dc * dc / c_face * w;

      const double gp = reg.eta == 0.0 ? 0.0
                                       : reg.eta * (std::pow(cb, reg.p) - std::pow(ca, reg.p)) * inv_h;
      const double drift = beta * z * c_face * (phi[f.cell_b] - phi[f.cell_a]) * inv_h;
      const double num = gp + drift;
      out.reg_drift_sq_over_c += num * num / c_face * w;
    }
  }

  const auto lap = laplacian_of(grid, phi, spec.boundary);
  for (int k = 0; k < grid.num_cells(); ++k)
    out.laplacian_sq += lap[k] * lap[k] * zeta.values[k] * zeta.values[k] * grid.cell_volume();
  return out;
}

InequalityCertificate sup_bound_monitor(std::span<const EnergyReport> reports, double k_monitor) {
  InequalityCertificate cert;
  cert.kind = InequalityCertificate::Kind::SupBound;
  cert.constants_used.emplace_back("K", k_monitor);
  double sup_max = 0.0;
  for (const auto& r : reports) sup_max = std::max(sup_max, r.sup_c);
  cert.worst_margin = k_monitor - sup_max;
  cert.holds = cert.worst_margin >= 0.0;
  return cert;
}

}  // namespace npp
