#include "npp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "linalg.hpp"
#include "npp/poisson.hpp"

namespace npp {

namespace {

double clamped_exp(double x) { return std::exp(std::clamp(x, -500.0, 500.0)); }

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double norm_2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

EquilibriumSolution solve_equilibrium(const Grid& grid, std::span<const double> masses,
                                      std::span<const int> charges, const BoundaryData& boundary,
                                      double tol, const PhysicalScales& scales) {
  const int n = grid.num_cells();
  const int P = (int)masses.size();
  if ((int)charges.size() != P)
    throw std::invalid_argument("solve_equilibrium: masses/charges size mismatch");
  for (double m : masses)
    if (!(m > 0.0)) throw std::invalid_argument("solve_equilibrium: masses must be positive");
  {
    double tau_max = 0.0;
    for (double t : boundary.tau) tau_max = std::max(tau_max, t);
    if (!(tau_max > 0.0))
      throw std::invalid_argument("solve_equilibrium: tau identically zero");
  }

  const double vol = grid.cell_volume();
  const double eps = scales.permittivity;
  const double F = scales.faraday;
  const double beta = scales.beta();

  // Fixed part of the residual: -eps*xi*area on Robin cells.
  std::vector<double> b_fixed(n, 0.0);
  const auto bfaces = grid.boundary_faces();
  for (size_t k = 0; k < bfaces.size(); ++k)
    b_fixed[bfaces[k].cell] += eps * boundary.xi[k] * bfaces[k].area;

  std::vector<double> phi(n, 0.0);
  std::vector<std::vector<double>> c(P, std::vector<double>(n, 0.0));

  auto boltzmann_fill = [&](const std::vector<double>& phi_now) {
    for (int i = 0; i < P; ++i) {
      double norm = 0.0;
      for (int k = 0; k < n; ++k) {
        c[i][k] = clamped_exp(-beta * charges[i] * phi_now[k]);
        norm += vol * c[i][k];
      }
      const double scale = masses[i] / norm;
      for (int k = 0; k < n; ++k) c[i][k] *= scale;
    }
  };

  auto residual_of = [&](const std::vector<double>& phi_now) {
    boltzmann_fill(phi_now);
    auto g = apply_potential_operator(grid, boundary, phi_now, eps);
    for (int k = 0; k < n; ++k) {
      double rho = 0.0;
      for (int i = 0; i < P; ++i) rho += charges[i] * c[i][k];
      g[k] -= b_fixed[k] + F * vol * rho;
    }
    return g;
  };

  std::vector<double> g = residual_of(phi);
  std::vector<double> history{norm_inf(g)};

  const int max_iter = 100;
  int it = 0;
  for (; it < max_iter && norm_inf(g) > tol; ++it) {
    // Analytic Jacobian: Robin-Laplacian + diagonal Boltzmann response
    // minus the rank-P normalization correction.
    detail::DenseMatrix jac(n);
    for (const auto& f : grid.interior_faces()) {
      const double coeff = eps * f.area / grid.spacing(f.axis);
      jac.at(f.cell_a, f.cell_a) += coeff;
      jac.at(f.cell_b, f.cell_b) += coeff;
      jac.at(f.cell_a, f.cell_b) -= coeff;
      jac.at(f.cell_b, f.cell_a) -= coeff;
    }
    for (size_t k = 0; k < bfaces.size(); ++k)
      jac.at(bfaces[k].cell, bfaces[k].cell) += eps * boundary.tau[k] * bfaces[k].area;
    for (int i = 0; i < P; ++i) {
      const double z = charges[i];
      if (z == 0.0) continue;
      for (int row = 0; row < n; ++row) {
        jac.at(row, row) += F * vol * beta * z * z * c[i][row];
        const double coupling = F * vol * beta * z * z * c[i][row] / masses[i];
        for (int col = 0; col < n; ++col) jac.at(row, col) -= coupling * c[i][col] * vol;
      }
    }
    jac.factor();
    std::vector<double> neg_g(n);
    for (int k = 0; k < n; ++k) neg_g[k] = -g[k];
    auto delta = jac.solve(neg_g);

    // Backtracking damping on the Euclidean residual.
    const double g0 = norm_2(g);
    double alpha = 1.0;
    std::vector<double> trial(n);
    while (alpha >= 1e-6) {
      for (int k = 0; k < n; ++k) trial[k] = phi[k] + alpha * delta[k];
      auto g_trial = residual_of(trial);
      if (norm_2(g_trial) <= (1.0 - 0.25 * alpha) * g0 || g0 == 0.0) {
        phi = trial;
        g = std::move(g_trial);
        break;
      }
      alpha *= 0.5;
    }
    history.push_back(norm_inf(g));
    if (alpha < 1e-6)
      throw SolverError("equilibrium Newton stalled (damping underflow)", history);
  }
  if (norm_inf(g) > tol)
    throw SolverError("equilibrium Newton did not reach tolerance", history);

  boltzmann_fill(phi);
  EquilibriumSolution sol;
  sol.phi_eq = std::move(phi);
  sol.c_eq = c;
  sol.newton_residual = norm_inf(g);
  sol.iterations = it;
  return sol;
}

namespace {

// Local Bernoulli evaluation, deliberately separate from the production
// transport path (different series switch-over and terms).
double oracle_bernoulli(double x) {
  if (std::abs(x) < 1e-6) return 1.0 - 0.5 * x + x * x / 12.0 - x * x * x * x / 720.0;
  return x / (std::exp(x) - 1.0);
}

}  // namespace

State dense_step_oracle(const State& state, double dt, const ProblemSpec& spec,
                        double newton_tol) {
  const Grid& grid = spec.grid;
  const int n = grid.num_cells();
  const int P = spec.num_species();
  const int unknowns = (P + 1) * n;
  if (unknowns > 72)
    throw std::invalid_argument("dense_step_oracle: more than 72 unknowns");
  if (!(dt > 0.0)) throw std::invalid_argument("dense_step_oracle: dt must be positive");

  const double vol = grid.cell_volume();
  const double eps = spec.scales.permittivity;
  const double F = spec.scales.faraday;
  const double beta = spec.scales.beta();
  const auto& reg = spec.regularization;

  // Lagged data, matching the production time discretization: reactions and
  // diffusivities are evaluated once.
  std::vector<std::vector<double>> rates(P, std::vector<double>(n, 0.0));
  {
    std::vector<double> c_local(P), f_local(P);
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < P; ++i) c_local[i] = state.c[i][k];
      spec.reactions.eval(state.t, grid.cell_center(k), c_local, f_local);
      for (int i = 0; i < P; ++i) rates[i][k] = f_local[i];
    }
  }
  std::vector<std::vector<double>> d_fields(P, std::vector<double>(n));
  for (int i = 0; i < P; ++i) {
    for (int k = 0; k < n; ++k)
      d_fields[i][k] =
          spec.species[i].diffusivity.eval(state.t + dt, grid.cell_center(k), grid.dimension());
  }

  // Unknown layout: [c_1 | c_2 | ... | c_P | phi].
  auto c_at = [&](const std::vector<double>& u, int i, int k) { return u[i * n + k]; };
  const int phi_off = P * n;

  auto residual_of = [&](const std::vector<double>& u) {
    std::vector<double> g(unknowns, 0.0);
    for (int i = 0; i < P; ++i) {
      for (int k = 0; k < n; ++k)
        g[i * n + k] = vol * (c_at(u, i, k) - state.c[i][k]) / dt - vol * rates[i][k];
    }
    for (int k = 0; k < n; ++k) {
      double rho = 0.0;
      for (int i = 0; i < P; ++i) rho += spec.species[i].charge * c_at(u, i, k);
      g[phi_off + k] = -F * vol * rho;
    }
    for (const auto& f : grid.interior_faces()) {
      const double h = grid.spacing(f.axis);
      const double dphi = u[phi_off + f.cell_b] - u[phi_off + f.cell_a];
      for (int i = 0; i < P; ++i) {
        const int z = spec.species[i].charge;
        const double d_face = 0.5 * (d_fields[i][f.cell_a] + d_fields[i][f.cell_b]);
        const double x = beta * z * dphi;
        const double ca = c_at(u, i, f.cell_a), cb = c_at(u, i, f.cell_b);
        double flux = (d_face / h) * (oracle_bernoulli(x) * ca - oracle_bernoulli(-x) * cb);
        if (reg.eta != 0.0)
          flux -= (d_face * reg.eta / h) * (std::pow(cb, reg.p) - std::pow(ca, reg.p));
        g[i * n + f.cell_a] += f.area * flux;
        g[i * n + f.cell_b] -= f.area * flux;
      }
      const double coeff = eps * f.area / h;
      g[phi_off + f.cell_a] -= coeff * dphi;
      g[phi_off + f.cell_b] += coeff * dphi;
    }
    const auto bfaces = grid.boundary_faces();
    for (size_t k = 0; k < bfaces.size(); ++k) {
      const int cell = bfaces[k].cell;
      g[phi_off + cell] += eps * bfaces[k].area *
                           (spec.boundary.tau[k] * u[phi_off + cell] - spec.boundary.xi[k]);
    }
    return g;
  };

  std::vector<double> u(unknowns, 0.0);
  for (int i = 0; i < P; ++i)
    for (int k = 0; k < n; ++k) u[i * n + k] = state.c[i][k];
  for (int k = 0; k < n; ++k) u[phi_off + k] = state.phi()[k];

  auto g = residual_of(u);
  std::vector<double> history{norm_inf(g)};
  const int max_iter = 60;
  int it = 0;
  for (; it < max_iter && norm_inf(g) > newton_tol; ++it) {
    // Central-difference Jacobian, column by column.
    detail::DenseMatrix jac(unknowns);
    std::vector<double> up = u, um = u;
    for (int j = 0; j < unknowns; ++j) {
      const double step = 1e-6 * std::max(1.0, std::abs(u[j]));
      up[j] = u[j] + step;
      um[j] = u[j] - step;
      auto gp = residual_of(up);
      auto gm = residual_of(um);
      for (int i = 0; i < unknowns; ++i) jac.at(i, j) = (gp[i] - gm[i]) / (2.0 * step);
      up[j] = u[j];
      um[j] = u[j];
    }
    jac.factor();
    std::vector<double> neg_g(unknowns);
    for (int i = 0; i < unknowns; ++i) neg_g[i] = -g[i];
    auto delta = jac.solve(neg_g);

    const double g0 = norm_2(g);
    double alpha = 1.0;
    std::vector<double> trial(unknowns);
    while (alpha >= 1e-8) {
      for (int i = 0; i < unknowns; ++i) trial[i] = u[i] + alpha * delta[i];
      auto g_trial = residual_of(trial);
      if (norm_2(g_trial) <= (1.0 - 0.25 * alpha) * g0 || g0 == 0.0) {
        u = trial;
        g = std::move(g_trial);
        break;
      }
      alpha *= 0.5;
    }
    history.push_back(norm_inf(g));
    if (alpha < 1e-8)
      throw SolverError("dense oracle Newton stalled (damping underflow)", history);
  }
  if (norm_inf(g) > newton_tol)
    throw SolverError("dense oracle Newton did not reach tolerance", history);

  State out;
  out.t = state.t + dt;
  out.c.assign(P, std::vector<double>(n));
  for (int i = 0; i < P; ++i)
    for (int k = 0; k < n; ++k) out.c[i][k] = c_at(u, i, k);
  out.potential.phi.assign(u.begin() + phi_off, u.end());
  out.potential.iterations = it;
  out.potential.residual_norm = norm_inf(g);
  const auto ifaces = grid.interior_faces();
  out.potential.grad_phi.resize(ifaces.size());
  for (size_t k = 0; k < ifaces.size(); ++k)
    out.potential.grad_phi[k] = (out.potential.phi[ifaces[k].cell_b] -
                                 out.potential.phi[ifaces[k].cell_a]) /
                                grid.spacing(ifaces[k].axis);
  const auto bfaces = grid.boundary_faces();
  out.potential.boundary_normal_derivative.resize(bfaces.size());
  for (size_t k = 0; k < bfaces.size(); ++k)
    out.potential.boundary_normal_derivative[k] =
        spec.boundary.xi[k] - spec.boundary.tau[k] * out.potential.phi[bfaces[k].cell];
  return out;
}

}  // namespace npp
