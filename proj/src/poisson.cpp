#include "npp/poisson.hpp"

#include <algorithm>
#include <cmath>

namespace npp {

namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_boundary_sizes(const Grid& grid, const BoundaryData& boundary) {
  const size_t nb = grid.boundary_faces().size();
  if (boundary.tau.size() != nb || boundary.xi.size() != nb)
    throw std::invalid_argument("boundary data size does not match boundary face count");
}

}  // namespace

std::vector<double> apply_potential_operator(const Grid& grid, const BoundaryData& boundary,
                                             std::span<const double> phi, double epsilon) {
  std::vector<double> y(grid.num_cells(), 0.0);
  for (const auto& f : grid.interior_faces()) {
    const double coeff = epsilon * f.area / grid.spacing(f.axis);
    const double diff = phi[f.cell_a] - phi[f.cell_b];
    y[f.cell_a] += coeff * diff;
    y[f.cell_b] -= coeff * diff;
  }
  const auto bfaces = grid.boundary_faces();
  for (size_t b = 0; b < bfaces.size(); ++b)
    y[bfaces[b].cell] += epsilon * boundary.tau[b] * bfaces[b].area * phi[bfaces[b].cell];
  return y;
}

PotentialSolve solve_potential(const Grid& grid, std::span<const double> charge_density,
                               const BoundaryData& boundary, double tol, double epsilon,
                               std::span<const double> initial_guess) {
  const int n = grid.num_cells();
  if ((int)charge_density.size() != n)
    throw std::invalid_argument("charge density must have one value per cell");
  check_boundary_sizes(grid, boundary);
  if (max_abs(boundary.tau) == 0.0)
    throw std::invalid_argument("tau identically zero: Robin potential system is singular");

  // Right side: cell_volume*charge + epsilon*xi*area on Robin faces.
  std::vector<double> b(n, 0.0);
  for (int c = 0; c < n; ++c) b[c] = grid.cell_volume() * charge_density[c];
  const auto bfaces = grid.boundary_faces();
  for (size_t k = 0; k < bfaces.size(); ++k)
    b[bfaces[k].cell] += epsilon * boundary.xi[k] * bfaces[k].area;

  PotentialSolve out;
  out.phi.assign(n, 0.0);

  const double bnorm = max_abs(b);
  if (bnorm == 0.0) {
    // Zero data: phi = 0 exactly.
    out.grad_phi.assign(grid.interior_faces().size(), 0.0);
    out.boundary_normal_derivative.assign(bfaces.size(), 0.0);
    return out;
  }
  if (!initial_guess.empty()) {
    if ((int)initial_guess.size() != n)
      throw std::invalid_argument("initial guess size mismatch");
    out.phi.assign(initial_guess.begin(), initial_guess.end());
  }

  // Jacobi diagonal.
  std::vector<double> diag(n, 0.0);
  for (const auto& f : grid.interior_faces()) {
    const double coeff = epsilon * f.area / grid.spacing(f.axis);
    diag[f.cell_a] += coeff;
    diag[f.cell_b] += coeff;
  }
  for (size_t k = 0; k < bfaces.size(); ++k)
    diag[bfaces[k].cell] += epsilon * boundary.tau[k] * bfaces[k].area;

  const double atol = tol * bnorm;
  const int max_iter = 20 * n + 100;
  std::vector<double> residual_history;

  std::vector<double> r(n), z(n), p(n), ap(n);
  {
    auto ax = apply_potential_operator(grid, boundary, out.phi, epsilon);
    for (int i = 0; i < n; ++i) r[i] = b[i] - ax[i];
  }
  double rnorm = max_abs(r);
  double rz = 0.0;
  for (int i = 0; i < n; ++i) {
    z[i] = r[i] / diag[i];
    rz += r[i] * z[i];
  }
  p = z;

  int it = 0;
  while (rnorm > atol && it < max_iter) {
    ap = apply_potential_operator(grid, boundary, p, epsilon);
    double pap = 0.0;
    for (int i = 0; i < n; ++i) pap += p[i] * ap[i];
    const double alpha = rz / pap;
    for (int i = 0; i < n; ++i) {
      out.phi[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    rnorm = max_abs(r);
    residual_history.push_back(rnorm);
    double rz_next = 0.0;
    for (int i = 0; i < n; ++i) {
      z[i] = r[i] / diag[i];
      rz_next += r[i] * z[i];
    }
    const double beta = rz_next / rz;
    rz = rz_next;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    ++it;
  }
  if (rnorm > atol)
    throw SolverError("potential solve did not converge in " + std::to_string(max_iter) +
                          " iterations (residual " + std::to_string(rnorm) + ")",
                      residual_history);

  out.iterations = it;
  out.residual_norm = rnorm;

  const auto ifaces = grid.interior_faces();
  out.grad_phi.resize(ifaces.size());
  for (size_t k = 0; k < ifaces.size(); ++k)
    out.grad_phi[k] =
        (out.phi[ifaces[k].cell_b] - out.phi[ifaces[k].cell_a]) / grid.spacing(ifaces[k].axis);
  out.boundary_normal_derivative.resize(bfaces.size());
  for (size_t k = 0; k < bfaces.size(); ++k)
    out.boundary_normal_derivative[k] = boundary.xi[k] - boundary.tau[k] * out.phi[bfaces[k].cell];
  return out;
}

std::vector<double> laplacian_of(const Grid& grid, std::span<const double> phi,
                                 const BoundaryData& boundary) {
  if ((int)phi.size() != grid.num_cells())
    throw std::invalid_argument("phi must have one value per cell");
  check_boundary_sizes(grid, boundary);

  std::vector<double> lap(grid.num_cells(), 0.0);
  for (const auto& f : grid.interior_faces()) {
    const double flux = f.area * (phi[f.cell_b] - phi[f.cell_a]) / grid.spacing(f.axis);
    lap[f.cell_a] += flux;
    lap[f.cell_b] -= flux;
  }
  const auto bfaces = grid.boundary_faces();
  for (size_t k = 0; k < bfaces.size(); ++k)
    lap[bfaces[k].cell] +=
        bfaces[k].area * (boundary.xi[k] - boundary.tau[k] * phi[bfaces[k].cell]);
  const double inv_vol = 1.0 / grid.cell_volume();
  for (double& v : lap) v *= inv_vol;
  return lap;
}

}  // namespace npp
