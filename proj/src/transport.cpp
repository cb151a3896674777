#include "npp/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "linalg.hpp"

namespace npp {

double bernoulli(double x) {
  if (std::abs(x) < 1e-5) {
    // 1 - x/2 + x^2/12 - x^4/720 + ...
    return 1.0 - 0.5 * x + x * x / 12.0;
  }
  return x / std::expm1(x);
}

FaceFluxParts face_flux(double c_left, double c_right, double dphi, double d_face, int z,
                        const Regularization& reg, double spacing, double beta) {
  const double x = beta * z * dphi;
  const double bp = bernoulli(x);
  const double bm = bernoulli(-x);
  const double g = d_face / spacing;
  FaceFluxParts parts;
  // B(x)*cL - B(-x)*cR  ==  S*(cL - cR) - x*(cL + cR)/2  with S = (B(x)+B(-x))/2,
  // using B(x) - B(-x) = -x. The split keeps drift = -d*beta*z*mean(c)*grad(phi)
  // exact and pushes the exponential fitting into the diffusive factor S >= 1.
  parts.diffusive = g * 0.5 * (bp + bm) * (c_left - c_right);
  parts.drift = -g * x * 0.5 * (c_left + c_right);
  parts.regularization = 0.0;
  if (reg.eta != 0.0)
    parts.regularization =
        -g * reg.eta * (std::pow(c_right, reg.p) - std::pow(c_left, reg.p));
  return parts;
}

FluxField species_flux(const Grid& grid, std::span<const double> c, std::span<const double> phi,
                       std::span<const double> d_cell, int z, const Regularization& reg,
                       double beta) {
  const auto faces = grid.interior_faces();
  FluxField out;
  out.total.resize(faces.size());
  out.diffusive.resize(faces.size());
  out.drift.resize(faces.size());
  out.regularization.resize(faces.size());
  for (size_t k = 0; k < faces.size(); ++k) {
    const auto& f = faces[k];
    const double d_face = 0.5 * (d_cell[f.cell_a] + d_cell[f.cell_b]);
    const auto parts = face_flux(c[f.cell_a], c[f.cell_b], phi[f.cell_b] - phi[f.cell_a], d_face,
                                 z, reg, grid.spacing(f.axis), beta);
    out.diffusive[k] = parts.diffusive;
    out.drift[k] = parts.drift;
    out.regularization[k] = parts.regularization;
    out.total[k] = parts.total();
  }
  return out;
}

namespace {

struct FaceCoeff {
  double gamma;  // area * d_face / spacing
  double bp;     // B(+x)
  double bm;     // B(-x)
  double kappa;  // area * d_face * eta / spacing
};

int matrix_band(const Grid& grid) { return grid.dimension() == 2 ? grid.cells(0) : 1; }

std::vector<FaceCoeff> face_coefficients(const Grid& grid, std::span<const double> phi,
                                         std::span<const double> d_cell, int z,
                                         const Regularization& reg, double beta) {
  const auto faces = grid.interior_faces();
  std::vector<FaceCoeff> coeff(faces.size());
  for (size_t k = 0; k < faces.size(); ++k) {
    const auto& f = faces[k];
    const double d_face = 0.5 * (d_cell[f.cell_a] + d_cell[f.cell_b]);
    const double x = beta * z * (phi[f.cell_b] - phi[f.cell_a]);
    coeff[k].gamma = f.area * d_face / grid.spacing(f.axis);
    coeff[k].bp = bernoulli(x);
    coeff[k].bm = bernoulli(-x);
    coeff[k].kappa = f.area * d_face * reg.eta / grid.spacing(f.axis);
  }
  return coeff;
}

// Linear (Scharfetter-Gummel + mass) part of the backward-Euler matrix.
void assemble_linear(const Grid& grid, const std::vector<FaceCoeff>& coeff, double vol_over_dt,
                     detail::BandedMatrix& m) {
  const auto faces = grid.interior_faces();
  for (int c = 0; c < grid.num_cells(); ++c) m.at(c, c) = vol_over_dt;
  for (size_t k = 0; k < faces.size(); ++k) {
    const auto& f = faces[k];
    const double out_a = coeff[k].gamma * coeff[k].bp;   // on c_a, outflow of a
    const double in_b = coeff[k].gamma * coeff[k].bm;    // on c_b
    m.add(f.cell_a, f.cell_a, out_a);
    m.add(f.cell_a, f.cell_b, -in_b);
    m.add(f.cell_b, f.cell_b, in_b);
    m.add(f.cell_b, f.cell_a, -out_a);
  }
}

// Flux divergence of the regularization term evaluated at c.
void reg_divergence(const Grid& grid, const std::vector<FaceCoeff>& coeff,
                    std::span<const double> c, double p, std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  const auto faces = grid.interior_faces();
  for (size_t k = 0; k < faces.size(); ++k) {
    if (coeff[k].kappa == 0.0) continue;
    const auto& f = faces[k];
    const double r = coeff[k].kappa * (std::pow(c[f.cell_a], p) - std::pow(c[f.cell_b], p));
    out[f.cell_a] += r;
    out[f.cell_b] -= r;
  }
}

double max_update(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

std::vector<double> species_step(const Grid& grid, std::span<const double> c_old,
                                 std::span<const double> phi, std::span<const double> d_cell,
                                 int z, std::span<const double> rate, const Regularization& reg,
                                 double dt, const SpeciesStepOptions& opts) {
  const int n = grid.num_cells();
  if ((int)c_old.size() != n || (int)phi.size() != n || (int)d_cell.size() != n)
    throw std::invalid_argument("species_step: field size mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("species_step: dt must be positive");

  const double vol = grid.cell_volume();
  const double vol_over_dt = vol / dt;
  const auto coeff = face_coefficients(grid, phi, d_cell, z, reg, opts.beta);
  const int band = matrix_band(grid);

  std::vector<double> rhs(n);
  for (int c = 0; c < n; ++c)
    rhs[c] = vol_over_dt * c_old[c] + (rate.empty() ? 0.0 : vol * rate[c]);

  const auto faces = grid.interior_faces();

  auto finish = [&](std::vector<double> c_new) {
    double cmin = 0.0;
    for (double v : c_new) cmin = std::min(cmin, v);
    if (cmin < -1e-13)
      throw SolverError("species_step produced a negative concentration (" +
                            std::to_string(cmin) + "); scheme bug, not clipping",
                        {cmin});
    return c_new;
  };

  // eta = 0: one linear M-matrix solve.
  if (reg.eta == 0.0) {
    detail::BandedMatrix m(n, band);
    assemble_linear(grid, coeff, vol_over_dt, m);
    m.factor();
    std::vector<double> c_new = rhs;
    m.solve(c_new);
    return finish(std::move(c_new));
  }

  std::vector<double> iterate(c_old.begin(), c_old.end());
  std::vector<double> reg_div(n), residual(n), history;

  // Damped Newton on
  //   G(c) = vol/dt*(c - c_old) + div J_SG(c) + div J_reg(c) - vol*rate,
  // with a fraction-to-boundary rule so the iterates never leave the
  // nonnegative cone. Accept only full interior steps as converged.
  for (int it = 0; it < opts.inner_max_iter; ++it) {
    detail::BandedMatrix jac(n, band);
    assemble_linear(grid, coeff, vol_over_dt, jac);
    for (size_t k = 0; k < faces.size(); ++k) {
      const auto& f = faces[k];
      const double da = coeff[k].kappa * reg.p * std::pow(iterate[f.cell_a], reg.p - 1.0);
      const double db = coeff[k].kappa * reg.p * std::pow(iterate[f.cell_b], reg.p - 1.0);
      jac.add(f.cell_a, f.cell_a, da);
      jac.add(f.cell_a, f.cell_b, -db);
      jac.add(f.cell_b, f.cell_b, db);
      jac.add(f.cell_b, f.cell_a, -da);
    }
    reg_divergence(grid, coeff, iterate, reg.p, reg_div);
    for (int c = 0; c < n; ++c) residual[c] = rhs[c] - vol_over_dt * iterate[c] - reg_div[c];
    {
      // Subtract the SG divergence at the current iterate.
      for (size_t k = 0; k < faces.size(); ++k) {
        const auto& f = faces[k];
        const double j = coeff[k].gamma * (coeff[k].bp * iterate[f.cell_a] -
                                           coeff[k].bm * iterate[f.cell_b]);
        residual[f.cell_a] -= j;
        residual[f.cell_b] += j;
      }
    }
    jac.factor();
    std::vector<double> delta = residual;
    jac.solve(delta);

    double alpha = 1.0;
    for (int c = 0; c < n; ++c) {
      if (delta[c] >= 0.0) continue;
      if (iterate[c] <= 1e-14) {
        delta[c] = 0.0;  // pinned at the boundary; wait for inflow
        continue;
      }
      alpha = std::min(alpha, 0.995 * iterate[c] / -delta[c]);
    }
    double dmax = 0.0;
    for (int c = 0; c < n; ++c) {
      iterate[c] += alpha * delta[c];
      dmax = std::max(dmax, std::abs(delta[c]));
    }
    history.push_back(dmax);
    if (alpha == 1.0 && dmax <= opts.inner_tol) return finish(std::move(iterate));
  }

  // Picard fallback: lag the coefficient c^(p-1) so the iteration matrix
  // stays an M-matrix and every iterate stays nonnegative.
  iterate.assign(c_old.begin(), c_old.end());
  history.push_back(-1.0);
  for (int it = 0; it < opts.inner_max_iter; ++it) {
    detail::BandedMatrix m(n, band);
    assemble_linear(grid, coeff, vol_over_dt, m);
    for (size_t k = 0; k < faces.size(); ++k) {
      const auto& f = faces[k];
      const double aa = coeff[k].kappa * std::pow(iterate[f.cell_a], reg.p - 1.0);
      const double ab = coeff[k].kappa * std::pow(iterate[f.cell_b], reg.p - 1.0);
      m.add(f.cell_a, f.cell_a, aa);
      m.add(f.cell_a, f.cell_b, -ab);
      m.add(f.cell_b, f.cell_b, ab);
      m.add(f.cell_b, f.cell_a, -aa);
    }
    m.factor();
    std::vector<double> next = rhs;
    m.solve(next);
    const double dmax = max_update(next, iterate);
    history.push_back(dmax);
    iterate = std::move(next);
    if (dmax <= opts.inner_tol) return finish(std::move(iterate));
  }
  throw SolverError("species_step inner iteration did not converge within " +
                        std::to_string(opts.inner_max_iter) + " iterations",
                    history);
}

}  // namespace npp
