#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "npp/poisson.hpp"

using namespace npp;

namespace {

BoundaryData uniform_boundary(const Grid& g, double tau, double xi) {
  BoundaryData bd;
  bd.tau.assign(g.boundary_faces().size(), tau);
  bd.xi.assign(g.boundary_faces().size(), xi);
  return bd;
}

}  // namespace

TEST_SUITE_BEGIN("poisson");

TEST_CASE("constant solution: zero charge, tau=1, xi=2") {
  for (const auto& g : {Grid::build(1, {16}, {1.0}), Grid::build(2, {6, 5}, {1.0, 2.0})}) {
    const auto bd = uniform_boundary(g, 1.0, 2.0);
    const std::vector<double> charge(g.num_cells(), 0.0);
    const auto sol = solve_potential(g, charge, bd);
    for (double v : sol.phi) CHECK(v == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sol.residual_norm <= 1e-10 * 2.0 * 2.0);
  }
}

TEST_CASE("zero data gives exactly zero potential") {
  const auto g = Grid::build(1, {16}, {1.0});
  const auto bd = uniform_boundary(g, 1.0, 0.0);
  const std::vector<double> charge(g.num_cells(), 0.0);
  const auto sol = solve_potential(g, charge, bd);
  for (double v : sol.phi) CHECK(v == 0.0);
  CHECK(sol.iterations == 0);
}

TEST_CASE("tau identically zero is rejected before assembly") {
  const auto g = Grid::build(1, {8}, {1.0});
  const auto bd = uniform_boundary(g, 0.0, 1.0);
  const std::vector<double> charge(g.num_cells(), 1.0);
  CHECK_THROWS_AS((void)solve_potential(g, charge, bd), std::invalid_argument);
}

// phi*(x) = cos(pi x) on [0,1]: charge = pi^2 cos(pi x), phi*' = 0 at both
// ends so the Robin data is xi(0) = phi*(0) = 1, xi(1) = phi*(1) = -1.
TEST_CASE("manufactured solution converges at second order") {
  const double pi = std::acos(-1.0);
  std::vector<double> errors;
  for (int n : {32, 64, 128}) {
    const auto g = Grid::build(1, {n}, {1.0});
    auto bd = uniform_boundary(g, 1.0, 0.0);
    bd.xi[0] = 1.0;
    bd.xi[1] = -1.0;
    std::vector<double> charge(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c)
      charge[c] = pi * pi * std::cos(pi * g.cell_center(c)[0]);
    const auto sol = solve_potential(g, charge, bd, 1e-12);
    double l2 = 0.0;
    for (int c = 0; c < g.num_cells(); ++c) {
      const double e = sol.phi[c] - std::cos(pi * g.cell_center(c)[0]);
      l2 += e * e * g.cell_volume();
    }
    errors.push_back(std::sqrt(l2));
  }
  const double order1 = std::log2(errors[0] / errors[1]);
  const double order2 = std::log2(errors[1] / errors[2]);
  CHECK(order1 >= 1.8);
  CHECK(order1 <= 2.2);
  CHECK(order2 >= 1.8);
  CHECK(order2 <= 2.2);
}

TEST_CASE("assembled operator is symmetric") {
  const auto g = Grid::build(2, {7, 6}, {1.0, 1.3});
  auto bd = uniform_boundary(g, 0.5, 0.0);
  bd.tau[3] = 2.0;  // inhomogeneous tau keeps the test honest
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> u(g.num_cells()), v(g.num_cells());
    for (auto& x : u) x = dist(rng);
    for (auto& x : v) x = dist(rng);
    const auto au = apply_potential_operator(g, bd, u);
    const auto av = apply_potential_operator(g, bd, v);
    double uav = 0.0, vau = 0.0, scale = 0.0;
    for (int c = 0; c < g.num_cells(); ++c) {
      uav += u[c] * av[c];
      vau += v[c] * au[c];
      scale += std::abs(u[c] * av[c]);
    }
    CHECK(std::abs(uav - vau) <= 1e-13 * std::max(1.0, scale));
  }
}

TEST_CASE("monotonicity: nonnegative charge and xi give nonnegative phi") {
  const auto g = Grid::build(2, {8, 8}, {1.0, 1.0});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    BoundaryData bd;
    bd.tau.assign(g.boundary_faces().size(), 0.0);
    bd.xi.assign(g.boundary_faces().size(), 0.0);
    for (auto& t : bd.tau) t = pos(rng);
    for (auto& x : bd.xi) x = pos(rng);
    std::vector<double> charge(g.num_cells());
    for (auto& c : charge) c = pos(rng);
    const auto sol = solve_potential(g, charge, bd, 1e-12);
    for (double v : sol.phi) CHECK(v >= -1e-11);
  }
}

TEST_CASE("laplacian is consistent with assembly") {
  const auto g = Grid::build(1, {24}, {2.0});
  auto bd = uniform_boundary(g, 1.0, 0.3);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> charge(g.num_cells());
  for (auto& c : charge) c = dist(rng);
  const double epsilon = 2.0;
  const auto sol = solve_potential(g, charge, bd, 1e-12, epsilon);
  const auto lap = laplacian_of(g, sol.phi, bd);
  for (int c = 0; c < g.num_cells(); ++c)
    CHECK(lap[c] == doctest::Approx(-charge[c] / epsilon).epsilon(1e-8));
}

TEST_CASE("laplacian of a constant with matching Robin data is zero") {
  const auto g = Grid::build(1, {10}, {1.0});
  const std::vector<double> phi(g.num_cells(), 3.0);

  auto matched = uniform_boundary(g, 1.0, 3.0);  // xi = tau*phi on the boundary
  for (double v : laplacian_of(g, phi, matched)) CHECK(std::abs(v) <= 1e-14);

  auto zero = uniform_boundary(g, 0.0, 0.0);
  for (double v : laplacian_of(g, phi, zero)) CHECK(std::abs(v) <= 1e-14);
}

TEST_CASE("laplacian of x^2 is exactly 2 at interior cells") {
  const auto g = Grid::build(1, {12}, {1.0});
  std::vector<double> phi(g.num_cells());
  for (int c = 0; c < g.num_cells(); ++c) {
    const double x = g.cell_center(c)[0];
    phi[c] = x * x;
  }
  const auto lap = laplacian_of(g, phi, uniform_boundary(g, 0.0, 0.0));
  for (int c = 1; c + 1 < g.num_cells(); ++c)
    CHECK(lap[c] == doctest::Approx(2.0).epsilon(1e-11));
}

TEST_CASE("warm start converges to the same solution") {
  const auto g = Grid::build(1, {32}, {1.0});
  const auto bd = uniform_boundary(g, 1.0, 0.5);
  std::vector<double> charge(g.num_cells());
  for (int c = 0; c < g.num_cells(); ++c) charge[c] = std::sin(3.0 * g.cell_center(c)[0]);
  const auto cold = solve_potential(g, charge, bd, 1e-12);
  const auto warm = solve_potential(g, charge, bd, 1e-12, 1.0, cold.phi);
  for (int c = 0; c < g.num_cells(); ++c)
    CHECK(warm.phi[c] == doctest::Approx(cold.phi[c]).epsilon(1e-10));
  CHECK(warm.iterations <= cold.iterations);
}

TEST_SUITE_END();
