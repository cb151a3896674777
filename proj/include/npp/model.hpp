#pragma once

#include <array>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "npp/grid.hpp"

namespace npp {

/// Quasilinear regularization parameters: the transported quantity is
/// h(c) = c + eta*c^p instead of c, and the entropy density picks up the
/// matching eta/(p-1)*c^p term.
struct Regularization {
  double eta = 0.0;
  double p = 2.0;
  bool operator==(const Regularization&) const = default;
};

/// h(r) = r + eta*r^p, r >= 0.
double diffusion_transform(double r, const Regularization& reg);
/// h'(r) = 1 + eta*p*r^(p-1); always >= 1.
double diffusion_transform_prime(double r, const Regularization& reg);

/// Entropy density psi(r) = r log r - r + 1 + eta/(p-1) r^p, extended
/// continuously with psi(0) = 1. Nonnegative, convex.
double entropy_density(double r, const Regularization& reg);
/// psi''(r) = 1/r + eta*p*r^(p-2), r > 0. Satisfies r*psi''(r) = h'(r).
double entropy_density_second(double r, const Regularization& reg);

/// Space/time diffusivity given in closed form so runs stay reproducible.
class Diffusivity {
public:
  enum class Kind { Constant, Periodic, Ramp };

  static Diffusivity constant(double value);
  /// base + amp*cos(2*pi*waves*x)*cos(2*pi*waves*y); requires base > |amp|.
  static Diffusivity periodic(double base, double amp, double waves);
  /// base*(1 + slope*t); must stay positive on [0, T].
  static Diffusivity ramp(double base, double slope);

  double eval(double t, const std::array<double, 2>& x, int dimension) const;
  double lower_bound(double final_time) const;
  double upper_bound(double final_time) const;

  Kind kind() const { return kind_; }
  std::array<double, 3> params() const { return {a_, b_, c_}; }

private:
  Kind kind_ = Kind::Constant;
  double a_ = 1.0, b_ = 0.0, c_ = 0.0;
};

struct SpeciesSpec {
  std::string name;
  int charge = 0;
  Diffusivity diffusivity;
  std::vector<double> initial_concentration;  // per cell, >= 0
};

/// Bounded quasi-positive reaction rates; pure functions of (t, x, c),
/// reentrant.
class ReactionSpec {
public:
  enum class Kind { None, ReversibleTanh, ConstantSource, Custom };
  using RateFn = std::function<void(double t, const std::array<double, 2>& x,
                                    std::span<const double> c, std::span<double> out)>;

  static ReactionSpec none();
  /// f_1 = rate*tanh(c_2 - c_1), f_2 = -f_1 (first two species).
  static ReactionSpec reversible_tanh(double rate);
  /// f_i = rates_i, switched off at c_i = 0 when rates_i < 0.
  static ReactionSpec constant_source(std::vector<double> rates);
  /// Arbitrary rate function with a declared sup bound; the caller is
  /// responsible for purity. Not reachable from config files.
  static ReactionSpec custom(RateFn fn, double sup_bound);

  void eval(double t, const std::array<double, 2>& x, std::span<const double> c,
            std::span<double> out) const;
  double sup_bound() const;  // C_f with |f_i| <= C_f
  Kind kind() const { return kind_; }
  double rate() const { return rate_; }
  const std::vector<double>& rates() const { return rates_; }

private:
  Kind kind_ = Kind::None;
  double rate_ = 0.0;
  std::vector<double> rates_;
  RateFn fn_;
};

/// Robin data for the potential: d_nu(phi) + tau*phi = xi per boundary face.
struct BoundaryData {
  std::vector<double> tau;  // per boundary face, >= 0, not identically 0
  std::vector<double> xi;   // per boundary face, time-independent
  double xi_exponent = std::numeric_limits<double>::infinity();  // declared integrability
};

struct PhysicalScales {
  double faraday = 1.0;
  double gas_constant = 1.0;
  double temperature = 1.0;
  double permittivity = 1.0;
  double beta() const { return faraday / (gas_constant * temperature); }
};

struct ProblemSpec {
  Grid grid;
  std::vector<SpeciesSpec> species;
  ReactionSpec reactions;
  BoundaryData boundary;
  Regularization regularization;
  double final_time = 1.0;
  PhysicalScales scales;

  int num_species() const { return (int)species.size(); }
};

/// Checks every structural hypothesis on a deterministic sample set.
/// Violations are returned as messages, not thrown.
std::vector<std::string> validate(const ProblemSpec& spec);

}  // namespace npp
