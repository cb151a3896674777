#include "npp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace npp {

namespace {
void require_nonnegative(double r, const char* fn) {
  if (r < 0.0 || std::isnan(r))
    throw std::invalid_argument(std::string(fn) + ": argument must be nonnegative");
}
}  // namespace

double diffusion_transform(double r, const Regularization& reg) {
  require_nonnegative(r, "diffusion_transform");
  if (reg.eta == 0.0) return r;
  return r + reg.eta * std::pow(r, reg.p);
}

double diffusion_transform_prime(double r, const Regularization& reg) {
  require_nonnegative(r, "diffusion_transform_prime");
  if (reg.eta == 0.0) return 1.0;
  return 1.0 + reg.eta * reg.p * std::pow(r, reg.p - 1.0);
}

double entropy_density(double r, const Regularization& reg) {
  require_nonnegative(r, "entropy_density");
  // r log r -> 0 continuously; cut below 1e-300 to avoid 0*(-inf).
  const double rlogr = (r < 1e-300) ? 0.0 : r * std::log(r);
  double value = rlogr - r + 1.0;
  if (reg.eta != 0.0) value += reg.eta / (reg.p - 1.0) * std::pow(r, reg.p);
  return value;
}

double entropy_density_second(double r, const Regularization& reg) {
  if (!(r > 0.0))
    throw std::domain_error("entropy_density_second requires r > 0");
  double value = 1.0 / r;
  if (reg.eta != 0.0) value += reg.eta * reg.p * std::pow(r, reg.p - 2.0);
  return value;
}

Diffusivity Diffusivity::constant(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("diffusivity must be positive");
  Diffusivity d;
  d.kind_ = Kind::Constant;
  d.a_ = value;
  return d;
}

Diffusivity Diffusivity::periodic(double base, double amp, double waves) {
  if (!(base > std::abs(amp)))
    throw std::invalid_argument("periodic diffusivity needs base > |amp|");
  Diffusivity d;
  d.kind_ = Kind::Periodic;
  d.a_ = base;
  d.b_ = amp;
  d.c_ = waves;
  return d;
}

Diffusivity Diffusivity::ramp(double base, double slope) {
  if (!(base > 0.0)) throw std::invalid_argument("ramp diffusivity needs base > 0");
  Diffusivity d;
  d.kind_ = Kind::Ramp;
  d.a_ = base;
  d.b_ = slope;
  return d;
}

double Diffusivity::eval(double t, const std::array<double, 2>& x, int dimension) const {
  switch (kind_) {
    case Kind::Constant:
      return a_;
    case Kind::Periodic: {
      const double two_pi = 2.0 * std::numbers::pi;
      double v = std::cos(two_pi * c_ * x[0]);
      if (dimension == 2) v *= std::cos(two_pi * c_ * x[1]);
      return a_ + b_ * v;
    }
    case Kind::Ramp:
      return a_ * (1.0 + b_ * t);
  }
  return a_;
}

double Diffusivity::lower_bound(double final_time) const {
  switch (kind_) {
    case Kind::Constant: return a_;
    case Kind::Periodic: return a_ - std::abs(b_);
    case Kind::Ramp: return std::min(a_, a_ * (1.0 + b_ * final_time));
  }
  return a_;
}

double Diffusivity::upper_bound(double final_time) const {
  switch (kind_) {
    case Kind::Constant: return a_;
    case Kind::Periodic: return a_ + std::abs(b_);
    case Kind::Ramp: return std::max(a_, a_ * (1.0 + b_ * final_time));
  }
  return a_;
}

ReactionSpec ReactionSpec::none() { return ReactionSpec{}; }

ReactionSpec ReactionSpec::reversible_tanh(double rate) {
  if (!(rate >= 0.0)) throw std::invalid_argument("reaction rate must be >= 0");
  ReactionSpec r;
  r.kind_ = Kind::ReversibleTanh;
  r.rate_ = rate;
  return r;
}

ReactionSpec ReactionSpec::constant_source(std::vector<double> rates) {
  ReactionSpec r;
  r.kind_ = Kind::ConstantSource;
  r.rates_ = std::move(rates);
  return r;
}

ReactionSpec ReactionSpec::custom(RateFn fn, double sup_bound) {
  ReactionSpec r;
  r.kind_ = Kind::Custom;
  r.fn_ = std::move(fn);
  r.rate_ = sup_bound;
  return r;
}

void ReactionSpec::eval(double t, const std::array<double, 2>& x,
                        std::span<const double> c, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  switch (kind_) {
    case Kind::None:
      return;
    case Kind::ReversibleTanh: {
      if (c.size() < 2) return;
      const double f = rate_ * std::tanh(c[1] - c[0]);
      out[0] = f;
      out[1] = -f;
      return;
    }
    case Kind::ConstantSource: {
      for (size_t i = 0; i < c.size() && i < rates_.size(); ++i) {
        // Negative sources switch off at c_i = 0 so the rates stay quasi-positive.
        out[i] = (rates_[i] >= 0.0 || c[i] > 0.0) ? rates_[i] : 0.0;
      }
      return;
    }
    case Kind::Custom:
      fn_(t, x, c, out);
      return;
  }
}

double ReactionSpec::sup_bound() const {
  switch (kind_) {
    case Kind::None: return 0.0;
    case Kind::ReversibleTanh: return rate_;
    case Kind::ConstantSource: {
      double m = 0.0;
      for (double r : rates_) m = std::max(m, std::abs(r));
      return m;
    }
    case Kind::Custom: return rate_;
  }
  return 0.0;
}

std::vector<std::string> validate(const ProblemSpec& spec) {
  std::vector<std::string> violations;
  const Grid& grid = spec.grid;
  const int cells = grid.num_cells();
  const int P = spec.num_species();

  if (P < 1) violations.push_back("problem must declare at least one species");
  if (!(spec.final_time > 0.0)) violations.push_back("final_time must be positive");

  // Regularization: eta in [0,1), p >= 2 and p > N/2.
  const auto& reg = spec.regularization;
  if (!(reg.eta >= 0.0 && reg.eta < 1.0))
    violations.push_back("regularization eta must lie in [0,1)");
  if (!(reg.p >= 2.0))
    violations.push_back("regularization exponent p must be >= 2");
  if (!(reg.p > grid.dimension() / 2.0))
    violations.push_back("regularization exponent p must exceed N/2");

  // Boundary data: tau >= 0 everywhere, tau > 0 somewhere, sizes match.
  const size_t nb = grid.boundary_faces().size();
  if (spec.boundary.tau.size() != nb || spec.boundary.xi.size() != nb) {
    violations.push_back("boundary tau/xi must have one value per boundary face");
  } else {
    double tau_max = 0.0;
    bool tau_neg = false;
    for (double t : spec.boundary.tau) {
      tau_max = std::max(tau_max, t);
      if (t < 0.0) tau_neg = true;
    }
    if (tau_neg) violations.push_back("boundary capacity tau must be nonnegative");
    if (!(tau_max > 0.0))
      violations.push_back("tau identically zero: the potential problem needs tau > 0 somewhere");
  }

  // Species: positive diffusivity bounds sampled in (t,x); nonnegative c0.
  const double T = std::max(spec.final_time, 0.0);
  for (int i = 0; i < P; ++i) {
    const auto& s = spec.species[i];
    const std::string tag = "species '" + s.name + "': ";
    if ((int)s.initial_concentration.size() != cells) {
      violations.push_back(tag + "initial concentration must have one value per cell");
      continue;
    }
    const double d_lo = s.diffusivity.lower_bound(T);
    const double d_hi = s.diffusivity.upper_bound(T);
    if (!(d_lo > 0.0)) violations.push_back(tag + "diffusivity lower bound must be positive");
    for (double t : {0.0, 0.5 * T, T}) {
      for (int c = 0; c < cells; ++c) {
        const double d = s.diffusivity.eval(t, grid.cell_center(c), grid.dimension());
        if (d < d_lo - 1e-12 || d > d_hi + 1e-12) {
          violations.push_back(tag + "diffusivity sample escapes its declared bounds");
          goto next_species_diffusivity;
        }
      }
    }
  next_species_diffusivity:
    for (double v : s.initial_concentration) {
      if (v < 0.0) {
        violations.push_back(tag + "initial concentration must be nonnegative");
        break;
      }
    }
  }

  // Reactions: boundedness and quasi-positivity on a deterministic sample set.
  if (P >= 1) {
    const double c_f = spec.reactions.sup_bound();
    const std::array<double, 5> levels{0.0, 0.5, 1.0, 2.0, 10.0};
    std::vector<double> c(P), f(P);
    const std::array<double, 2> x0 = grid.cell_center(0);
    const int combos = 1 << std::min(P, 10);
    for (int mask = 0; mask < combos; ++mask) {
      for (size_t li = 0; li < levels.size(); ++li) {
        for (int i = 0; i < P; ++i)
          c[i] = ((mask >> i) & 1) ? levels[li] : levels[(li + 2) % levels.size()];
        spec.reactions.eval(0.0, x0, c, f);
        for (int i = 0; i < P; ++i) {
          if (std::abs(f[i]) > c_f + 1e-12) {
            violations.push_back("reaction rate exceeds its declared sup bound");
            goto done_reactions;
          }
        }
        // Quasi-positivity along each coordinate face c_i = 0.
        for (int i = 0; i < P; ++i) {
          const double keep = c[i];
          c[i] = 0.0;
          spec.reactions.eval(0.0, x0, c, f);
          if (f[i] < -1e-14) {
            violations.push_back("reaction is not quasi-positive: f_" + std::to_string(i + 1) +
                                 " < 0 at c_" + std::to_string(i + 1) + " = 0");
            goto done_reactions;
          }
          c[i] = keep;
        }
      }
    }
  done_reactions:;
    if (spec.reactions.kind() == ReactionSpec::Kind::ReversibleTanh && P < 2)
      violations.push_back("reversible reaction needs at least two species");
  }

  return violations;
}

}  // namespace npp
