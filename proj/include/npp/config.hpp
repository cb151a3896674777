#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "npp/continuation.hpp"
#include "npp/coupling.hpp"
#include "npp/model.hpp"

namespace npp {

/// Malformed or invalid configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpeciesConfig {
  std::string name;
  int charge = 0;
  std::string diffusivity = "constant 1.0";
  std::string initial = "uniform 1.0";
  bool operator==(const SpeciesConfig&) const = default;
};

struct CertificateConfig {
  bool mass = true;
  double mass_tol_rel = 1e-10;
  bool entropy = true;
  double entropy_slack_rel = 1e-8;
  bool uniform_eta = true;  // sweep only
  bool cauchy = false;      // sweep only: decreasing L1 gaps, last < first/5
  double sup_bound_k = 0.0; // 0 disables the sup monitor
  bool operator==(const CertificateConfig&) const = default;
};

/// Flat, human-readable run configuration. Parsing is strict: unknown
/// sections or keys are rejected, and parse(serialize(x)) == x.
struct RunConfig {
  // [grid]
  int dimension = 1;
  std::vector<int> cells{64};
  std::vector<double> extent{1.0};
  // [species.<name>] in file order
  std::vector<SpeciesConfig> species;
  // [reactions]
  std::string reaction_kind = "none";
  double reaction_rate = 0.0;
  std::vector<double> reaction_rates;
  // [boundary]
  std::string tau = "constant 1.0";
  std::string xi = "constant 0.0";
  std::string xi_exponent = "inf";
  // [regularization]
  double eta = 0.0;
  double p = 2.0;
  // [time]
  double dt = 1e-3;
  double final_time = 1.0;
  int outputs = 0;                   // uniform output times j*T/outputs
  std::vector<double> output_times;  // explicit alternative
  // [solver]
  double damping = 0.8;
  double fp_tol = 1e-9;
  int fp_max_iter = 200;
  double poisson_tol = 1e-10;
  double inner_tol = 1e-11;
  int inner_max_iter = 50;
  bool allow_dt_halving = false;
  int jobs = 0;
  // [sweep]
  std::vector<double> eta_schedule;
  std::vector<double> tk_levels{4.0, 16.0, 256.0};
  // [output]
  std::string output_directory = "out";
  std::uint64_t seed = 0;
  // [certificates]
  CertificateConfig certificates;

  bool operator==(const RunConfig&) const = default;

  static RunConfig parse(const std::string& text);
  static RunConfig parse_file(const std::string& path);
  std::string serialize() const;

  ProblemSpec build_problem() const;
  CouplingOptions coupling_options() const;
  std::vector<double> resolved_output_times() const;
};

}  // namespace npp
