#pragma once

#include <string>

namespace npp {

/// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitCertificate = 4;

struct CliFlags {
  std::string output_dir;  // overrides the config's output directory
  int jobs = 0;            // overrides the config's worker count
  bool quiet = false;
};

int cmd_run(const std::string& config_path, const CliFlags& flags = {});
int cmd_sweep(const std::string& config_path, const CliFlags& flags = {});
int cmd_equilibrium(const std::string& config_path, const CliFlags& flags = {});
int cmd_verify(const std::string& fixture_dir, const CliFlags& flags = {});

}  // namespace npp
