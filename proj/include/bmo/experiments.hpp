#pragma once

#include <string>

#include "bmo/config.hpp"
#include "bmo/report.hpp"

namespace bmo {

// Theorem-level experiment drivers. Each writes <name>_report.csv/.json
// (plus auxiliary tables) into out_dir and returns the verdict report.
// Outputs are byte-stable for a fixed config: no timestamps, fixed float
// formatting, deterministic record order.

VerdictReport run_simulate(const ExperimentConfig& cfg, const std::string& out_dir);
VerdictReport run_bmo(const ExperimentConfig& cfg, const std::string& out_dir);
VerdictReport run_verify_rp(const ExperimentConfig& cfg, const std::string& out_dir);
VerdictReport run_verify_ap(const ExperimentConfig& cfg, const std::string& out_dir);
VerdictReport run_bsde(const ExperimentConfig& cfg, const std::string& out_dir);
VerdictReport run_picard(const ExperimentConfig& cfg, const std::string& out_dir);
VerdictReport run_theorem1(const ExperimentConfig& cfg, const std::string& out_dir);
VerdictReport run_theorem2(const ExperimentConfig& cfg, const std::string& out_dir);
VerdictReport run_corollary(const ExperimentConfig& cfg, const std::string& out_dir);
VerdictReport run_constants(const ExperimentConfig& cfg, const std::string& out_dir);

// Dispatch by subcommand name; throws InputError for unknown names.
VerdictReport run_subcommand(const std::string& name, const ExperimentConfig& cfg,
                             const std::string& out_dir);

}  // namespace bmo
