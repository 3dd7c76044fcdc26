#pragma once

// Batch-command implementations behind the CLI: derivation report, trajectory
// CSV emission, gate analysis, parameter sweeps, and the full-vs-effective
// validation harness. Kept in the library so tests can drive them directly.

#include <iosfwd>
#include <string>

#include "cpg/config.hpp"

namespace cpg {

// exit-code contract
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitResonance = 2,
    kExitStrictRegime = 3,
    kExitEngine = 4,
    kExitEmptySweep = 5,
    kExitBudget = 6,
};

struct CommandOptions {
    std::string out_path;       // empty: stdout only
    bool strict = false;        // regime warnings become exit 3
    bool echo_config = false;
    int threads = 0;
    std::optional<std::uint64_t> seed_override;
    double regime_warn_threshold = 10.0;
    double validate_horizon = 0.5;        // ns
    double validate_budget_ns = 1.0;      // max eq3 horizon accepted
    double validate_overlap_threshold = 1e-6;   // 1 - overlap
    double validate_rate_threshold = 0.10;      // relative deviation
};

int cmd_derive(const RunConfig& cfg, const CommandOptions& opt, std::ostream& os);
int cmd_evolve(const RunConfig& cfg, const CommandOptions& opt, std::ostream& os);
int cmd_gate(const RunConfig& cfg, const CommandOptions& opt, std::ostream& os);
int cmd_sweep(const RunConfig& cfg, const SweepSpec& spec,
              const CommandOptions& opt, std::ostream& os);
int cmd_validate(const RunConfig& cfg, const CommandOptions& opt, std::ostream& os);

// GateReport serialization (JSON) and human-readable summary
std::string gate_report_json(const GateReport& rep);
void print_gate_summary(const GateReport& rep, std::ostream& os);

std::string trajectory_csv(const Trajectory& traj);

}  // namespace cpg
