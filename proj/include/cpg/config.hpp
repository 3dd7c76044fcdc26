#pragma once

// Structured run configuration: sectioned key = value text with # comments.
// Sections: [system] (physical parameters, no defaults), [integrator] and
// [run] (defaults applied and echoed), optional [sweep].

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpg/dynamics.hpp"
#include "cpg/gate.hpp"

namespace cpg {

struct RunSection {
    // protocol engine (static-exact, eq3-rk4, eff-vacuum) or a raw evolution
    // source (eq1, eq3, static, eff1, eff2, eff-vacuum) for plain evolution
    std::string engine = "static-exact";
    double horizon = 2.0;          // ns; 0 picks the analytic gate time
    std::string initial = "gg";    // ff, fg, gf, gg or custom:re,im x 4
    bool with_decay = false;
    bool calibrate = false;
    std::uint64_t seed = 1;
    int n_trajectories = 2000;
    double sample_dt = 5e-4;       // ns
};

struct RunConfig {
    SystemParams system;
    IntegratorConfig integrator;
    RunSection run;
    // resolved key=value lines, including applied defaults, for provenance
    std::vector<std::string> echo;
};

struct SweepSpec {
    std::string parameter;       // any SystemParams scalar
    std::vector<double> values;  // explicit list or expanded start:stop:step
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// parses the optional [sweep] section; nullopt when absent
std::optional<SweepSpec> parse_sweep(const std::string& text);

// applies a swept scalar to a parameter set; throws ConfigError for unknown names
SystemParams with_parameter(const SystemParams& base, const std::string& name,
                            double value);

StateVector initial_state(const RunConfig& cfg, const HilbertSpace& space);

}  // namespace cpg
