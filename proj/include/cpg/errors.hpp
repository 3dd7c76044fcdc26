#pragma once

#include <stdexcept>
#include <string>

namespace cpg {

struct InvalidTruncationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct LayoutError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct HermiticityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A resonance divisor in the derived-coupling formulas vanished.
struct ResonanceError : std::runtime_error {
    explicit ResonanceError(const std::string& denominator)
        : std::runtime_error("resonant denominator vanishes: " + denominator),
          denominator(denominator) {}
    std::string denominator;
};

struct GateTimeUndefinedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DtStabilityError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct MaxStepsExceededError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntegratorFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SamplingTooCoarseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LeakageTooLargeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingObservableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& key_path, const std::string& what)
        : std::runtime_error(key_path + ": " + what), key_path(key_path) {}
    std::string key_path;
};

}  // namespace cpg
