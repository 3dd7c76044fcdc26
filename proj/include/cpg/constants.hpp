#pragma once

namespace cpg {

// hbar in meV*ns (CODATA). All Hamiltonians carry meV, all times ns.
inline constexpr double kHbar = 6.582119569e-4;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace cpg
