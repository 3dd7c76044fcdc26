#pragma once

// Time-evolution engines: exact eigendecomposition propagation for
// time-independent sources, fixed-step RK4 / midpoint-Magnus integration for
// the time-dependent pictures, Lindblad master-equation and Monte-Carlo
// wavefunction evolution, and the frame map between pictures.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpg/model.hpp"

namespace cpg {

enum class Source { Eq1, Eq3, Static, Eff1, Eff2, EffVacuum };

const char* source_name(Source s);
std::optional<Source> source_from_name(const std::string& name);
HamiltonianSpec source_spec(Source s, const SystemParams& p);
HilbertSpace source_space(Source s, const SystemParams& p);

enum class Method { ExactEigen, Rk4Fixed, Magnus2Midpoint };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct IntegratorConfig {
    Method method = Method::ExactEigen;
    // integration step for rk4/magnus2; output spacing for exact-eigen (ns)
    double dt = 5e-7;
    int sample_every = 1;      // record every k-th step
    long long max_steps = 500000000;
    // rk4/magnus2 require dt * omega_max <= 0.2 unless overridden
    bool allow_unstable_dt = false;
    int snapshot_stride = 0;   // 0: keep endpoints only
};

struct Trajectory {
    HilbertSpace space;
    std::vector<double> times;  // ns, strictly increasing
    // named real series, one value per recorded time; always includes "norm"
    // (trace for density runs), "re_overlap"/"im_overlap" with the initial
    // state, and for the standard layout "Pe_A", "Pe_B", "n_photon_total",
    // "n_c1", "n_c2"
    std::map<std::string, std::vector<double>> observables;
    std::vector<std::pair<double, Vector>> snapshots;
    Vector final_state;     // pure-state engines
    Matrix final_density;   // density engine
    bool is_density = false;

    const std::vector<double>& series(const std::string& name) const;
};

Trajectory evolve_state(Source source, const SystemParams& p,
                        const StateVector& psi0, double T,
                        const IntegratorConfig& cfg);

// Lindblad master equation. For time-independent sources the unitary part is
// treated exactly (interaction picture of the eigenbasis) and only the slow
// dissipator is RK4-integrated with step cfg.dt; time-dependent sources fall
// back to plain RK4 with the usual stability bound.
Trajectory evolve_density(Source source, const SystemParams& p,
                          const std::vector<CollapseChannel>& collapse,
                          const DensityMatrix& rho0, double T,
                          const IntegratorConfig& cfg);

struct McwfOptions {
    int n_trajectories = 1000;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: hardware default
};

// Ensemble-averaged quantum trajectories for the static source. The
// non-Hermitian generator H - i hbar/2 sum_k kappa_k c_k^+ c_k is
// exponentiated once per dyadic step size; jump times are located by dyadic
// bisection of the monotone norm decay. Deterministic for a fixed seed,
// including under parallel execution. In addition to the mean observables the
// ensemble-mean computational-block coherences are recorded as
// re_rho_<i><j>/im_rho_<i><j> with i,j in {ff,fg,gf,gg}, and the mean number
// of jumps as "jump_mean".
Trajectory mcwf_evolve(const SystemParams& p,
                       const std::vector<CollapseChannel>& collapse,
                       const StateVector& psi0, double T,
                       const IntegratorConfig& cfg, const McwfOptions& opt);

enum class FrameDirection { StaticToEq3, Eq3ToStatic };

// Map a state between the static lab-frame picture and the Eq. (3)
// interaction picture: the normal-mode rotation composed with
// exp(+i H_diag t / hbar). Round trips are identities to machine precision.
StateVector frame_map(const StateVector& state, double t_ns,
                      FrameDirection direction, const SystemParams& p);

}  // namespace cpg
