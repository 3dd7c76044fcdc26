#pragma once

// Physical parameters, closed-form derived couplings, and constructors for
// every Hamiltonian variant: the lab-frame and normal-mode interaction
// pictures, the time-independent rotating-frame model, the two-stage
// effective Hamiltonians, the vacuum-restricted qubit Hamiltonian, and the
// Lindblad collapse operators.

#include <complex>
#include <string>
#include <vector>

#include "cpg/hilbert.hpp"

namespace cpg {

struct SystemParams {
    Complex g_A{0.0, 0.0};       // QD-cavity couplings, meV
    Complex g_B{0.0, 0.0};
    Complex Omega_A{0.0, 0.0};   // classical Rabi frequencies, meV
    Complex Omega_B{0.0, 0.0};
    double Delta_A = 0.0;        // laser-QD detunings, meV
    double Delta_B = 0.0;
    double delta = 0.0;          // cavity offset, Delta_j^C = Delta_j + delta
    double nu = 0.0;             // cavity-cavity hopping, meV
    double tau_c = 0.0;          // cavity decay time, ns
    double tau_e = 0.0;          // excited-state relaxation time, ns
    int n_max = 2;               // boson truncation

    // throws ResonanceError / std::invalid_argument on violated invariants
    void validate() const;
};

// Section V reference parameter set (delta = 2 g_A, nu = 12 g_A).
SystemParams paper_sec5_params();

struct DerivedCouplings {
    Complex lambda_A1, lambda_A2, lambda_B1, lambda_B2;  // meV
    double k_A, k_B;                                     // meV
    double l_A1, l_A2, l_A3, l_B1, l_B2, l_B3;           // meV
    double theta_1, theta_2;                             // rad
    double Delta_1, Delta_2;                             // delta -+ nu, meV
    double Phi_A, Phi_B;                                 // meV
    double eta;                                          // meV
    double t_gate;                                       // pi*hbar/eta, ns
};

DerivedCouplings derived_couplings(const SystemParams& p);

struct RegimeCondition {
    std::string name;
    double left;   // the side that must dominate
    double right;
    double ratio() const { return right > 0.0 ? left / right : 0.0; }
};

struct RegimeReport {
    std::vector<RegimeCondition> conditions;
    double warn_threshold = 10.0;
    bool pass = true;       // no ratio below threshold
    double min_ratio = 0.0;
};

RegimeReport regime_report(const SystemParams& p, const DerivedCouplings& d,
                           double warn_threshold = 10.0);

// A Hamiltonian of the form  static_part + sum_k [amp_k e^{i f_k t/hbar} op_k + h.c.]
struct HarmonicTerm {
    Matrix op;
    Complex amp;
    double freq;  // meV
};

struct HamiltonianSpec {
    HilbertSpace space;
    Matrix static_part;
    std::vector<HarmonicTerm> terms;

    bool time_independent() const { return terms.empty(); }
    double max_freq() const;  // meV; 0 when time-independent
    Matrix at(double t_ns) const;
    void apply(double t_ns, const Vector& psi, Vector& out) const;  // out = H(t) psi
};

HamiltonianSpec spec_eq1(const SystemParams& p);
HamiltonianSpec spec_eq3(const SystemParams& p);
HamiltonianSpec spec_static(const SystemParams& p, BosonBasis basis);
HamiltonianSpec spec_eff_stage1(const SystemParams& p);
HamiltonianSpec spec_eff_stage2(const SystemParams& p);
HamiltonianSpec spec_eff_vacuum(const SystemParams& p);

Operator hamiltonian_eq1(double t_ns, const SystemParams& p);
Operator hamiltonian_eq3(double t_ns, const SystemParams& p);
Operator hamiltonian_static(const SystemParams& p,
                            BosonBasis basis = BosonBasis::Lab);
Operator h_eff_stage1(double t_ns, const SystemParams& p);
Operator h_eff_stage2(const SystemParams& p);
Operator h_eff_vacuum(const SystemParams& p);

// Eq. (1) rebuilt through the normal-mode route: undo the hopping-frame
// rotation of Eq. (3), substitute a_A = (c1+c2)/sqrt(2), a_B = (c2-c1)/sqrt(2)
// at the ladder-matrix level, and re-add the hopping term. Must reproduce
// hamiltonian_eq1 to machine precision.
Operator hamiltonian_eq1_via_normal_modes(double t_ns, const SystemParams& p);

// Diagonal frame Hamiltonian of the static model in the normal-mode basis:
// Delta_j |e><e|_j - (delta+nu) c1^+c1 - (delta-nu) c2^+c2.
Operator static_frame_diagonal(const SystemParams& p);

// Exactly unitary mode rotation mapping normal-mode coordinates to lab
// coordinates, psi_lab = R psi_normal (beam-splitter exponential on the
// truncated pair space, identity on the dots).
Matrix normal_mode_rotation(const HilbertSpace& space);

struct CollapseChannel {
    std::string name;
    Operator op;
    double rate;  // 1/ns
};

// cavity loss on each mode at 1/tau_c, exciton relaxation |g><e|_j at 1/tau_e
std::vector<CollapseChannel> collapse_operators(const SystemParams& p,
                                                BosonBasis basis = BosonBasis::Lab);

// embedded single-factor operators for the standard layout, used internally
// and by observable evaluation
struct SpaceOps {
    HilbertSpace space;
    Matrix sp_A, sp_B;      // sigma^+ embeddings
    Matrix pg_A, pg_B, pe_A, pe_B;
    Matrix m1, m2;          // ladder operators of the two boson factors
    Matrix n1, n2;          // number operators
    explicit SpaceOps(const HilbertSpace& space);
};

}  // namespace cpg
