#pragma once

// Truncated-Fock and three-level operator algebra: Hilbert-space layout,
// tensor embedding, matrix exponentials and basic operator diagnostics.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "cpg/constants.hpp"
#include "cpg/errors.hpp"

namespace cpg {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// exp(i freq t / hbar) with the angle reduced in extended precision; plain
// double sin/cos lose ~1e-10 at the 1e6..1e8 rad arguments these phases reach
Complex phase_factor(double freq_meV, double t_ns);

enum class FactorKind : std::uint8_t { QDot, BosonMode, QubitPair };

// Which physical modes the two boson factors represent.
enum class BosonBasis : std::uint8_t { Lab, NormalModes, None };

struct Factor {
    FactorKind kind;
    int dim;
    bool operator==(const Factor&) const = default;
};

struct HilbertSpace {
    std::vector<Factor> factors;
    BosonBasis basis = BosonBasis::None;

    bool operator==(const HilbertSpace&) const = default;

    int total_dim() const {
        int d = 1;
        for (const auto& f : factors) d *= f.dim;
        return d;
    }
    // product of the dimensions of factors after index i
    int stride(int i) const {
        int s = 1;
        for (std::size_t k = i + 1; k < factors.size(); ++k) s *= factors[k].dim;
        return s;
    }
    std::string describe() const;
};

// Standard layout: [QDot A, QDot B, mode 1, mode 2], dots with levels (g,f,e).
HilbertSpace make_space(int n_max, BosonBasis basis);
// 4-dim two-qubit space, ordering |q_A q_B> = (ff, fg, gf, gg).
HilbertSpace make_qubit_space();

struct Operator {
    HilbertSpace space;
    Matrix matrix;

    Operator adjoint() const { return {space, matrix.adjoint()}; }
};

void require_same_space(const HilbertSpace& a, const HilbertSpace& b,
                        const char* what);

Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator*(const Operator& a, const Operator& b);
Operator operator*(Complex s, const Operator& a);

struct StateVector {
    HilbertSpace space;
    Vector amplitudes;

    // norm must be 1 +- 1e-9
    StateVector(HilbertSpace space, Vector amplitudes);
};

struct DensityMatrix {
    HilbertSpace space;
    Matrix rho;

    // Hermitian, trace 1 +- 1e-9, min eigenvalue >= -1e-9
    DensityMatrix(HilbertSpace space, Matrix rho);
};

// index of the product basis state with per-factor quantum numbers `levels`
int basis_index(const HilbertSpace& space, const std::vector<int>& levels);

enum class QdOperatorKind { SigmaPlus, SigmaMinus, ProjG, ProjF, ProjE };

// (n_max+1)-dim truncated ladder operator, <n-1|a|n> = sqrt(n)
Matrix fock_annihilator(int n_max);
// 3x3 dot operator in basis order (g, f, e)
Matrix qd_operator(QdOperatorKind kind);

// full-space operator acting as `op` on factor `factor_index`, identity elsewhere
Operator embed(const Matrix& op, int factor_index, const HilbertSpace& space);

double hermiticity_defect(const Matrix& op);
inline double hermiticity_defect(const Operator& op) {
    return hermiticity_defect(op.matrix);
}

// U = exp(-i H t / hbar) via Hermitian eigendecomposition; H in meV, t in ns.
// Throws HermiticityError unless H is Hermitian within 1e-12 * scale.
Operator propagator(const Operator& hamiltonian, double t_ns);

// exp(M) for a general complex matrix (scaling and squaring). Used by the
// quantum-trajectory solver whose generator is deliberately non-Hermitian.
Matrix expm_general(const Matrix& m);

// cached Hermitian eigendecomposition, the workhorse of the exact engines
struct EigenSystem {
    Eigen::VectorXd energies;  // meV
    Matrix vectors;            // columns

    explicit EigenSystem(const Matrix& hermitian);
    // exp(-i H t / hbar) | psi >
    Vector evolve(const Vector& psi, double t_ns) const;
    Matrix propagator(double t_ns) const;
};

}  // namespace cpg
