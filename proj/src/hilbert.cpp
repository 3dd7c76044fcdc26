#include "cpg/hilbert.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace cpg {

Complex phase_factor(double freq_meV, double t_ns) {
    constexpr long double two_pi = 6.283185307179586476925286766559005768L;
    long double arg = static_cast<long double>(freq_meV) *
                      static_cast<long double>(t_ns) /
                      static_cast<long double>(kHbar);
    arg = std::fmod(arg, two_pi);
    return Complex(double(std::cos(arg)), double(std::sin(arg)));
}

std::string HilbertSpace::describe() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < factors.size(); ++i) {
        if (i) os << ", ";
        switch (factors[i].kind) {
            case FactorKind::QDot: os << "QDot(3)"; break;
            case FactorKind::BosonMode: os << "Boson(" << factors[i].dim << ")"; break;
            case FactorKind::QubitPair: os << "QubitPair(4)"; break;
        }
    }
    os << "]";
    switch (basis) {
        case BosonBasis::Lab: os << " lab"; break;
        case BosonBasis::NormalModes: os << " normal"; break;
        case BosonBasis::None: break;
    }
    return os.str();
}

HilbertSpace make_space(int n_max, BosonBasis basis) {
    if (n_max < 1) throw InvalidTruncationError("n_max must be >= 1");
    const int bd = n_max + 1;
    return {{{FactorKind::QDot, 3},
             {FactorKind::QDot, 3},
             {FactorKind::BosonMode, bd},
             {FactorKind::BosonMode, bd}},
            basis};
}

HilbertSpace make_qubit_space() {
    return {{{FactorKind::QubitPair, 4}}, BosonBasis::None};
}

void require_same_space(const HilbertSpace& a, const HilbertSpace& b,
                        const char* what) {
    if (!(a == b))
        throw LayoutError(std::string(what) + ": layout mismatch (" +
                          a.describe() + " vs " + b.describe() + ")");
}

Operator operator+(const Operator& a, const Operator& b) {
    require_same_space(a.space, b.space, "operator+");
    return {a.space, a.matrix + b.matrix};
}
Operator operator-(const Operator& a, const Operator& b) {
    require_same_space(a.space, b.space, "operator-");
    return {a.space, a.matrix - b.matrix};
}
Operator operator*(const Operator& a, const Operator& b) {
    require_same_space(a.space, b.space, "operator*");
    return {a.space, a.matrix * b.matrix};
}
Operator operator*(Complex s, const Operator& a) { return {a.space, s * a.matrix}; }

StateVector::StateVector(HilbertSpace space_, Vector amplitudes_)
    : space(std::move(space_)), amplitudes(std::move(amplitudes_)) {
    if (amplitudes.size() != space.total_dim())
        throw LayoutError("StateVector: dimension does not match layout");
    if (std::abs(amplitudes.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("StateVector: norm must be 1 within 1e-9");
}

DensityMatrix::DensityMatrix(HilbertSpace space_, Matrix rho_)
    : space(std::move(space_)), rho(std::move(rho_)) {
    const int n = space.total_dim();
    if (rho.rows() != n || rho.cols() != n)
        throw LayoutError("DensityMatrix: dimension does not match layout");
    const double scale = rho.cwiseAbs().maxCoeff();
    if (hermiticity_defect(rho) > 1e-9 * std::max(scale, 1.0))
        throw std::invalid_argument("DensityMatrix: not Hermitian");
    if (std::abs(rho.trace().real() - 1.0) > 1e-9)
        throw std::invalid_argument("DensityMatrix: trace must be 1 within 1e-9");
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw std::invalid_argument("DensityMatrix: negative eigenvalue");
}

int basis_index(const HilbertSpace& space, const std::vector<int>& levels) {
    if (levels.size() != space.factors.size())
        throw LayoutError("basis_index: wrong number of quantum numbers");
    int idx = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] < 0 || levels[i] >= space.factors[i].dim)
            throw LayoutError("basis_index: quantum number out of range");
        idx = idx * space.factors[i].dim + levels[i];
    }
    return idx;
}

Matrix fock_annihilator(int n_max) {
    if (n_max < 1) throw InvalidTruncationError("fock_annihilator: n_max must be >= 1");
    Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

Matrix qd_operator(QdOperatorKind kind) {
    Matrix m = Matrix::Zero(3, 3);
    switch (kind) {
        case QdOperatorKind::SigmaPlus: m(2, 0) = 1.0; break;
        case QdOperatorKind::SigmaMinus: m(0, 2) = 1.0; break;
        case QdOperatorKind::ProjG: m(0, 0) = 1.0; break;
        case QdOperatorKind::ProjF: m(1, 1) = 1.0; break;
        case QdOperatorKind::ProjE: m(2, 2) = 1.0; break;
    }
    return m;
}

Operator embed(const Matrix& op, int factor_index, const HilbertSpace& space) {
    const int nf = int(space.factors.size());
    if (factor_index < 0 || factor_index >= nf)
        throw LayoutError("embed: factor index out of range");
    const int d = space.factors[factor_index].dim;
    if (op.rows() != d || op.cols() != d)
        throw LayoutError("embed: operator dimension does not match factor");
    int left = 1, right = 1;
    for (int i = 0; i < factor_index; ++i) left *= space.factors[i].dim;
    for (int i = factor_index + 1; i < nf; ++i) right *= space.factors[i].dim;

    const int n = space.total_dim();
    Matrix out = Matrix::Zero(n, n);
    for (int l = 0; l < left; ++l)
        for (int r2 = 0; r2 < d; ++r2)
            for (int c2 = 0; c2 < d; ++c2) {
                const Complex v = op(r2, c2);
                if (v == Complex(0.0)) continue;
                const int row0 = (l * d + r2) * right;
                const int col0 = (l * d + c2) * right;
                for (int k = 0; k < right; ++k) out(row0 + k, col0 + k) += v;
            }
    return {space, std::move(out)};
}

double hermiticity_defect(const Matrix& op) {
    return (op - op.adjoint()).cwiseAbs().maxCoeff();
}

EigenSystem::EigenSystem(const Matrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian);
    energies = es.eigenvalues();
    vectors = es.eigenvectors();
}

Vector EigenSystem::evolve(const Vector& psi, double t_ns) const {
    Vector w = vectors.adjoint() * psi;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w[i] *= phase_factor(-energies[i], t_ns);
    return vectors * w;
}

Matrix EigenSystem::propagator(double t_ns) const {
    Vector ph(energies.size());
    for (Eigen::Index i = 0; i < ph.size(); ++i)
        ph[i] = phase_factor(-energies[i], t_ns);
    return vectors * ph.asDiagonal() * vectors.adjoint();
}

Operator propagator(const Operator& hamiltonian, double t_ns) {
    const double scale = hamiltonian.matrix.cwiseAbs().maxCoeff();
    if (hermiticity_defect(hamiltonian) > 1e-12 * std::max(scale, 1.0))
        throw HermiticityError(
            "propagator: Hamiltonian not Hermitian (use expm_general for "
            "non-Hermitian generators)");
    EigenSystem es(hamiltonian.matrix);
    return {hamiltonian.space, es.propagator(t_ns)};
}

Matrix expm_general(const Matrix& m) {
    // Pade-13 scaling and squaring (Higham), plain dense version
    const double nrm = m.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
    int squarings = 0;
    const double theta13 = 5.371920351148152;
    if (nrm > theta13)
        squarings = std::max(0, int(std::ceil(std::log2(nrm / theta13))));
    const Matrix a = m / std::pow(2.0, squarings);
    const double b[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                        1187353796428800.,  129060195264000.,   10559470521600.,
                        670442572800.,      33522128640.,       1323241920.,
                        40840800.,          960960.,            16380.,
                        182.,               1.};
    const int n = int(a.rows());
    const Matrix I = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a2 * a4;
    Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
                    b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * I);
    Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
               b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * I;
    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

}  // namespace cpg
