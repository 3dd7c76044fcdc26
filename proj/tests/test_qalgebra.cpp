#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cpg/hilbert.hpp"
#include "cpg/model.hpp"

using namespace cpg;

namespace {

Matrix random_hermitian(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
    return 0.5 * (m + Matrix(m.adjoint()));
}

}  // namespace

TEST_CASE("hilbert space layout") {
    const HilbertSpace s = make_space(2, BosonBasis::Lab);
    CHECK(s.total_dim() == 81);
    CHECK(s.factors.size() == 4);
    const HilbertSpace s3 = make_space(3, BosonBasis::Lab);
    CHECK(s3.total_dim() == 9 * 16);
    CHECK(make_space(2, BosonBasis::Lab) == make_space(2, BosonBasis::Lab));
    CHECK_FALSE(make_space(2, BosonBasis::Lab) ==
                make_space(2, BosonBasis::NormalModes));
    CHECK_THROWS_AS(make_space(0, BosonBasis::Lab), InvalidTruncationError);
}

TEST_CASE("fock annihilator entries and truncation identity") {
    const Matrix a = fock_annihilator(2);
    CHECK(a(0, 1).real() == doctest::Approx(1.0));
    CHECK(a(1, 2).real() == doctest::Approx(std::sqrt(2.0)));
    CHECK(a.cwiseAbs().sum() == doctest::Approx(1.0 + std::sqrt(2.0)));

    // [a, a+] = diag(1, ..., 1, -n_max) at machine precision, n_max in 1..6
    for (int n_max = 1; n_max <= 6; ++n_max) {
        const Matrix an = fock_annihilator(n_max);
        const Matrix comm = an * an.adjoint() - an.adjoint() * an;
        for (int i = 0; i < n_max; ++i)
            CHECK(std::abs(comm(i, i).real() - 1.0) < 1e-14);
        CHECK(std::abs(comm(n_max, n_max).real() + double(n_max)) < 1e-14);
        CHECK((comm - Matrix(comm.diagonal().asDiagonal())).cwiseAbs().maxCoeff() ==
              0.0);
    }

    const Matrix a1 = fock_annihilator(1);
    const Matrix num = a1.adjoint() * a1;
    CHECK(num(0, 0).real() == 0.0);
    CHECK(num(1, 1).real() == 1.0);

    CHECK_THROWS_AS(fock_annihilator(0), InvalidTruncationError);
}

TEST_CASE("qd operators") {
    const Matrix sp = qd_operator(QdOperatorKind::SigmaPlus);
    const Matrix sm = qd_operator(QdOperatorKind::SigmaMinus);
    const Matrix pe = qd_operator(QdOperatorKind::ProjE);
    const Matrix pg = qd_operator(QdOperatorKind::ProjG);
    const Matrix pf = qd_operator(QdOperatorKind::ProjF);
    CHECK((sp * sm - pe).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sm * sp - pg).cwiseAbs().maxCoeff() == 0.0);
    // |f> is decoupled from the sigma ladder
    CHECK((pf * sp).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sp * pf).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sm * sp * pf).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embed places operators and commutes across factors") {
    const HilbertSpace s = make_space(2, BosonBasis::Lab);
    const Operator peA = embed(qd_operator(QdOperatorKind::ProjE), 0, s);
    const Operator peB = embed(qd_operator(QdOperatorKind::ProjE), 1, s);
    CHECK(((peA * peB) - (peB * peA)).matrix.cwiseAbs().maxCoeff() == 0.0);

    const Operator pgA = embed(qd_operator(QdOperatorKind::ProjG), 0, s);
    CHECK(pgA.matrix.trace().real() == doctest::Approx(81.0 / 3.0));

    // 2-factor space of dims (3, 2)
    HilbertSpace small{{{FactorKind::QDot, 3}, {FactorKind::BosonMode, 2}},
                       BosonBasis::Lab};
    const Operator e = embed(fock_annihilator(1), 1, small);
    CHECK(e.matrix.rows() == 6);

    CHECK_THROWS_AS(embed(fock_annihilator(3), 0, s), LayoutError);
    CHECK_THROWS_AS(embed(fock_annihilator(2), 7, s), LayoutError);

    // embedding is a homomorphism on a single factor
    std::mt19937_64 rng(7);
    const Matrix x = random_hermitian(3, rng);
    const Matrix y = random_hermitian(3, rng);
    const Operator ex = embed(x, 0, s);
    const Operator ey = embed(y, 0, s);
    const Operator exy = embed(x * y, 0, s);
    CHECK(((ex * ey) - exy).matrix.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("hermiticity defect") {
    const Matrix a = fock_annihilator(2);
    CHECK(hermiticity_defect(a) == doctest::Approx(std::sqrt(2.0)));
    CHECK(hermiticity_defect(Matrix(a + a.adjoint())) == 0.0);
    std::mt19937_64 rng(3);
    const Matrix h = random_hermitian(10, rng);
    CHECK(hermiticity_defect(h) == 0.0);
}

TEST_CASE("propagator basics") {
    const HilbertSpace s = make_space(1, BosonBasis::Lab);
    const int n = s.total_dim();

    // H = 0 -> identity for any t
    const Operator zero{s, Matrix::Zero(n, n)};
    const Operator u0 = propagator(zero, 3.7);
    CHECK((u0.matrix - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-14);

    // diagonal H: U_00 = exp(-i E t / hbar)
    Matrix hd = Matrix::Zero(n, n);
    hd(0, 0) = 1.25;
    const double t = 0.8;
    const Operator ud = propagator({s, hd}, t);
    const Complex expected = std::exp(Complex(0.0, -1.25 * t / kHbar));
    CHECK(std::abs(ud.matrix(0, 0) - expected) < 1e-12);

    // non-Hermitian input is rejected
    Matrix nh = Matrix::Zero(n, n);
    nh(0, 1) = 1.0;
    CHECK_THROWS_AS(propagator({s, nh}, 1.0), HermiticityError);
}

TEST_CASE("propagator of the static model is unitary and composes") {
    const SystemParams p = paper_sec5_params();
    const Operator h = hamiltonian_static(p);
    const Operator u = propagator(h, 1.0);
    const int n = h.space.total_dim();
    const Matrix defect = u.matrix.adjoint() * u.matrix - Matrix::Identity(n, n);
    CHECK(defect.cwiseAbs().maxCoeff() < 1e-10);

    const Operator u1 = propagator(h, 0.3);
    const Operator u2 = propagator(h, 0.9);
    const Operator u12 = propagator(h, 1.2);
    CHECK((u12.matrix - u1.matrix * u2.matrix).cwiseAbs().maxCoeff() < 1e-9);

    // norm preservation
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    Vector psi(n);
    for (int i = 0; i < n; ++i) psi[i] = Complex(g(rng), g(rng));
    psi.normalize();
    CHECK(std::abs((u.matrix * psi).norm() - 1.0) < 1e-10);
}

TEST_CASE("state and density validation") {
    const HilbertSpace s = make_qubit_space();
    Vector good(4);
    good << 0.5, 0.5, 0.5, 0.5;
    CHECK_NOTHROW(StateVector(s, good));
    Vector bad(4);
    bad << 1.0, 1.0, 0.0, 0.0;
    CHECK_THROWS(StateVector(s, bad));

    Matrix rho = 0.25 * Matrix::Identity(4, 4);
    CHECK_NOTHROW(DensityMatrix(s, rho));
    Matrix neg = rho;
    neg(0, 0) = -0.25;
    neg(1, 1) = 0.75;
    CHECK_THROWS(DensityMatrix(s, neg));
}

TEST_CASE("expm_general matches the Hermitian route") {
    std::mt19937_64 rng(42);
    const Matrix h = random_hermitian(12, rng, 2.0);
    EigenSystem es(h);
    const Matrix u_eig = es.propagator(0.37);
    const Matrix u_pade = expm_general(Complex(0.0, -0.37 / kHbar) * h);
    CHECK((u_eig - u_pade).cwiseAbs().maxCoeff() < 1e-9);
}
