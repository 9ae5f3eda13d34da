#include <catch2/catch_amalgamated.hpp>

#include "qlyap/qla.hpp"
#include "support.hpp"

using namespace qlyap;
using qlyap::testing::random_hermitian;

namespace {
const Complex I(0, 1);
}

TEST_CASE("commutator of identity vanishes") {
    std::mt19937 rng(11);
    for (int n : {2, 3, 5}) {
        const Matrix x = testing::random_complex(n, rng);
        REQUIRE(commutator(Matrix::Identity(n, n), x).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("diagonal matrices commute") {
    Matrix d1 = Matrix::Zero(3, 3), d2 = Matrix::Zero(3, 3);
    d1.diagonal() << 1.0, 2.0, 3.0;
    d2.diagonal() << -0.5, 0.25, 7.0;
    REQUIRE(commutator(d1, d2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pauli commutator against direct arithmetic") {
    Matrix sx(2, 2), sy(2, 2), sz(2, 2);
    sx << 0, 1, 1, 0;
    sy << 0, -I, I, 0;
    sz << 1, 0, 0, -1;
    // oracle: elementwise product difference
    Matrix oracle = Matrix::Zero(2, 2);
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) oracle(j, k) += sx(j, l) * sy(l, k) - sy(j, l) * sx(l, k);
    REQUIRE((oracle - 2.0 * I * sz).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE((commutator(sx, sy) - oracle).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("commutator rejects mismatched dimensions") {
    REQUIRE_THROWS_AS(commutator(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), ValidationError);
}

TEST_CASE("commutator of Hermitian matrices is anti-Hermitian") {
    std::mt19937 rng(23);
    for (int n : {2, 3, 4, 5}) {
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix c = commutator(random_hermitian(n, rng), random_hermitian(n, rng));
            REQUIRE((c + c.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("su basis is orthonormal and ordered") {
    SECTION("n = 2 Gram matrix") {
        const SuBasis basis(2);
        REQUIRE(basis.size() == 3);
        for (int l = 0; l < 3; ++l)
            for (int j = 0; j < 3; ++j) {
                const Complex g = (basis.generator(l) * basis.generator(j)).trace();
                REQUIRE(std::abs(g - (l == j ? 1.0 : 0.0)) < 1e-12);
            }
    }
    SECTION("n = 4 structure") {
        const SuBasis basis(4);
        REQUIRE(basis.size() == 15);
        REQUIRE(basis.off_diagonal_count() == 12);
        for (int l = 0; l < 12; ++l)
            REQUIRE(basis.generator(l).diagonal().cwiseAbs().maxCoeff() == 0.0);
        for (int l = 12; l < 15; ++l) {
            const Matrix& g = basis.generator(l);
            REQUIRE((g - Matrix(g.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
        }
        for (int l = 0; l < 15; ++l)
            for (int j = l; j < 15; ++j) {
                const Complex g = (basis.generator(l) * basis.generator(j)).trace();
                REQUIRE(std::abs(g - (l == j ? 1.0 : 0.0)) < 1e-12);
            }
    }
    SECTION("traceless for every n") {
        for (int n = 2; n <= 6; ++n) {
            const SuBasis basis(n);
            for (const auto& g : basis.generators()) REQUIRE(std::abs(g.trace()) < 1e-14);
        }
    }
    SECTION("rejects n < 2") { REQUIRE_THROWS_AS(SuBasis(1), ValidationError); }
}

TEST_CASE("coherent vector of the maximally mixed state is zero") {
    for (int n : {2, 4}) {
        const SuBasis basis(n);
        const Matrix m = Matrix::Identity(n, n) / double(n);
        REQUIRE(coherent_vector(m, basis).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("coherent vector is linear and negates with the matrix") {
    std::mt19937 rng(37);
    const SuBasis basis(4);
    for (int trial = 0; trial < 25; ++trial) {
        const Matrix m = random_hermitian(4, rng);
        const Matrix n = random_hermitian(4, rng);
        const double a = std::uniform_real_distribution<double>(-2, 2)(rng);
        const double b = std::uniform_real_distribution<double>(-2, 2)(rng);
        const RealVector lhs = coherent_vector(a * m + b * n, basis);
        const RealVector rhs = a * coherent_vector(m, basis) + b * coherent_vector(n, basis);
        REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
        REQUIRE((coherent_vector(m, basis) + coherent_vector(Matrix(-m), basis)).cwiseAbs().maxCoeff() <
                1e-12);
    }
}

TEST_CASE("coherent vector round trip reconstructs the matrix") {
    std::mt19937 rng(41);
    for (int n = 2; n <= 5; ++n) {
        const SuBasis basis(n);
        for (int trial = 0; trial < 10; ++trial) {
            const Matrix m = random_hermitian(n, rng);
            const Matrix back =
                reconstruct_hermitian(m.trace().real(), coherent_vector(m, basis), basis);
            REQUIRE((back - m).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("coherent vector reconstructs the four-level target diagonal") {
    const SuBasis basis(4);
    Matrix m = Matrix::Zero(4, 4);
    m.diagonal() << 0.1416, 0.1976, 0.2758, 0.3850;
    const Matrix back = reconstruct_hermitian(m.trace().real(), coherent_vector(m, basis), basis);
    REQUIRE((back - m).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("coherent vector rejects non-Hermitian input") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;  // missing mirror entry
    REQUIRE_THROWS_AS(coherent_vector(m, SuBasis(2)), ValidationError);
}

TEST_CASE("interaction frame at t = 0 is H over i") {
    std::mt19937 rng(53);
    const Matrix h = random_hermitian(3, rng);
    RealVector h0(3);
    h0 << 0.1, 0.7, 1.9;
    REQUIRE((interaction_frame(h0, h, 0.0) - h / I).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("diagonal Hamiltonians are constant in the interaction frame") {
    Matrix h = Matrix::Zero(3, 3);
    h.diagonal() << 0.3, -1.0, 2.0;
    RealVector h0(3);
    h0 << 0.0, 1.0, 2.5;
    for (double t : {0.0, 0.37, 5.0, 81.3})
        REQUIRE((interaction_frame(h0, h, t) - h / I).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("interaction frame phases match the two-level oracle") {
    // delta_21 = 0.9581: off-diagonal entries e^{+-i delta t} / i
    Matrix h(2, 2);
    h << 0, 1, 1, 0;
    RealVector h0(2);
    h0 << 0.4948, 1.4529;
    const double delta = 0.9581;
    for (double t : {0.0, 0.1, 1.0, 7.7, 42.0}) {
        const Matrix a = interaction_frame(h0, h, t);
        REQUIRE(std::abs(a(0, 1) - std::polar(1.0, -delta * t) / I) < 1e-12);
        REQUIRE(std::abs(a(1, 0) - std::polar(1.0, delta * t) / I) < 1e-12);
        REQUIRE(std::abs(a(0, 0)) == 0.0);
    }
}

TEST_CASE("interaction frame output is anti-Hermitian, diagonal scaled by 1/i") {
    std::mt19937 rng(67);
    std::uniform_real_distribution<double> time(0.0, 20.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 4;
        const Matrix h = random_hermitian(n, rng);
        RealVector h0(n);
        for (Eigen::Index j = 0; j < n; ++j) h0(j) = time(rng);
        const double t = time(rng);
        const Matrix a = interaction_frame(h0, h, t);
        REQUIRE((a + a.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE((a.diagonal() - Matrix(h / I).diagonal()).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("interaction frame rejects mismatched dimensions") {
    RealVector h0(2);
    h0 << 0.0, 1.0;
    REQUIRE_THROWS_AS(interaction_frame(h0, Matrix::Identity(3, 3), 0.0), ValidationError);
}

TEST_CASE("unitary_exp of an anti-Hermitian generator is unitary") {
    std::mt19937 rng(71);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 3;
        const Matrix s = I * random_hermitian(n, rng);
        const Matrix g = unitary_exp(s);
        REQUIRE((g * g.adjoint() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
    }
    REQUIRE((unitary_exp(Matrix::Zero(3, 3)) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("HermitianMatrix and DensityMatrix validate their invariants") {
    Matrix bad(2, 2);
    bad << 1.0, Complex(0, 1), Complex(0, 1), 1.0;  // equal corners, not conjugate
    REQUIRE_THROWS_AS(HermitianMatrix(bad), ValidationError);
    REQUIRE_THROWS_AS(HermitianMatrix(Matrix::Zero(2, 3)), ValidationError);

    RealVector pops(3);
    pops << 0.5, 0.3, 0.2;
    REQUIRE_NOTHROW(DensityMatrix::diagonal(pops));
    RealVector off(3);
    off << 0.5, 0.3, 0.3;  // trace 1.1
    REQUIRE_THROWS_AS(DensityMatrix::diagonal(off), ValidationError);
    RealVector neg(2);
    neg << 1.5, -0.5;  // negative eigenvalue
    REQUIRE_THROWS_AS(DensityMatrix::diagonal(neg), ValidationError);

    std::mt19937 rng(3);
    ComplexVector psi = testing::random_pure(3, rng);
    REQUIRE_NOTHROW(DensityMatrix::pure(psi));
    REQUIRE_THROWS_AS(DensityMatrix::pure(ComplexVector(2.0 * psi)), ValidationError);
}
