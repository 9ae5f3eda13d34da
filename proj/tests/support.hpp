#pragma once

// Deterministic random generators shared by the test suites.

#include <random>

#include "qlyap/qla.hpp"

namespace qlyap::testing {

inline Matrix random_complex(int n, std::mt19937& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) a(j, k) = Complex(dist(rng), dist(rng));
    return a;
}

inline Matrix random_hermitian(int n, std::mt19937& rng, double scale = 1.0) {
    const Matrix a = random_complex(n, rng, scale);
    return (a + a.adjoint()) / 2.0;
}

inline Matrix random_unitary(int n, std::mt19937& rng) {
    const Matrix a = random_complex(n, rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
    return q;
}

inline DensityMatrix random_density(int n, std::mt19937& rng) {
    const Matrix a = random_complex(n, rng);
    Matrix rho = a * a.adjoint();
    rho /= rho.trace();
    return DensityMatrix(rho);
}

inline ComplexVector random_pure(int n, std::mt19937& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    ComplexVector psi(n);
    for (Eigen::Index j = 0; j < n; ++j) psi(j) = Complex(dist(rng), dist(rng));
    return psi / psi.norm();
}

/// Distinct positive populations summing to one.
inline RealVector random_distinct_populations(int n, std::mt19937& rng) {
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    RealVector p(n);
    while (true) {
        for (Eigen::Index j = 0; j < n; ++j) p(j) = dist(rng);
        p /= p.sum();
        bool distinct = true;
        for (Eigen::Index a = 0; a < n && distinct; ++a)
            for (Eigen::Index b = a + 1; b < n; ++b)
                if (std::abs(p(a) - p(b)) < 1e-3) {
                    distinct = false;
                    break;
                }
        if (distinct) return p;
    }
}

}  // namespace qlyap::testing
