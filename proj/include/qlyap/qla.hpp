#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qlyap {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

// Tolerances for double-precision arithmetic at the dimensions this library
// targets (n up to ~8).
namespace tol {
inline constexpr double hermitian = 1e-12;
inline constexpr double trace = 1e-10;
inline constexpr double psd = 1e-9;
inline constexpr double reconstruction = 1e-10;
// A trace that should be real but carries more imaginary residue than this
// signals a broken invariant upstream.
inline constexpr double imag_guard = 1e-9;
}  // namespace tol

struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IntegrationError : std::runtime_error {
    IntegrationError(std::size_t step, double time)
        : std::runtime_error("non-finite value at integration step " + std::to_string(step) +
                             " (t = " + std::to_string(time) + ")"),
          step(step),
          time(time) {}
    std::size_t step;
    double time;
};

inline double hermiticity_residue(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& m, double tolerance = tol::hermitian) {
    return m.rows() == m.cols() && hermiticity_residue(m) <= tolerance;
}

/// Square complex matrix validated Hermitian on construction.
class HermitianMatrix {
public:
    explicit HermitianMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw ValidationError("HermitianMatrix: matrix is not square");
        if (!m_.allFinite()) throw ValidationError("HermitianMatrix: non-finite entries");
        if (hermiticity_residue(m_) > tol::hermitian)
            throw ValidationError("HermitianMatrix: hermiticity residue exceeds tolerance");
    }

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& mat() const { return m_; }

private:
    Matrix m_;
};

/// Hermitian, unit-trace, positive-semidefinite state.
class DensityMatrix {
public:
    explicit DensityMatrix(Matrix m) : base_(std::move(m)) {
        const Matrix& rho = base_.mat();
        if (std::abs(rho.trace().real() - 1.0) > tol::trace || std::abs(rho.trace().imag()) > tol::trace)
            throw ValidationError("DensityMatrix: trace differs from 1");
        Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol::psd)
            throw ValidationError("DensityMatrix: negative eigenvalue beyond tolerance");
    }

    /// Diagonal state from level populations.
    static DensityMatrix diagonal(const RealVector& populations) {
        Matrix m = populations.cast<Complex>().asDiagonal();
        return DensityMatrix(std::move(m));
    }

    /// Pure state |psi><psi| from a unit vector.
    static DensityMatrix pure(const ComplexVector& psi) {
        if (std::abs(psi.norm() - 1.0) > tol::hermitian)
            throw ValidationError("DensityMatrix::pure: state vector is not normalized");
        return DensityMatrix(psi * psi.adjoint());
    }

    int dim() const { return base_.dim(); }
    const Matrix& mat() const { return base_.mat(); }
    RealVector populations() const { return base_.mat().diagonal().real(); }

private:
    HermitianMatrix base_;
};

/// [A, B] = AB - BA.
inline Matrix commutator(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw ValidationError("commutator: dimension mismatch");
    return a * b - b * a;
}

// Level pairs (j,k), j<k, in lexicographic order; the canonical pair index
// used for basis generators, coupling-matrix rows and curvature weights.
inline std::vector<std::pair<int, int>> level_pairs(int n) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) pairs.emplace_back(j, k);
    return pairs;
}

inline int pair_index(int n, int j, int k) {
    if (j > k) std::swap(j, k);
    if (j < 0 || k >= n || j == k) throw ValidationError("pair_index: invalid level pair");
    // pairs (0,1)..(0,n-1) come first, then (1,2).. and so on
    return j * n - j * (j + 1) / 2 + (k - j - 1);
}

/// Orthonormal generator basis of su(n) (generalized Gell-Mann set),
/// tr(X_l X_j) = delta_lj. Ordering is part of the contract: for each level
/// pair (j,k) in lexicographic order the symmetric generator precedes the
/// antisymmetric one; the n-1 diagonal (Cartan) generators come last.
class SuBasis {
public:
    explicit SuBasis(int n) : n_(n) {
        if (n < 2) throw ValidationError("SuBasis: dimension must be at least 2");
        generators_.reserve(static_cast<std::size_t>(n) * n - 1);
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        for (const auto& [j, k] : level_pairs(n)) {
            Matrix sym = Matrix::Zero(n, n);
            sym(j, k) = inv_sqrt2;
            sym(k, j) = inv_sqrt2;
            generators_.push_back(std::move(sym));
            Matrix antisym = Matrix::Zero(n, n);
            antisym(j, k) = Complex(0, -inv_sqrt2);
            antisym(k, j) = Complex(0, inv_sqrt2);
            generators_.push_back(std::move(antisym));
        }
        for (int m = 1; m < n; ++m) {
            Matrix diag = Matrix::Zero(n, n);
            const double scale = 1.0 / std::sqrt(static_cast<double>(m) * (m + 1));
            for (int j = 0; j < m; ++j) diag(j, j) = scale;
            diag(m, m) = -static_cast<double>(m) * scale;
            generators_.push_back(std::move(diag));
        }
    }

    int dim() const { return n_; }
    /// Number of generators, n^2 - 1.
    int size() const { return n_ * n_ - 1; }
    /// Number of off-diagonal (non-Cartan) generators, n^2 - n.
    int off_diagonal_count() const { return n_ * n_ - n_; }
    const Matrix& generator(int l) const { return generators_.at(static_cast<std::size_t>(l)); }
    const std::vector<Matrix>& generators() const { return generators_; }

private:
    int n_;
    std::vector<Matrix> generators_;
};

inline SuBasis su_basis(int n) { return SuBasis(n); }

/// Real coordinates x_l = tr(M X_l) of a Hermitian matrix in the basis.
inline RealVector coherent_vector(const Matrix& m, const SuBasis& basis) {
    if (!is_hermitian(m)) throw ValidationError("coherent_vector: input is not Hermitian");
    if (m.rows() != basis.dim()) throw ValidationError("coherent_vector: dimension mismatch");
    RealVector x(basis.size());
    for (int l = 0; l < basis.size(); ++l) {
        const Complex t = (m * basis.generator(l)).trace();
        x(l) = t.real();
    }
    return x;
}

inline RealVector coherent_vector(const HermitianMatrix& m, const SuBasis& basis) {
    return coherent_vector(m.mat(), basis);
}

/// Inverse of coherent_vector: trace/n * I + sum_l x_l X_l.
inline Matrix reconstruct_hermitian(double trace, const RealVector& coords, const SuBasis& basis) {
    if (coords.size() != basis.size())
        throw ValidationError("reconstruct_hermitian: coordinate length mismatch");
    Matrix m = (trace / basis.dim()) * Matrix::Identity(basis.dim(), basis.dim());
    for (int l = 0; l < basis.size(); ++l) m += coords(l) * basis.generator(l);
    return m;
}

/// Control Hamiltonian rotated into the interaction frame of a diagonal free
/// Hamiltonian: entry (j,k) of H picks up the phase e^{i(lambda_j-lambda_k)t},
/// and the whole matrix is divided by i (hbar = 1). The result is
/// anti-Hermitian.
inline Matrix interaction_frame(const RealVector& h0_diag, const Matrix& h, double t) {
    const auto n = h.rows();
    if (h0_diag.size() != n || h.cols() != n)
        throw ValidationError("interaction_frame: dimension mismatch");
    Matrix a(n, n);
    const Complex minus_i(0, -1);  // 1/i
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
            a(j, k) = minus_i * h(j, k) * std::polar(1.0, (h0_diag(j) - h0_diag(k)) * t);
    return a;
}

/// exp(S) for anti-Hermitian S, computed through the eigendecomposition of
/// the Hermitian matrix S/i; unitary to machine precision.
inline Matrix unitary_exp(const Matrix& anti_hermitian) {
    const Matrix k = anti_hermitian / Complex(0, 1);
    Eigen::SelfAdjointEigenSolver<Matrix> es(k);
    if (es.info() != Eigen::Success) throw std::runtime_error("unitary_exp: eigensolver failed");
    ComplexVector phases(k.rows());
    for (Eigen::Index j = 0; j < k.rows(); ++j) phases(j) = std::polar(1.0, es.eigenvalues()(j));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace qlyap
