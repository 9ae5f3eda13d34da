#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "qlyap/control.hpp"
#include "qlyap/qla.hpp"
#include "qlyap/system.hpp"

namespace qlyap {

enum class StabilityVerdict {
    MinimumTarget,        // the target state itself, the energy minimum
    UnstableWithWitness,  // a control direction strictly decreases E at second order
    Blocked               // no admissible direction decreases E; the feedback can stall here
};

/// A state in the invariant set together with its stability analysis.
struct CriticalPoint {
    DensityMatrix rho_s;
    std::vector<int> permutation;  // rho_s diagonal = rhof diagonal reordered by this map
    StabilityVerdict verdict = StabilityVerdict::Blocked;
    std::optional<RealVector> witness;  // unit control vector with negative curvature
    double curvature = 0.0;             // d2E/dt2 along the witness (0 when absent)
};

namespace detail {

inline RealVector diagonal_of(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) throw ValidationError(std::string(what) + ": matrix is not square");
    double off = 0.0;
    for (Eigen::Index j = 0; j < m.rows(); ++j)
        for (Eigen::Index k = 0; k < m.cols(); ++k)
            if (j != k) off = std::max(off, std::abs(m(j, k)));
    if (off > tol::hermitian) throw ValidationError(std::string(what) + ": matrix is not diagonal");
    return m.diagonal().real();
}

inline void require_distinct(const RealVector& d, const char* what) {
    for (Eigen::Index a = 0; a < d.size(); ++a)
        for (Eigen::Index b = a + 1; b < d.size(); ++b)
            if (std::abs(d(a) - d(b)) <= 1e-12)
                throw ValidationError(std::string(what) + ": repeated diagonal entries");
}

inline bool same_multiset(const RealVector& a, const RealVector& b, double tolerance = 1e-9) {
    if (a.size() != b.size()) return false;
    std::vector<double> sa(a.data(), a.data() + a.size());
    std::vector<double> sb(b.data(), b.data() + b.size());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    for (std::size_t i = 0; i < sa.size(); ++i)
        if (std::abs(sa[i] - sb[i]) > tolerance) return false;
    return true;
}

/// Common eigenbasis of the (commuting) target and critical states. For a
/// diagonal target the standard basis is kept so levels stay addressable;
/// otherwise the target's eigenbasis is used and the critical state must be
/// diagonal in it (that is what invariant-set membership means here).
struct CommonBasis {
    Matrix vectors;  // columns are the common eigenvectors
    RealVector d_f;
    RealVector d_s;
};

inline CommonBasis common_eigenbasis(const Matrix& rho_s, const Matrix& rhof) {
    const auto n = rhof.rows();
    CommonBasis basis;
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
            if (j != k) off = std::max(off, std::abs(rhof(j, k)));
    if (off <= tol::hermitian) {
        basis.vectors = Matrix::Identity(n, n);
        basis.d_f = rhof.diagonal().real();
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> es(rhof);
        basis.vectors = es.eigenvectors();
        basis.d_f = es.eigenvalues();
    }
    const Matrix rotated = basis.vectors.adjoint() * rho_s * basis.vectors;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
            if (j != k && std::abs(rotated(j, k)) > 1e-8)
                throw ValidationError("critical state does not commute with the target");
    basis.d_s = rotated.diagonal().real();
    return basis;
}

/// Eigenvectors rotated to time t: psi'_j = e^{-i H0 t} psi_j.
inline Matrix rotated_basis(const Matrix& vectors, const RealVector& h0_diag, double t) {
    ComplexVector phases(h0_diag.size());
    for (Eigen::Index j = 0; j < h0_diag.size(); ++j) phases(j) = std::polar(1.0, -h0_diag(j) * t);
    return phases.asDiagonal() * vectors;
}

inline Matrix coupling_matrix_in_basis(const Matrix& vectors, const PairList& control_pairs,
                                       const RealVector& h0_diag, double t) {
    const int n = static_cast<int>(vectors.rows());
    const Matrix vp = rotated_basis(vectors, h0_diag, t);
    const auto rows = level_pairs(n);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(control_pairs.size()));
    for (std::size_t c = 0; c < control_pairs.size(); ++c) {
        const auto [l, r] = control_pairs[c];
        // <psi'_j| h_lr |psi'_k> = conj(vp(l,j)) vp(r,k) + conj(vp(r,j)) vp(l,k)
        for (std::size_t row = 0; row < rows.size(); ++row) {
            const auto [j, k] = rows[row];
            m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) =
                std::conj(vp(l, j)) * vp(r, k) + std::conj(vp(r, j)) * vp(l, k);
        }
    }
    return m;
}

}  // namespace detail

/// Second derivative of the energy at a diagonal critical point of a diagonal
/// target, for controls addressing the given level pairs:
/// sum_c u_c^2 (d_s[r]-d_s[l]) (d_f[r]-d_f[l]). A negative value means the
/// point is destabilizable along u.
inline double second_derivative_diag(const RealVector& rho_s_diag, const RealVector& rhof_diag,
                                     const PairList& pairs, const RealVector& u) {
    const auto n = rho_s_diag.size();
    if (rhof_diag.size() != n) throw ValidationError("second_derivative_diag: dimension mismatch");
    if (u.size() != static_cast<Eigen::Index>(pairs.size()))
        throw ValidationError("second_derivative_diag: one amplitude per pair required");
    double total = 0.0;
    for (std::size_t c = 0; c < pairs.size(); ++c) {
        const auto [l, r] = pairs[c];
        if (l < 0 || r < 0 || l >= n || r >= n || l == r)
            throw ValidationError("second_derivative_diag: invalid level pair");
        const double uc = u(static_cast<Eigen::Index>(c));
        total += uc * uc * (rho_s_diag(r) - rho_s_diag(l)) * (rhof_diag(r) - rhof_diag(l));
    }
    return total;
}

/// The matrix mapping control amplitudes to eigenbasis couplings f_jk: rows
/// are level pairs (j,k), j<k, of the target's eigenvectors in lexicographic
/// order; columns follow the control-pair list. Entry (row, c) is
/// <psi'_j| h_{lr} |psi'_k> with the eigenvectors rotated to time t.
inline Matrix coupling_matrix(const DensityMatrix& rhof, const PairList& control_pairs,
                              const RealVector& h0_diag, double t = 0.0) {
    if (h0_diag.size() != rhof.dim()) throw ValidationError("coupling_matrix: dimension mismatch");
    const auto basis = detail::common_eigenbasis(rhof.mat(), rhof.mat());
    return detail::coupling_matrix_in_basis(basis.vectors, control_pairs, h0_diag, t);
}

/// Curvature weight per level pair (j,k), lexicographic:
/// (d_s[k]-d_s[j]) (d_f[k]-d_f[j]). The two diagonals must carry the same
/// values (the critical state is a spectrum permutation of the target); at
/// least one weight is negative whenever they differ.
inline RealVector curvature_weights(const RealVector& d_s, const RealVector& d_f) {
    if (d_s.size() != d_f.size()) throw ValidationError("curvature_weights: dimension mismatch");
    if (!detail::same_multiset(d_s, d_f))
        throw ValidationError("curvature_weights: diagonals are not permutations of the same values");
    const auto pairs = level_pairs(static_cast<int>(d_s.size()));
    RealVector k(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [a, b] = pairs[i];
        k(static_cast<Eigen::Index>(i)) = (d_s(b) - d_s(a)) * (d_f(b) - d_f(a));
    }
    return k;
}

struct Witness {
    RealVector u;     // unit control vector, indexed like the control-pair list
    double curvature; // second derivative of E along u, strictly negative
};

namespace detail {

/// Direct curvature evaluation: assemble sum_c u_c h_{lr} as a matrix, rotate
/// into the common eigenbasis at time t, and sum |f_jk|^2 times the curvature
/// weights. Independent of the coupling-matrix assembly it cross-checks.
inline double curvature_direct(const RealVector& u, const PairList& control_pairs,
                               const CommonBasis& basis, const RealVector& h0_diag, double t) {
    const int n = static_cast<int>(basis.d_f.size());
    Matrix h_sum = Matrix::Zero(n, n);
    for (std::size_t c = 0; c < control_pairs.size(); ++c)
        h_sum += u(static_cast<Eigen::Index>(c)) *
                 pair_hamiltonian(n, control_pairs[c].first, control_pairs[c].second);
    const Matrix vp = rotated_basis(basis.vectors, h0_diag, t);
    const Matrix f = vp.adjoint() * h_sum * vp;
    double total = 0.0;
    for (const auto& [j, k] : level_pairs(n))
        total += std::norm(f(j, k)) * (basis.d_s(k) - basis.d_s(j)) * (basis.d_f(k) - basis.d_f(j));
    return total;
}

}  // namespace detail

/// Search for a control direction with strictly negative energy curvature at
/// a critical state. The quadratic form M^dagger K M is eigendecomposed; the
/// real and imaginary parts of the eigenvector for the most negative
/// eigenvalue are the candidate directions, and a candidate is accepted only
/// after an independent direct curvature evaluation confirms it. The search
/// retries at a few sample times because the coupling phases can be blind at
/// isolated instants. Returns nothing for a blocked point.
inline std::optional<Witness> find_destabilizing_control(const DensityMatrix& rho_s,
                                                         const DensityMatrix& rhof,
                                                         const PairList& control_pairs,
                                                         const RealVector& h0_diag, double t = 0.0) {
    if (rho_s.dim() != rhof.dim() || h0_diag.size() != rhof.dim())
        throw ValidationError("find_destabilizing_control: dimension mismatch");
    if (control_pairs.empty()) return std::nullopt;

    const auto basis = detail::common_eigenbasis(rho_s.mat(), rhof.mat());
    const RealVector k = curvature_weights(basis.d_s, basis.d_f);

    std::vector<double> sample_times{t};
    for (double retry : {0.0, 0.1, 0.5, 1.0})
        if (retry != t) sample_times.push_back(retry);

    for (double tt : sample_times) {
        const Matrix m = detail::coupling_matrix_in_basis(basis.vectors, control_pairs, h0_diag, tt);
        const Matrix w = m.adjoint() * k.asDiagonal() * m;
        Eigen::SelfAdjointEigenSolver<Matrix> es(w);
        if (es.eigenvalues()(0) >= -1e-12) continue;
        const ComplexVector z = es.eigenvectors().col(0);

        std::optional<Witness> best;
        for (const RealVector& candidate : {RealVector(z.real()), RealVector(z.imag())}) {
            if (candidate.norm() < 1e-12) continue;
            const RealVector u = candidate.normalized();
            const double curvature = detail::curvature_direct(u, control_pairs, basis, h0_diag, tt);
            if (curvature < -1e-12 && (!best || curvature < best->curvature)) best = Witness{u, curvature};
        }
        if (best) return best;
    }
    return std::nullopt;
}

/// All diagonal states sharing the target's (distinct) spectrum: the n!
/// permutations of the target's diagonal. The identity permutation is the
/// target itself (verdict MinimumTarget); the rest default to Blocked until
/// analyze_invariant_set attaches witnesses.
inline std::vector<CriticalPoint> enumerate_critical_points(const DensityMatrix& rhof,
                                                            const Observable& p) {
    const RealVector d_f = detail::diagonal_of(rhof.mat(), "enumerate_critical_points: target");
    detail::require_distinct(d_f, "enumerate_critical_points: target");
    const RealVector d_p = detail::diagonal_of(p.mat(), "enumerate_critical_points: observable");
    detail::require_distinct(d_p, "enumerate_critical_points: observable");

    const auto n = d_f.size();
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<CriticalPoint> points;
    do {
        RealVector d_s(n);
        bool identity = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            d_s(i) = d_f(perm[static_cast<std::size_t>(i)]);
            identity = identity && perm[static_cast<std::size_t>(i)] == static_cast<int>(i);
        }
        CriticalPoint point{DensityMatrix::diagonal(d_s), perm,
                            identity ? StabilityVerdict::MinimumTarget : StabilityVerdict::Blocked,
                            std::nullopt, 0.0};
        points.push_back(std::move(point));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return points;
}

/// Full stability analysis of the invariant set for a diagonal target:
/// enumerate every critical point and attach a destabilizing witness where
/// one exists.
inline std::vector<CriticalPoint> analyze_invariant_set(const DensityMatrix& rhof,
                                                        const Observable& p,
                                                        const PairList& control_pairs,
                                                        const RealVector& h0_diag, double t = 0.0) {
    auto points = enumerate_critical_points(rhof, p);
    for (auto& point : points) {
        if (point.verdict == StabilityVerdict::MinimumTarget) continue;
        if (auto witness = find_destabilizing_control(point.rho_s, rhof, control_pairs, h0_diag, t)) {
            point.verdict = StabilityVerdict::UnstableWithWitness;
            point.curvature = witness->curvature;
            point.witness = std::move(witness->u);
        }
    }
    return points;
}

struct RegularityRank {
    int rank = 0;
    bool regular = false;
};

/// Rank test on the commutator map X -> [X, P] in su(n) coordinates: the map
/// is assembled as a real matrix (column l holds the coordinates of
/// i[X_l, P]), and the rank of its off-diagonal (non-Cartan) row block is
/// compared against n^2 - n. Full rank means the invariant set collapses to
/// the states that commute with P.
inline RegularityRank invariant_set_regularity(const Observable& p, const SuBasis& basis) {
    if (p.dim() != basis.dim()) throw ValidationError("invariant_set_regularity: dimension mismatch");
    const int size = basis.size();
    RealMatrix a(size, size);
    const Complex i_unit(0, 1);
    for (int l = 0; l < size; ++l) {
        const Matrix image = i_unit * commutator(basis.generator(l), p.mat());
        a.col(l) = coherent_vector(image, basis);
    }
    Eigen::ColPivHouseholderQR<RealMatrix> qr(a.topRows(basis.off_diagonal_count()));
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    return {rank, rank == basis.off_diagonal_count()};
}

}  // namespace qlyap
