#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qlyap/qla.hpp"

namespace qlyap {

enum class ObservableKind { NegativeTarget, CoherentScaled, PureSpectrum };

/// The Hermitian operator defining the energy function E(rho) = tr(P rho).
/// Constructed so the target state is the energy minimum: the coherent
/// vector of P is anti-parallel to the target's.
class Observable {
public:
    static Observable negative_target(const DensityMatrix& rhof) {
        return Observable(-rhof.mat(), ObservableKind::NegativeTarget);
    }

    /// P = c0*I + lambda * sum_l f_l X_l with f the target's coherent vector;
    /// lambda must be negative.
    static Observable coherent_scaled(const DensityMatrix& rhof, double lambda, double c0,
                                      const SuBasis& basis) {
        if (!(lambda < 0.0)) throw ValidationError("Observable: scale factor must be negative");
        if (rhof.dim() != basis.dim()) throw ValidationError("Observable: basis dimension mismatch");
        const RealVector f = coherent_vector(rhof.mat(), basis);
        Observable p(reconstruct_hermitian(c0 * basis.dim(), lambda * f, basis),
                     ObservableKind::CoherentScaled);
        p.lambda_ = lambda;
        p.c0_ = c0;
        return p;
    }

    /// Spectral construction for a pure target: the target direction gets
    /// eigenvalue p_low, the orthonormal complement (Householder completion
    /// of the basis) gets the p_high values. Requires p_low < every p_high.
    static Observable pure_spectrum(const ComplexVector& psi_f, double p_low,
                                    const RealVector& p_high) {
        if (std::abs(psi_f.norm() - 1.0) > tol::hermitian)
            throw ValidationError("Observable: target vector is not normalized");
        const auto n = psi_f.size();
        if (p_high.size() != n - 1)
            throw ValidationError("Observable: need one complement eigenvalue per non-target direction");
        if (!(p_low < p_high.minCoeff()))
            throw ValidationError("Observable: target eigenvalue must be strictly smallest");
        Eigen::HouseholderQR<Matrix> qr(psi_f);
        const Matrix q = qr.householderQ();
        Matrix p = p_low * (psi_f * psi_f.adjoint());
        for (Eigen::Index h = 1; h < n; ++h) p += p_high(h - 1) * (q.col(h) * q.col(h).adjoint());
        Observable obs(std::move(p), ObservableKind::PureSpectrum);
        obs.p_low_ = p_low;
        obs.p_high_ = p_high;
        return obs;
    }

    static Observable pure_spectrum(const ComplexVector& psi_f, double p_low, double p_high) {
        return pure_spectrum(psi_f, p_low, RealVector::Constant(psi_f.size() - 1, p_high));
    }

    int dim() const { return static_cast<int>(m_.mat().rows()); }
    const Matrix& mat() const { return m_.mat(); }
    ObservableKind kind() const { return kind_; }
    std::optional<double> scale() const { return lambda_; }
    std::optional<double> offset() const { return c0_; }
    std::optional<double> target_eigenvalue() const { return p_low_; }
    const std::optional<RealVector>& complement_eigenvalues() const { return p_high_; }

private:
    Observable(Matrix m, ObservableKind kind) : m_(std::move(m)), kind_(kind) {}

    HermitianMatrix m_;
    ObservableKind kind_;
    std::optional<double> lambda_;
    std::optional<double> c0_;
    std::optional<double> p_low_;
    std::optional<RealVector> p_high_;
};

namespace detail {
inline double real_trace(const Matrix& product) {
    const Complex t = product.trace();
    if (std::abs(t.imag()) > tol::imag_guard)
        throw std::runtime_error("trace has non-negligible imaginary part; upstream invariant broken");
    return t.real();
}
}  // namespace detail

/// E(rho) = tr(P rho).
inline double energy(const Matrix& p, const Matrix& rho) {
    if (p.rows() != rho.rows()) throw ValidationError("energy: dimension mismatch");
    return detail::real_trace(p * rho);
}

inline double energy(const Observable& p, const DensityMatrix& rho) {
    return energy(p.mat(), rho.mat());
}

/// True iff the coherent vectors of P and the target are anti-parallel
/// (P's is a negative multiple of the target's).
inline bool verify_minimum(const Matrix& p, const DensityMatrix& rhof, double angular_tol = 1e-9) {
    if (p.rows() != rhof.dim()) throw ValidationError("verify_minimum: dimension mismatch");
    const SuBasis basis(rhof.dim());
    const RealVector a = coherent_vector(p, basis);
    const RealVector b = coherent_vector(rhof.mat(), basis);
    const double na = a.norm();
    const double nb = b.norm();
    if (nb < 1e-12) return na < 1e-12;  // maximally mixed target: only P ~ c0*I qualifies
    if (na < 1e-12) return false;
    return (a / na + b / nb).norm() <= angular_tol;
}

inline bool verify_minimum(const Observable& p, const DensityMatrix& rhof,
                           double angular_tol = 1e-9) {
    return verify_minimum(p.mat(), rhof, angular_tol);
}

/// Feedback law u_j = -kappa_j * tr([rho, P] A_j(t)); zero whenever rho and P
/// commute. Aborts if the trace develops an imaginary residue, which can only
/// come from a broken Hermiticity invariant upstream.
inline RealVector control_law(const Matrix& rho, const Matrix& p, const std::vector<Matrix>& frames,
                              const RealVector& gains) {
    if (gains.size() != static_cast<Eigen::Index>(frames.size()))
        throw ValidationError("control_law: one gain per control required");
    for (Eigen::Index j = 0; j < gains.size(); ++j)
        if (!(gains(j) > 0.0)) throw ValidationError("control_law: gains must be positive");
    const Matrix c = commutator(rho, p);
    RealVector u(gains.size());
    for (std::size_t j = 0; j < frames.size(); ++j)
        u(static_cast<Eigen::Index>(j)) = -gains(static_cast<Eigen::Index>(j)) * detail::real_trace(c * frames[j]);
    return u;
}

inline RealVector control_law(const DensityMatrix& rho, const Observable& p,
                              const std::vector<Matrix>& frames, const RealVector& gains) {
    return control_law(rho.mat(), p.mat(), frames, gains);
}

/// dE/dt = sum_j u_j tr([rho, P] A_j); with the feedback law this equals
/// -sum_j u_j^2 / kappa_j and is never positive.
inline double energy_rate(const Matrix& rho, const Matrix& p, const RealVector& u,
                          const std::vector<Matrix>& frames) {
    if (u.size() != static_cast<Eigen::Index>(frames.size()))
        throw ValidationError("energy_rate: control count mismatch");
    const Matrix c = commutator(rho, p);
    double rate = 0.0;
    for (std::size_t j = 0; j < frames.size(); ++j)
        rate += u(static_cast<Eigen::Index>(j)) * detail::real_trace(c * frames[j]);
    return rate;
}

inline double energy_rate(const DensityMatrix& rho, const Observable& p, const RealVector& u,
                          const std::vector<Matrix>& frames) {
    return energy_rate(rho.mat(), p.mat(), u, frames);
}

}  // namespace qlyap
