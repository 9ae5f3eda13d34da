#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "qlyap/control.hpp"
#include "qlyap/qla.hpp"
#include "qlyap/system.hpp"

namespace qlyap {

enum class KickMode { None, ConstantPulse, DestabilizingDirection };

/// How to leave a critical point when the feedback law starts at zero (a
/// diagonal initial state commuting with a diagonal P gives u == 0 for all
/// time). A short open-loop pulse moves the state off the critical point;
/// afterwards the feedback law takes over.
struct KickPolicy {
    KickMode mode = KickMode::None;
    double amplitude = 0.0;
    double duration = 0.0;
    RealVector direction;  // unit control-space direction, DestabilizingDirection only

    static KickPolicy none() { return {}; }

    static KickPolicy constant_pulse(double amplitude, double duration) {
        KickPolicy k;
        k.mode = KickMode::ConstantPulse;
        k.amplitude = amplitude;
        k.duration = duration;
        return k;
    }

    static KickPolicy destabilizing(double amplitude, double duration, RealVector direction) {
        KickPolicy k;
        k.mode = KickMode::DestabilizingDirection;
        k.amplitude = amplitude;
        k.duration = duration;
        if (!direction.allFinite() || direction.norm() <= 0.0)
            throw ValidationError("KickPolicy: direction must be a nonzero finite vector");
        k.direction = direction / direction.norm();
        return k;
    }

    void validate(std::size_t control_count) const {
        if (mode == KickMode::None) return;
        if (!(amplitude > 0.0) || !(duration > 0.0))
            throw ValidationError("KickPolicy: amplitude and duration must be positive");
        if (mode == KickMode::DestabilizingDirection &&
            direction.size() != static_cast<Eigen::Index>(control_count))
            throw ValidationError("KickPolicy: direction length must match the control count");
    }

    /// Controls applied while the kick window is open.
    RealVector controls(std::size_t control_count) const {
        const auto m = static_cast<Eigen::Index>(control_count);
        switch (mode) {
            case KickMode::ConstantPulse:
                return RealVector::Constant(m, amplitude);
            case KickMode::DestabilizingDirection:
                return amplitude * direction;
            case KickMode::None:
            default:
                return RealVector::Zero(m);
        }
    }
};

struct SimulationConfig {
    double dt = 0.01;            // a.u.
    double t_final = 150.0;      // a.u.
    KickPolicy kick = KickPolicy::constant_pulse(0.01, 1.0);
    int record_stride = 1;

    void validate() const {
        if (!(dt > 0.0) || !(dt <= t_final)) throw ValidationError("SimulationConfig: need 0 < dt <= t_final");
        if (record_stride < 1) throw ValidationError("SimulationConfig: record_stride must be >= 1");
    }
};

struct Trajectory {
    RealVector times;
    RealMatrix populations;  // one row per sample
    RealVector energies;
    RealMatrix controls;  // one row per sample; the controls applied over the step ending there
    DensityMatrix final_state;

    Eigen::Index samples() const { return times.size(); }
};

/// Called at every recorded sample with the full state.
using SampleObserver = std::function<void(double t, const Matrix& rho, const RealVector& u)>;

namespace detail {

inline Matrix control_generator(const std::vector<Matrix>& frames, const RealVector& u) {
    Matrix s = Matrix::Zero(frames.front().rows(), frames.front().cols());
    for (std::size_t j = 0; j < frames.size(); ++j) s += u(static_cast<Eigen::Index>(j)) * frames[j];
    return s;
}

inline Matrix apply_step(const Matrix& rho, const std::vector<Matrix>& frames, const RealVector& u,
                         double dt) {
    if (frames.empty()) return rho;  // no controls, nothing evolves in this frame
    const Matrix g = unitary_exp(dt * control_generator(frames, u));
    return g * rho * g.adjoint();
}

inline void ensure_finite(const Matrix& rho, const RealVector& u, std::size_t step, double t) {
    if (!rho.allFinite() || !u.allFinite()) throw IntegrationError(step, t);
}

}  // namespace detail

struct StepResult {
    Matrix rho;
    RealVector u;
};

/// One exponential-midpoint step of the feedback dynamics: the controls are
/// evaluated at a half-step predictor state and the state is conjugated by
/// exp(dt * sum_j u_j A_j(t + dt/2)), so trace, spectrum and hermiticity are
/// preserved by construction.
inline StepResult step(const Matrix& rho, const QuantumSystem& sys, const Matrix& p, double t,
                       double dt) {
    if (!(dt > 0.0)) throw ValidationError("step: dt must be positive");
    const auto frames_t = sys.frames(t);
    const RealVector u0 = control_law(rho, p, frames_t, sys.gains);
    const Matrix rho_half = detail::apply_step(rho, frames_t, u0, dt / 2.0);
    const auto frames_mid = sys.frames(t + dt / 2.0);
    const RealVector u = control_law(rho_half, p, frames_mid, sys.gains);
    return {detail::apply_step(rho, frames_mid, u, dt), u};
}

inline StepResult step(const DensityMatrix& rho, const QuantumSystem& sys, const Observable& p,
                       double t, double dt) {
    return step(rho.mat(), sys, p.mat(), t, dt);
}

/// Propagate from rho0 under the feedback law, with the kick policy
/// overriding the controls inside its window. Samples are recorded at t = 0,
/// every record_stride-th step, and the final step.
inline Trajectory simulate(const QuantumSystem& sys, const DensityMatrix& rho0, const Observable& p,
                           const SimulationConfig& cfg, const SampleObserver& observer = {}) {
    cfg.validate();
    cfg.kick.validate(sys.control_count());
    if (rho0.dim() != sys.n || p.dim() != sys.n) throw ValidationError("simulate: dimension mismatch");

    const auto steps = static_cast<std::size_t>(std::llround(cfg.t_final / cfg.dt));
    const auto m = static_cast<Eigen::Index>(sys.control_count());

    std::vector<double> times;
    std::vector<RealVector> pops;
    std::vector<double> energies;
    std::vector<RealVector> controls;
    times.reserve(steps / static_cast<std::size_t>(cfg.record_stride) + 2);

    Matrix rho = rho0.mat();
    const Matrix& pm = p.mat();
    const auto record = [&](double t, const RealVector& u) {
        times.push_back(t);
        pops.push_back(rho.diagonal().real());
        energies.push_back(energy(pm, rho));
        controls.push_back(u);
        if (observer) observer(t, rho, u);
    };

    record(0.0, RealVector::Zero(m));
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) * cfg.dt;
        RealVector u(m);
        if (cfg.kick.mode != KickMode::None && t < cfg.kick.duration) {
            u = cfg.kick.controls(sys.control_count());
            rho = detail::apply_step(rho, sys.frames(t + cfg.dt / 2.0), u, cfg.dt);
        } else {
            auto result = step(rho, sys, pm, t, cfg.dt);
            rho = std::move(result.rho);
            u = std::move(result.u);
        }
        detail::ensure_finite(rho, u, s, t);
        if ((s + 1) % static_cast<std::size_t>(cfg.record_stride) == 0 || s + 1 == steps)
            record(static_cast<double>(s + 1) * cfg.dt, u);
    }

    const auto samples = static_cast<Eigen::Index>(times.size());
    Trajectory traj{RealVector(samples),     RealMatrix(samples, sys.n), RealVector(samples),
                    RealMatrix(samples, m),  DensityMatrix(rho)};
    for (Eigen::Index i = 0; i < samples; ++i) {
        traj.times(i) = times[static_cast<std::size_t>(i)];
        traj.populations.row(i) = pops[static_cast<std::size_t>(i)];
        traj.energies(i) = energies[static_cast<std::size_t>(i)];
        traj.controls.row(i) = controls[static_cast<std::size_t>(i)];
    }
    return traj;
}

struct TargetDistance {
    double hilbert_schmidt = 0.0;  // sqrt(tr((rho - rhof)^2))
    double population_inf = 0.0;   // max |diagonal difference|
};

inline TargetDistance distance_to_target(const DensityMatrix& rho, const DensityMatrix& rhof) {
    if (rho.dim() != rhof.dim()) throw ValidationError("distance_to_target: dimension mismatch");
    const Matrix d = rho.mat() - rhof.mat();
    return {d.norm(), (rho.populations() - rhof.populations()).cwiseAbs().maxCoeff()};
}

}  // namespace qlyap
