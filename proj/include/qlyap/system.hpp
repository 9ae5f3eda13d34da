#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "qlyap/qla.hpp"

namespace qlyap {

using LevelPair = std::pair<int, int>;
using PairList = std::vector<LevelPair>;

/// The coupling matrix |j><k| + |k><j| (0-based levels).
inline Matrix pair_hamiltonian(int n, int j, int k) {
    if (j == k || j < 0 || k < 0 || j >= n || k >= n)
        throw ValidationError("pair_hamiltonian: invalid level pair");
    Matrix h = Matrix::Zero(n, n);
    h(j, k) = 1.0;
    h(k, j) = 1.0;
    return h;
}

/// Matches a single-transition coupling exactly: entries 1 at (j,k),(k,j) and
/// 0 elsewhere. Merged couplings (two one-pairs) do not classify.
inline std::optional<LevelPair> classify_control(const Matrix& h) {
    if (h.rows() != h.cols()) return std::nullopt;
    std::optional<LevelPair> found;
    for (Eigen::Index j = 0; j < h.rows(); ++j) {
        for (Eigen::Index k = 0; k < h.cols(); ++k) {
            const Complex v = h(j, k);
            if (v == Complex(0, 0)) continue;
            if (v != Complex(1, 0) || j == k) return std::nullopt;
            if (j < k) {
                if (found) return std::nullopt;  // more than one coupled pair
                found = LevelPair(static_cast<int>(j), static_cast<int>(k));
            }
        }
    }
    if (!found) return std::nullopt;
    // the mirror entry must be present (Hermitian 0/1 pattern guarantees it)
    if (h(found->second, found->first) != Complex(1, 0)) return std::nullopt;
    return found;
}

/// A control Hamiltonian, tagged with its transition pair when it has the
/// single-coupling form.
struct ControlHamiltonian {
    Matrix matrix;
    std::optional<LevelPair> pair;  // 0-based, j < k

    static ControlHamiltonian coupling(int n, int j, int k) {
        if (j > k) std::swap(j, k);
        return ControlHamiltonian{pair_hamiltonian(n, j, k), LevelPair(j, k)};
    }

    static ControlHamiltonian from_matrix(Matrix m) {
        if (!is_hermitian(m)) throw ValidationError("ControlHamiltonian: matrix is not Hermitian");
        auto p = classify_control(m);
        return ControlHamiltonian{std::move(m), p};
    }
};

/// Closed-system model: diagonal free Hamiltonian, control Hamiltonians and
/// their (constant, positive) gains.
struct QuantumSystem {
    int n = 0;
    RealVector h0_diag;
    std::vector<ControlHamiltonian> controls;
    RealVector gains;

    QuantumSystem(RealVector energies, std::vector<ControlHamiltonian> ctrls, RealVector kappas)
        : n(static_cast<int>(energies.size())),
          h0_diag(std::move(energies)),
          controls(std::move(ctrls)),
          gains(std::move(kappas)) {
        if (n < 2) throw ValidationError("QuantumSystem: dimension must be at least 2");
        if (!h0_diag.allFinite()) throw ValidationError("QuantumSystem: non-finite energies");
        if (gains.size() != static_cast<Eigen::Index>(controls.size()))
            throw ValidationError("QuantumSystem: one gain per control required");
        for (const auto& c : controls) {
            if (c.matrix.rows() != n || c.matrix.cols() != n)
                throw ValidationError("QuantumSystem: control dimension mismatch");
            if (!is_hermitian(c.matrix))
                throw ValidationError("QuantumSystem: control matrix is not Hermitian");
        }
        for (Eigen::Index j = 0; j < gains.size(); ++j)
            if (!(gains(j) > 0.0)) throw ValidationError("QuantumSystem: gains must be positive");
    }

    std::size_t control_count() const { return controls.size(); }

    /// Interaction-frame matrices A_j(t) for every control.
    std::vector<Matrix> frames(double t) const {
        std::vector<Matrix> a;
        a.reserve(controls.size());
        for (const auto& c : controls) a.push_back(interaction_frame(h0_diag, c.matrix, t));
        return a;
    }
};

/// Transition energies delta_jk = lambda_j - lambda_k for j > k.
struct TransitionTable {
    std::map<LevelPair, double> deltas;  // keyed (j,k), j > k

    static TransitionTable from(const RealVector& h0_diag) {
        TransitionTable table;
        const int n = static_cast<int>(h0_diag.size());
        for (int j = 1; j < n; ++j)
            for (int k = 0; k < j; ++k) table.deltas[{j, k}] = h0_diag(j) - h0_diag(k);
        return table;
    }
};

using PairClash = std::pair<LevelPair, LevelPair>;

struct RegularityResult {
    bool regular = false;
    std::vector<PairClash> clashes;  // transition pairs whose energies coincide
};

/// Strong regularity: all transition energies pairwise distinct beyond tol.
/// A transition with (near-)zero energy means two levels coincide; it is
/// reported as a self-clash and breaks regularity too.
inline RegularityResult check_strong_regularity(const RealVector& h0_diag, double tolerance = 1e-9) {
    if (h0_diag.size() < 2) throw ValidationError("check_strong_regularity: need at least 2 levels");
    if (!(tolerance > 0.0)) throw ValidationError("check_strong_regularity: tolerance must be positive");
    const auto table = TransitionTable::from(h0_diag);
    std::vector<std::pair<LevelPair, double>> entries(table.deltas.begin(), table.deltas.end());
    RegularityResult result;
    for (std::size_t a = 0; a < entries.size(); ++a) {
        if (std::abs(entries[a].second) <= tolerance)
            result.clashes.emplace_back(entries[a].first, entries[a].first);
        for (std::size_t b = a + 1; b < entries.size(); ++b)
            if (std::abs(entries[a].second - entries[b].second) <= tolerance)
                result.clashes.emplace_back(entries[a].first, entries[b].first);
    }
    result.regular = result.clashes.empty();
    return result;
}

/// True iff the states share a spectrum (sorted eigenvalues agree within tol),
/// which for Hermitian matrices is unitary equivalence.
inline bool check_unitary_equivalence(const DensityMatrix& a, const DensityMatrix& b, double tolerance = 1e-9) {
    if (a.dim() != b.dim()) throw ValidationError("check_unitary_equivalence: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Matrix> ea(a.mat(), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Matrix> eb(b.mat(), Eigen::EigenvaluesOnly);
    return (ea.eigenvalues() - eb.eigenvalues()).cwiseAbs().maxCoeff() <= tolerance;
}

/// Static verification report for a configured control problem.
struct ConditionReport {
    bool strongly_regular = false;
    bool structure_ok = false;          // every control has the single-coupling form
    bool unitarily_equivalent = false;  // initial and target states share a spectrum
    bool coverage_complete = false;     // every level pair is coupled by some control
    PairList missing_pairs;             // 0-based, empty iff coverage_complete
    std::vector<PairClash> degenerate_transitions;

    bool all_ok() const {
        return strongly_regular && structure_ok && unitarily_equivalent && coverage_complete;
    }
};

/// Coverage of transition pairs by classified controls. An unclassifiable
/// control clears structure_ok and withdraws the convergence guarantee
/// (coverage_complete) even if the remaining pairs happen to be covered.
inline ConditionReport check_coupling_coverage(const QuantumSystem& sys) {
    ConditionReport report;
    report.structure_ok = true;
    std::set<LevelPair> covered;
    for (const auto& c : sys.controls) {
        if (c.pair)
            covered.insert(*c.pair);
        else
            report.structure_ok = false;
    }
    for (const auto& p : level_pairs(sys.n))
        if (!covered.count(p)) report.missing_pairs.push_back(p);
    report.coverage_complete = report.structure_ok && report.missing_pairs.empty();
    return report;
}

/// Full static check: regularity, control structure, unitary equivalence and
/// pair coverage for one run configuration.
inline ConditionReport check_conditions(const QuantumSystem& sys, const DensityMatrix& rho0,
                                        const DensityMatrix& rhof, double regularity_tol = 1e-9) {
    ConditionReport report = check_coupling_coverage(sys);
    auto reg = check_strong_regularity(sys.h0_diag, regularity_tol);
    report.strongly_regular = reg.regular;
    report.degenerate_transitions = std::move(reg.clashes);
    report.unitarily_equivalent = check_unitary_equivalence(rho0, rhof);
    return report;
}

}  // namespace qlyap
