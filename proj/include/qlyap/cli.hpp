#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qlyap/analysis.hpp"
#include "qlyap/config.hpp"
#include "qlyap/control.hpp"
#include "qlyap/propagate.hpp"
#include "qlyap/system.hpp"

namespace qlyap {

// Exit-code contract shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;         // validation or integration failure
inline constexpr int kExitNotConverged = 2;  // run completed, target not reached
inline constexpr int kExitChecksFailed = 3;  // static conditions not satisfied

namespace detail {

/// Fixed 9-significant-digit formatting; keeps CSV output byte-stable.
inline std::string format_number(double v) {
    if (v == 0.0) v = 0.0;  // fold -0 into 0
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::string pair_str(const LevelPair& p) {
    return "(" + std::to_string(p.first + 1) + "," + std::to_string(p.second + 1) + ")";
}

}  // namespace detail

/// CSV schema: t,E,pop_1..pop_n,u_1..u_m with 9 significant digits.
inline void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    out << "t,E";
    for (Eigen::Index j = 0; j < traj.populations.cols(); ++j) out << ",pop_" << (j + 1);
    for (Eigen::Index j = 0; j < traj.controls.cols(); ++j) out << ",u_" << (j + 1);
    out << "\n";
    for (Eigen::Index i = 0; i < traj.samples(); ++i) {
        out << detail::format_number(traj.times(i)) << ',' << detail::format_number(traj.energies(i));
        for (Eigen::Index j = 0; j < traj.populations.cols(); ++j)
            out << ',' << detail::format_number(traj.populations(i, j));
        for (Eigen::Index j = 0; j < traj.controls.cols(); ++j)
            out << ',' << detail::format_number(traj.controls(i, j));
        out << "\n";
    }
}

inline void render_condition_report(const ConditionReport& report, const RealVector& h0_diag,
                                    std::ostream& out) {
    out << "condition report\n";
    out << "  strong regularity:   " << (report.strongly_regular ? "ok" : "FAILED");
    if (!report.degenerate_transitions.empty()) {
        out << "  (clashing transitions:";
        for (const auto& [a, b] : report.degenerate_transitions)
            out << ' ' << detail::pair_str({a.second, a.first}) << '~'
                << detail::pair_str({b.second, b.first});
        out << ')';
    }
    out << "\n";
    out << "  control structure:   " << (report.structure_ok ? "ok" : "FAILED (unclassified control present)")
        << "\n";
    out << "  unitary equivalence: " << (report.unitarily_equivalent ? "ok" : "FAILED") << "\n";
    out << "  coupling coverage:   ";
    if (report.coverage_complete) {
        out << "complete\n";
    } else {
        out << "incomplete (missing:";
        for (const auto& p : report.missing_pairs) out << ' ' << detail::pair_str(p);
        out << ")\n";
    }
    const auto table = TransitionTable::from(h0_diag);
    out << "  transition energies:";
    for (const auto& [pair, delta] : table.deltas)
        out << ' ' << detail::pair_str({pair.second, pair.first}) << '=' << detail::format_number(delta);
    out << "\n";
}

inline std::string verdict_str(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::MinimumTarget: return "minimum_target";
        case StabilityVerdict::UnstableWithWitness: return "unstable_with_witness";
        case StabilityVerdict::Blocked: return "blocked";
    }
    return "?";
}

inline void render_critical_points(const std::vector<CriticalPoint>& points, const Observable& p,
                                   std::ostream& out) {
    int minima = 0, unstable = 0, blocked = 0;
    for (const auto& point : points) {
        switch (point.verdict) {
            case StabilityVerdict::MinimumTarget: ++minima; break;
            case StabilityVerdict::UnstableWithWitness: ++unstable; break;
            case StabilityVerdict::Blocked: ++blocked; break;
        }
    }
    out << "critical points: " << points.size() << " total, " << minima << " minimum, " << unstable
        << " unstable, " << blocked << " blocked\n";
    out << "  permutation        E(rho_s)       verdict                curvature   witness\n";
    for (const auto& point : points) {
        std::ostringstream perm;
        perm << '(';
        for (std::size_t i = 0; i < point.permutation.size(); ++i)
            perm << (i ? " " : "") << point.permutation[i] + 1;
        perm << ')';
        out << "  " << std::left << std::setw(18) << perm.str() << ' ' << std::setw(14)
            << detail::format_number(energy(p, point.rho_s)) << ' ' << std::setw(22)
            << verdict_str(point.verdict) << ' ';
        if (point.witness) {
            out << std::setw(11) << detail::format_number(point.curvature) << " (";
            for (Eigen::Index j = 0; j < point.witness->size(); ++j)
                out << (j ? " " : "") << detail::format_number((*point.witness)(j));
            out << ')';
        } else {
            out << std::setw(11) << "-" << " -";
        }
        out << "\n";
    }
}

namespace detail {

inline PairList classified_pairs(const QuantumSystem& sys) {
    PairList pairs;
    for (const auto& c : sys.controls)
        if (c.pair) pairs.push_back(*c.pair);
    return pairs;
}

/// Resolve a destabilizing-direction kick at the initial state. Controls
/// without the single-coupling form get zero amplitude. Returns an unchanged
/// policy when the initial point is not critical (the feedback law already
/// moves) and fails when the initial point is critical but blocked.
inline KickPolicy resolve_kick(const RunConfig& cfg, const Observable& p) {
    KickPolicy kick = cfg.simulation.kick;
    if (kick.mode != KickMode::DestabilizingDirection) return kick;
    const Matrix c = commutator(cfg.initial_state.mat(), p.mat());
    if (c.cwiseAbs().maxCoeff() > 1e-12) {
        // not a critical point; no open-loop escape needed
        return KickPolicy::none();
    }
    const PairList pairs = classified_pairs(cfg.system);
    const auto witness =
        find_destabilizing_control(cfg.initial_state, cfg.target_state, pairs, cfg.system.h0_diag);
    if (!witness)
        throw ValidationError(
            "kick: the initial state is a blocked critical point for the configured controls");
    RealVector direction = RealVector::Zero(static_cast<Eigen::Index>(cfg.system.control_count()));
    Eigen::Index c_idx = 0;
    for (std::size_t j = 0; j < cfg.system.control_count(); ++j)
        if (cfg.system.controls[j].pair) direction(static_cast<Eigen::Index>(j)) = witness->u(c_idx++);
    return KickPolicy::destabilizing(kick.amplitude, kick.duration, direction);
}

inline std::filesystem::path ensure_out_dir(const std::optional<std::filesystem::path>& override_dir,
                                            const RunConfig& cfg) {
    const std::filesystem::path dir = override_dir.value_or(std::filesystem::path(cfg.output.path));
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace detail

inline int cmd_check(const RunConfig& cfg, std::ostream& out,
                     const std::optional<std::filesystem::path>& out_dir = {}) {
    const ConditionReport report = check_conditions(cfg.system, cfg.initial_state,
                                                    cfg.target_state, cfg.regularity_tolerance);
    render_condition_report(report, cfg.system.h0_diag, out);
    if (out_dir) {
        std::ofstream file(*out_dir / "report.txt");
        render_condition_report(report, cfg.system.h0_diag, file);
    }
    return report.all_ok() ? kExitOk : kExitChecksFailed;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out,
                        const std::optional<std::filesystem::path>& out_dir = {}) {
    const Observable p = make_observable(cfg);
    SimulationConfig sim = cfg.simulation;
    sim.kick = detail::resolve_kick(cfg, p);

    const Trajectory traj = simulate(cfg.system, cfg.initial_state, p, sim);

    const auto dir = detail::ensure_out_dir(out_dir, cfg);
    {
        std::ofstream csv(dir / "trajectory.csv");
        write_trajectory_csv(traj, csv);
    }

    const TargetDistance dist = distance_to_target(traj.final_state, cfg.target_state);
    out << "samples: " << traj.samples() << "  (dt=" << detail::format_number(sim.dt)
        << ", t_final=" << detail::format_number(sim.t_final) << ")\n";
    out << "final populations:";
    const RealVector pops = traj.final_state.populations();
    for (Eigen::Index j = 0; j < pops.size(); ++j) out << ' ' << detail::format_number(pops(j));
    out << "\nfinal energy: " << detail::format_number(traj.energies(traj.samples() - 1)) << "\n";
    out << "distance to target: hilbert-schmidt " << detail::format_number(dist.hilbert_schmidt)
        << ", population " << detail::format_number(dist.population_inf) << "\n";
    out << "trajectory: " << (dir / "trajectory.csv").string() << "\n";

    return dist.population_inf <= cfg.output.convergence_threshold ? kExitOk : kExitNotConverged;
}

inline int cmd_analyze(const RunConfig& cfg, std::ostream& out,
                       const std::optional<std::filesystem::path>& out_dir = {}) {
    const Observable p = make_observable(cfg);
    const PairList pairs = detail::classified_pairs(cfg.system);
    if (pairs.size() < cfg.system.control_count())
        out << "note: controls without single-coupling form are excluded from the analysis\n";
    const auto points =
        analyze_invariant_set(cfg.target_state, p, pairs, cfg.system.h0_diag);
    render_critical_points(points, p, out);
    if (out_dir) {
        std::ofstream file(*out_dir / "critical_points.txt");
        render_critical_points(points, p, file);
    }
    return kExitOk;
}

inline int cmd_replicate(const std::string& preset_name, std::ostream& out,
                         const std::optional<std::filesystem::path>& out_dir = {}) {
    bool known = false;
    for (const auto& name : replication_preset_names()) known = known || name == preset_name;
    if (!known)
        throw ValidationError("replicate: unknown preset \"" + preset_name +
                              "\" (known: four_level_full, four_level_ladder)");
    const RunConfig cfg = preset(preset_name);
    const auto dir = detail::ensure_out_dir(out_dir, cfg);

    // static conditions
    const ConditionReport report = check_conditions(cfg.system, cfg.initial_state,
                                                    cfg.target_state, cfg.regularity_tolerance);
    {
        std::ofstream file(dir / "report.txt");
        render_condition_report(report, cfg.system.h0_diag, file);
    }
    render_condition_report(report, cfg.system.h0_diag, out);

    // dynamics, with closed-system diagnostics gathered along the way
    const Observable p = make_observable(cfg);
    SimulationConfig sim = cfg.simulation;
    sim.kick = detail::resolve_kick(cfg, p);

    Eigen::SelfAdjointEigenSolver<Matrix> es0(cfg.initial_state.mat(), Eigen::EigenvaluesOnly);
    const RealVector spectrum0 = es0.eigenvalues();
    double max_trace_err = 0.0, max_herm_residue = 0.0, max_spectrum_drift = 0.0;
    const SampleObserver observer = [&](double, const Matrix& rho, const RealVector&) {
        max_trace_err = std::max(max_trace_err, std::abs(rho.trace().real() - 1.0));
        max_herm_residue = std::max(max_herm_residue, hermiticity_residue(rho));
        Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
        max_spectrum_drift =
            std::max(max_spectrum_drift, (es.eigenvalues() - spectrum0).cwiseAbs().maxCoeff());
    };
    const Trajectory traj = simulate(cfg.system, cfg.initial_state, p, sim, observer);
    {
        std::ofstream csv(dir / "trajectory.csv");
        write_trajectory_csv(traj, csv);
    }

    // energy monotonicity outside the kick window, and the lower bound
    const double bound = -(cfg.target_state.mat() * cfg.target_state.mat()).trace().real();
    double max_energy_rise = 0.0, min_energy = traj.energies(0);
    for (Eigen::Index i = 1; i < traj.samples(); ++i) {
        min_energy = std::min(min_energy, traj.energies(i));
        if (traj.times(i - 1) >= sim.kick.duration)
            max_energy_rise = std::max(max_energy_rise, traj.energies(i) - traj.energies(i - 1));
    }

    // settle times (last time a field magnitude reaches 0.01) per control
    const auto last_above = [&](Eigen::Index col) {
        double last = -1.0;
        for (Eigen::Index i = 0; i < traj.samples(); ++i)
            if (std::abs(traj.controls(i, col)) >= 0.01) last = traj.times(i);
        return last;
    };

    // stability analysis
    const auto points = analyze_invariant_set(cfg.target_state, p, detail::classified_pairs(cfg.system),
                                              cfg.system.h0_diag);
    {
        std::ofstream file(dir / "critical_points.txt");
        render_critical_points(points, p, file);
    }
    int minima = 0, unstable = 0, blocked = 0;
    for (const auto& point : points) {
        switch (point.verdict) {
            case StabilityVerdict::MinimumTarget: ++minima; break;
            case StabilityVerdict::UnstableWithWitness: ++unstable; break;
            case StabilityVerdict::Blocked: ++blocked; break;
        }
    }

    const TargetDistance dist = distance_to_target(traj.final_state, cfg.target_state);
    const bool converged = dist.population_inf <= cfg.output.convergence_threshold;

    Json summary = Json::object();
    summary["preset"] = preset_name;
    summary["checks"] = {{"strongly_regular", report.strongly_regular},
                         {"structure_ok", report.structure_ok},
                         {"unitarily_equivalent", report.unitarily_equivalent},
                         {"coverage_complete", report.coverage_complete}};
    summary["converged"] = converged;
    summary["final_population_distance"] = dist.population_inf;
    summary["final_hilbert_schmidt_distance"] = dist.hilbert_schmidt;
    summary["energy_monotone"] = max_energy_rise <= 1e-7;
    summary["energy_lower_bound_ok"] = min_energy >= bound - 1e-8;
    summary["invariants"] = {{"max_trace_error", max_trace_err},
                             {"max_hermiticity_residue", max_herm_residue},
                             {"max_spectrum_drift", max_spectrum_drift},
                             {"ok", max_trace_err <= 1e-10 && max_herm_residue <= 1e-10 &&
                                        max_spectrum_drift <= 1e-8}};
    Json settle = Json::object();
    std::optional<double> settle_14, settle_23;
    for (std::size_t j = 0; j < cfg.system.control_count(); ++j) {
        const double t_j = last_above(static_cast<Eigen::Index>(j));
        settle["u_" + std::to_string(j + 1)] = t_j;
        if (cfg.system.controls[j].pair == LevelPair{0, 3}) settle_14 = t_j;
        if (cfg.system.controls[j].pair == LevelPair{1, 2}) settle_23 = t_j;
    }
    summary["field_settle_times"] = std::move(settle);
    if (settle_14 && settle_23)
        summary["outer_field_settles_first"] = *settle_14 >= 0.0 && *settle_14 < *settle_23;
    summary["critical_points"] = {
        {"total", points.size()}, {"minimum", minima}, {"unstable", unstable}, {"blocked", blocked}};

    {
        std::ofstream file(dir / "summary.json");
        file << summary.dump(2) << "\n";
    }
    out << "replicate: wrote " << (dir / "trajectory.csv").string() << ", report.txt, "
        << "critical_points.txt, summary.json\n";
    out << "converged: " << (converged ? "true" : "false")
        << ", coverage_complete: " << (report.coverage_complete ? "true" : "false") << "\n";

    if (!report.all_ok()) return kExitChecksFailed;
    return converged ? kExitOk : kExitNotConverged;
}

/// Full command-line driver. `args` excludes the program name. Returns the
/// process exit code per the contract above.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Convergent energy-function control of closed quantum systems"};
    app.require_subcommand(1);

    struct SubArgs {
        std::string config_path;
        std::string preset_name;
        std::string out_dir;
    };
    SubArgs check_args, sim_args, analyze_args, rep_args;

    const auto add_common = [](CLI::App* sub, SubArgs& a) {
        sub->add_option("--config", a.config_path, "path to a run configuration (JSON)");
        sub->add_option("--preset", a.preset_name, "named scenario preset");
        sub->add_option("--out", a.out_dir, "output directory");
    };
    CLI::App* check = app.add_subcommand("check", "verify the static convergence conditions");
    add_common(check, check_args);
    CLI::App* sim = app.add_subcommand("simulate", "propagate the feedback dynamics");
    add_common(sim, sim_args);
    CLI::App* analyze = app.add_subcommand("analyze", "stability of every invariant-set state");
    add_common(analyze, analyze_args);
    CLI::App* replicate =
        app.add_subcommand("replicate", "run check + simulate + analyze on a scenario preset");
    replicate->add_option("--preset", rep_args.preset_name, "scenario preset")->required();
    replicate->add_option("--out", rep_args.out_dir, "output directory");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitError;
    }

    const auto out_dir_of = [](const SubArgs& a) -> std::optional<std::filesystem::path> {
        if (a.out_dir.empty()) return std::nullopt;
        return std::filesystem::path(a.out_dir);
    };
    const auto load = [&](const SubArgs& a) -> RunConfig {
        if (!a.config_path.empty() && !a.preset_name.empty())
            throw ValidationError("give either --config or --preset, not both");
        if (!a.config_path.empty()) return load_config(a.config_path);
        if (!a.preset_name.empty()) return preset(a.preset_name);
        throw ValidationError("one of --config or --preset is required");
    };

    try {
        if (check->parsed()) return cmd_check(load(check_args), out, out_dir_of(check_args));
        if (sim->parsed()) return cmd_simulate(load(sim_args), out, out_dir_of(sim_args));
        if (analyze->parsed()) return cmd_analyze(load(analyze_args), out, out_dir_of(analyze_args));
        if (replicate->parsed()) return cmd_replicate(rep_args.preset_name, out, out_dir_of(rep_args));
    } catch (const IntegrationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace qlyap
