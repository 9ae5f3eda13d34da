#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qlyap/control.hpp"
#include "qlyap/propagate.hpp"
#include "qlyap/qla.hpp"
#include "qlyap/system.hpp"

namespace qlyap {

using Json = nlohmann::ordered_json;

struct ObservableSpec {
    enum class Mode { NegativeTarget, Coherent, Pure };
    Mode mode = Mode::NegativeTarget;
    double lambda = -1.0;  // Coherent: negative scale on the target's coherent vector
    double c0 = 0.0;       // Coherent: trace offset (shifts E by a constant only)
    double p_low = 0.0;    // Pure: eigenvalue on the target direction
    RealVector p_high;     // Pure: eigenvalues on the complement (broadcast if length 1)
};

struct OutputSpec {
    std::string path = "out";
    std::string format = "csv";
    double convergence_threshold = 0.02;  // final population distance counted as converged
};

/// One fully validated run: system, states, observable recipe, and
/// simulation settings. Level indices are 1-based in the file format and
/// 0-based here.
struct RunConfig {
    QuantumSystem system;
    DensityMatrix initial_state;
    DensityMatrix target_state;
    ObservableSpec observable;
    SimulationConfig simulation;
    OutputSpec output;
    double regularity_tolerance = 1e-9;  // strong-regularity check (a.u.)
};

namespace detail {

[[noreturn]] inline void fail_field(const std::string& path, const std::string& message) {
    throw ValidationError(path + ": " + message);
}

inline const Json& member(const Json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail_field(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail_field(path + "." + key, "missing field");
    return *it;
}

inline double as_number(const Json& j, const std::string& path) {
    if (!j.is_number()) fail_field(path, "expected a number");
    return j.get<double>();
}

inline int as_int(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) fail_field(path, "expected an integer");
    return j.get<int>();
}

inline std::string as_string(const Json& j, const std::string& path) {
    if (!j.is_string()) fail_field(path, "expected a string");
    return j.get<std::string>();
}

inline RealVector as_real_vector(const Json& j, const std::string& path) {
    if (!j.is_array()) fail_field(path, "expected an array of numbers");
    RealVector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = as_number(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

// Matrix entries are either plain numbers (real) or [re, im] pairs.
inline Matrix as_matrix(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail_field(path, "expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Matrix m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Json& row = j[static_cast<std::size_t>(r)];
        const std::string rpath = path + "[" + std::to_string(r) + "]";
        if (!row.is_array()) fail_field(rpath, "expected an array row");
        if (r == 0) m.resize(rows, static_cast<Eigen::Index>(row.size()));
        if (static_cast<Eigen::Index>(row.size()) != m.cols()) fail_field(rpath, "ragged row length");
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const Json& cell = row[static_cast<std::size_t>(c)];
            const std::string cpath = rpath + "[" + std::to_string(c) + "]";
            if (cell.is_number())
                m(r, c) = Complex(cell.get<double>(), 0.0);
            else if (cell.is_array() && cell.size() == 2)
                m(r, c) = Complex(as_number(cell[0], cpath + "[0]"), as_number(cell[1], cpath + "[1]"));
            else
                fail_field(cpath, "expected a number or an [re, im] pair");
        }
    }
    return m;
}

inline DensityMatrix as_state(const Json& j, int n, const std::string& path) {
    try {
        if (j.is_object() && j.contains("diagonal")) {
            const RealVector d = as_real_vector(j["diagonal"], path + ".diagonal");
            if (d.size() != n) fail_field(path + ".diagonal", "length must equal system.n");
            return DensityMatrix::diagonal(d);
        }
        if (j.is_object() && j.contains("matrix")) {
            const Matrix m = as_matrix(j["matrix"], path + ".matrix");
            if (m.rows() != n) fail_field(path + ".matrix", "dimension must equal system.n");
            return DensityMatrix(m);
        }
    } catch (const ValidationError& e) {
        fail_field(path, e.what());
    }
    fail_field(path, "expected a \"diagonal\" or \"matrix\" field");
}

inline Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json state_to_json(const DensityMatrix& rho) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < rho.dim(); ++j)
        for (Eigen::Index k = 0; k < rho.dim(); ++k)
            if (j != k) off = std::max(off, std::abs(rho.mat()(j, k)));
    Json out = Json::object();
    if (off <= tol::hermitian) {
        const RealVector d = rho.populations();
        out["diagonal"] = std::vector<double>(d.data(), d.data() + d.size());
    } else {
        out["matrix"] = matrix_to_json(rho.mat());
    }
    return out;
}

}  // namespace detail

inline RunConfig parse_config(const Json& root) {
    using detail::as_int;
    using detail::as_number;
    using detail::as_real_vector;
    using detail::as_string;
    using detail::fail_field;
    using detail::member;

    const Json& jsystem = member(root, "system", "config");
    const int n = as_int(member(jsystem, "n", "system"), "system.n");
    if (n < 2) fail_field("system.n", "dimension must be at least 2");
    const RealVector energies = as_real_vector(member(jsystem, "energies", "system"), "system.energies");
    if (energies.size() != n) fail_field("system.energies", "length must equal system.n");

    const Json& jcontrols = member(jsystem, "controls", "system");
    if (!jcontrols.is_array() || jcontrols.empty()) fail_field("system.controls", "expected a non-empty array");
    std::vector<ControlHamiltonian> controls;
    for (std::size_t i = 0; i < jcontrols.size(); ++i) {
        const std::string path = "system.controls[" + std::to_string(i) + "]";
        const Json& jc = jcontrols[i];
        if (jc.is_object() && jc.contains("pair")) {
            const Json& jp = jc["pair"];
            if (!jp.is_array() || jp.size() != 2) fail_field(path + ".pair", "expected [j, k]");
            const int j = as_int(jp[0], path + ".pair[0]");
            const int k = as_int(jp[1], path + ".pair[1]");
            if (j < 1 || k < 1 || j > n || k > n || j == k)
                fail_field(path + ".pair", "levels are 1-based, distinct, and at most system.n");
            controls.push_back(ControlHamiltonian::coupling(n, j - 1, k - 1));
        } else if (jc.is_object() && jc.contains("matrix")) {
            Matrix m = detail::as_matrix(jc["matrix"], path + ".matrix");
            if (m.rows() != n) fail_field(path + ".matrix", "dimension must equal system.n");
            try {
                controls.push_back(ControlHamiltonian::from_matrix(std::move(m)));
            } catch (const ValidationError& e) {
                fail_field(path, e.what());
            }
        } else {
            fail_field(path, "expected a \"pair\" or \"matrix\" field");
        }
    }

    const RealVector gains = as_real_vector(member(jsystem, "gains", "system"), "system.gains");

    std::optional<QuantumSystem> system;
    try {
        system.emplace(energies, std::move(controls), gains);
    } catch (const ValidationError& e) {
        fail_field("system", e.what());
    }

    RunConfig cfg{
        std::move(*system),
        detail::as_state(member(root, "initial_state", "config"), n, "initial_state"),
        detail::as_state(member(root, "target_state", "config"), n, "target_state"),
        ObservableSpec{},
        SimulationConfig{},
        OutputSpec{},
        1e-9,
    };
    if (jsystem.contains("regularity_tolerance")) {
        cfg.regularity_tolerance =
            as_number(jsystem["regularity_tolerance"], "system.regularity_tolerance");
        if (!(cfg.regularity_tolerance > 0.0))
            fail_field("system.regularity_tolerance", "must be positive");
    }

    if (root.contains("observable")) {
        const Json& jobs = root["observable"];
        const std::string mode = as_string(member(jobs, "mode", "observable"), "observable.mode");
        if (mode == "negative_target") {
            cfg.observable.mode = ObservableSpec::Mode::NegativeTarget;
        } else if (mode == "coherent") {
            cfg.observable.mode = ObservableSpec::Mode::Coherent;
            cfg.observable.lambda = as_number(member(jobs, "lambda", "observable"), "observable.lambda");
            cfg.observable.c0 = as_number(member(jobs, "c0", "observable"), "observable.c0");
        } else if (mode == "pure") {
            cfg.observable.mode = ObservableSpec::Mode::Pure;
            cfg.observable.p_low = as_number(member(jobs, "p_l", "observable"), "observable.p_l");
            const Json& jph = member(jobs, "p_h", "observable");
            cfg.observable.p_high = jph.is_array() ? as_real_vector(jph, "observable.p_h")
                                                   : RealVector::Constant(1, as_number(jph, "observable.p_h"));
        } else {
            fail_field("observable.mode", "expected negative_target, coherent, or pure");
        }
    }

    if (root.contains("simulation")) {
        const Json& jsim = root["simulation"];
        if (jsim.contains("dt")) cfg.simulation.dt = as_number(jsim["dt"], "simulation.dt");
        if (jsim.contains("t_final")) cfg.simulation.t_final = as_number(jsim["t_final"], "simulation.t_final");
        if (jsim.contains("record_stride"))
            cfg.simulation.record_stride = as_int(jsim["record_stride"], "simulation.record_stride");
        if (jsim.contains("kick")) {
            const Json& jk = jsim["kick"];
            const std::string mode = as_string(member(jk, "mode", "simulation.kick"), "simulation.kick.mode");
            if (mode == "none") {
                cfg.simulation.kick = KickPolicy::none();
            } else if (mode == "constant_pulse" || mode == "destabilizing_direction") {
                const double amp = as_number(member(jk, "amplitude", "simulation.kick"), "simulation.kick.amplitude");
                const double dur = as_number(member(jk, "duration", "simulation.kick"), "simulation.kick.duration");
                if (!(amp > 0.0) || !(dur > 0.0))
                    fail_field("simulation.kick", "amplitude and duration must be positive");
                cfg.simulation.kick = KickPolicy::constant_pulse(amp, dur);
                if (mode == "destabilizing_direction") {
                    // direction is computed from the stability analysis at run time
                    cfg.simulation.kick.mode = KickMode::DestabilizingDirection;
                }
            } else {
                fail_field("simulation.kick.mode", "expected none, constant_pulse, or destabilizing_direction");
            }
        }
        try {
            cfg.simulation.validate();
        } catch (const ValidationError& e) {
            fail_field("simulation", e.what());
        }
    }

    if (root.contains("output")) {
        const Json& jout = root["output"];
        if (jout.contains("path")) cfg.output.path = as_string(jout["path"], "output.path");
        if (jout.contains("format")) {
            cfg.output.format = as_string(jout["format"], "output.format");
            if (cfg.output.format != "csv") fail_field("output.format", "only csv is supported");
        }
        if (jout.contains("convergence_threshold")) {
            cfg.output.convergence_threshold =
                as_number(jout["convergence_threshold"], "output.convergence_threshold");
            if (!(cfg.output.convergence_threshold > 0.0))
                fail_field("output.convergence_threshold", "must be positive");
        }
    }

    return cfg;
}

inline RunConfig parse_config(std::string_view text) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return parse_config(root);
}

inline RunConfig load_config(const std::string& file_path) {
    std::ifstream in(file_path);
    if (!in) throw ValidationError("config: cannot open " + file_path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(std::string_view(buffer.str()));
}

inline Json config_to_json(const RunConfig& cfg) {
    Json root = Json::object();
    Json jsystem = Json::object();
    jsystem["n"] = cfg.system.n;
    jsystem["energies"] =
        std::vector<double>(cfg.system.h0_diag.data(), cfg.system.h0_diag.data() + cfg.system.n);
    Json jcontrols = Json::array();
    for (const auto& c : cfg.system.controls) {
        Json jc = Json::object();
        if (c.pair)
            jc["pair"] = Json::array({c.pair->first + 1, c.pair->second + 1});
        else
            jc["matrix"] = detail::matrix_to_json(c.matrix);
        jcontrols.push_back(std::move(jc));
    }
    jsystem["controls"] = std::move(jcontrols);
    jsystem["gains"] =
        std::vector<double>(cfg.system.gains.data(), cfg.system.gains.data() + cfg.system.gains.size());
    jsystem["regularity_tolerance"] = cfg.regularity_tolerance;
    root["system"] = std::move(jsystem);

    root["initial_state"] = detail::state_to_json(cfg.initial_state);
    root["target_state"] = detail::state_to_json(cfg.target_state);

    Json jobs = Json::object();
    switch (cfg.observable.mode) {
        case ObservableSpec::Mode::NegativeTarget:
            jobs["mode"] = "negative_target";
            break;
        case ObservableSpec::Mode::Coherent:
            jobs["mode"] = "coherent";
            jobs["lambda"] = cfg.observable.lambda;
            jobs["c0"] = cfg.observable.c0;
            break;
        case ObservableSpec::Mode::Pure:
            jobs["mode"] = "pure";
            jobs["p_l"] = cfg.observable.p_low;
            if (cfg.observable.p_high.size() == 1)
                jobs["p_h"] = cfg.observable.p_high(0);
            else
                jobs["p_h"] = std::vector<double>(cfg.observable.p_high.data(),
                                                  cfg.observable.p_high.data() + cfg.observable.p_high.size());
            break;
    }
    root["observable"] = std::move(jobs);

    Json jsim = Json::object();
    jsim["dt"] = cfg.simulation.dt;
    jsim["t_final"] = cfg.simulation.t_final;
    Json jkick = Json::object();
    switch (cfg.simulation.kick.mode) {
        case KickMode::None:
            jkick["mode"] = "none";
            break;
        case KickMode::ConstantPulse:
            jkick["mode"] = "constant_pulse";
            jkick["amplitude"] = cfg.simulation.kick.amplitude;
            jkick["duration"] = cfg.simulation.kick.duration;
            break;
        case KickMode::DestabilizingDirection:
            jkick["mode"] = "destabilizing_direction";
            jkick["amplitude"] = cfg.simulation.kick.amplitude;
            jkick["duration"] = cfg.simulation.kick.duration;
            break;
    }
    jsim["kick"] = std::move(jkick);
    jsim["record_stride"] = cfg.simulation.record_stride;
    root["simulation"] = std::move(jsim);

    Json jout = Json::object();
    jout["path"] = cfg.output.path;
    jout["format"] = cfg.output.format;
    jout["convergence_threshold"] = cfg.output.convergence_threshold;
    root["output"] = std::move(jout);

    return root;
}

inline std::string serialize_config(const RunConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

/// Build the observable operator the configured way.
inline Observable make_observable(const RunConfig& cfg) {
    switch (cfg.observable.mode) {
        case ObservableSpec::Mode::NegativeTarget:
            return Observable::negative_target(cfg.target_state);
        case ObservableSpec::Mode::Coherent:
            return Observable::coherent_scaled(cfg.target_state, cfg.observable.lambda,
                                               cfg.observable.c0, SuBasis(cfg.system.n));
        case ObservableSpec::Mode::Pure: {
            // the target must be (numerically) pure: extract its state vector
            const Matrix& rho = cfg.target_state.mat();
            const double purity = (rho * rho).trace().real();
            if (std::abs(purity - 1.0) > 1e-9)
                throw ValidationError("observable: pure mode requires a pure target state");
            Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
            const ComplexVector psi = es.eigenvectors().col(cfg.system.n - 1);  // eigenvalue ~1
            RealVector p_high = cfg.observable.p_high;
            if (p_high.size() == 1) p_high = RealVector::Constant(cfg.system.n - 1, p_high(0));
            return Observable::pure_spectrum(psi, cfg.observable.p_low, p_high);
        }
    }
    throw ValidationError("observable: unknown mode");
}

/// Scenario presets. two_level is a convenience for quick runs; the two
/// four_level presets are the replication scenarios.
inline RunConfig preset(std::string_view name) {
    const auto four_level = [](bool full_coupling) {
        RealVector energies(4);
        energies << 0.4948, 1.4529, 2.3691, 3.2434;
        std::vector<ControlHamiltonian> controls{
            ControlHamiltonian::coupling(4, 0, 1), ControlHamiltonian::coupling(4, 1, 2),
            ControlHamiltonian::coupling(4, 2, 3)};
        if (full_coupling) {
            controls.push_back(ControlHamiltonian::coupling(4, 0, 2));
            controls.push_back(ControlHamiltonian::coupling(4, 1, 3));
            controls.push_back(ControlHamiltonian::coupling(4, 0, 3));
        }
        const auto m = static_cast<Eigen::Index>(controls.size());
        RealVector rho0(4);
        rho0 << 0.3850, 0.2758, 0.1976, 0.1416;
        RunConfig cfg{
            QuantumSystem(energies, std::move(controls), RealVector::Constant(m, 20.0)),
            DensityMatrix::diagonal(rho0),
            DensityMatrix::diagonal(rho0.reverse()),
            ObservableSpec{},
            SimulationConfig{},
            OutputSpec{},
            1e-9,
        };
        cfg.simulation.record_stride = 10;
        return cfg;
    };
    if (name == "four_level_full") return four_level(true);
    if (name == "four_level_ladder") return four_level(false);
    if (name == "two_level") {
        RealVector energies(2);
        energies << 0.4948, 1.4529;
        std::vector<ControlHamiltonian> controls{ControlHamiltonian::coupling(2, 0, 1)};
        RealVector rho0(2);
        rho0 << 0.7, 0.3;
        RunConfig cfg{
            QuantumSystem(energies, std::move(controls), RealVector::Constant(1, 20.0)),
            DensityMatrix::diagonal(rho0),
            DensityMatrix::diagonal(rho0.reverse()),
            ObservableSpec{},
            SimulationConfig{},
            OutputSpec{},
            1e-9,
        };
        cfg.simulation.t_final = 50.0;
        cfg.simulation.record_stride = 10;
        return cfg;
    }
    throw ValidationError("unknown preset \"" + std::string(name) +
                          "\" (known: four_level_full, four_level_ladder, two_level)");
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"four_level_full", "four_level_ladder", "two_level"};
    return names;
}

/// Presets accepted by the replicate subcommand.
inline const std::vector<std::string>& replication_preset_names() {
    static const std::vector<std::string> names{"four_level_full", "four_level_ladder"};
    return names;
}

}  // namespace qlyap
