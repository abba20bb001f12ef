#pragma once

// JSON run configuration: schema checking, defaults and the resolved-config
// echo embedded in every output record.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dephasim/bath.hpp"
#include "dephasim/error.hpp"
#include "dephasim/experiments.hpp"
#include "dephasim/qubits.hpp"

namespace dephasim {

enum class Subcommand { Trajectory, Sweep, Kernels, OracleCheck };

inline std::string to_string(Subcommand c) {
    switch (c) {
        case Subcommand::Trajectory: return "trajectory";
        case Subcommand::Sweep: return "sweep";
        case Subcommand::Kernels: return "kernels";
        case Subcommand::OracleCheck: return "oracle-check";
    }
    return "?";
}

struct KernelsSpec {
    std::vector<double> t_grid;
    int max_lag = 2;
};

struct OracleSpec {
    DiscreteBath bath;
    double tolerance = 2e-6;
    bool reset_environment = false;
};

struct RunConfig {
    Subcommand command = Subcommand::Trajectory;
    ScenarioConfig scenario;
    SweepSpec sweep;
    KernelsSpec kernels;
    OracleSpec oracle;
};

inline constexpr std::string_view kDefaultsNote =
    "beta, omega_0, cutoff form, dt and the sweep grid are artifact defaults when listed under "
    "defaults_applied; they are program choices, not published parameter values";

namespace detail {

/// Typed field access over one JSON object. Every key read is marked; any
/// key left unread at the end is rejected.
class ObjectReader {
public:
    ObjectReader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<document>" : path_, "expected an object");
    }

    std::string field(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    bool has(std::string_view key) {
        known_.insert(std::string(key));
        return obj_.contains(std::string(key));
    }

    const nlohmann::json& raw(std::string_view key) {
        known_.insert(std::string(key));
        return obj_.at(std::string(key));
    }

    double number(std::string_view key) {
        const auto& v = raw(key);
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(field(key), "must be finite");
        return d;
    }

    int integer(std::string_view key) {
        const auto& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
        return v.get<int>();
    }

    bool boolean(std::string_view key) {
        const auto& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
        return v.get<bool>();
    }

    std::string text(std::string_view key) {
        const auto& v = raw(key);
        if (!v.is_string()) throw ConfigError(field(key), "expected a string");
        return v.get<std::string>();
    }

    void require(std::string_view key) {
        if (!has(key)) throw ConfigError(field(key), "is required");
    }

    void reject_unknown() const {
        for (const auto& item : obj_.items())
            if (!known_.count(item.key())) throw ConfigError(field(item.key()), "unknown key");
    }

private:
    const nlohmann::json& obj_;
    std::string path_;
    std::set<std::string> known_;
};

inline std::string normalise_word(std::string s) {
    std::string out;
    for (char c : s)
        if (c != '_' && c != '-' && c != ' ') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

inline Complex complex_value(const nlohmann::json& v, const std::string& field) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw ConfigError(field, "expected a number or [re, im]");
}

inline nlohmann::json complex_json(Complex z) {
    return z.imag() == 0.0 ? nlohmann::json(z.real()) : nlohmann::json::array({z.real(), z.imag()});
}

inline nlohmann::json beta_json(double beta) {
    return std::isinf(beta) ? nlohmann::json("inf") : nlohmann::json(beta);
}

inline std::string to_string(Preparation p) {
    switch (p) {
        case Preparation::ProductX: return "product_x";
        case Preparation::Bell: return "bell";
        case Preparation::Custom: return "custom";
    }
    return "?";
}

inline std::string to_string(EvolutionMode m) {
    switch (m) {
        case EvolutionMode::Reset: return "reset";
        case EvolutionMode::Tracked: return "tracked";
        case EvolutionMode::Both: return "both";
    }
    return "?";
}

inline std::vector<double> number_list(const nlohmann::json& v, const std::string& field) {
    if (!v.is_array()) throw ConfigError(field, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(field, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

}  // namespace detail

/// Parses and validates a configuration document for `command`. Defaults are
/// resolved and recorded in scenario.meta together with the resolved values.
inline RunConfig parse_config(std::string_view document, Subcommand command) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
    }
    detail::ObjectReader top(doc, "");
    RunConfig rc;
    rc.command = command;
    auto& sc = rc.scenario;
    std::vector<std::string> defaults;
    nlohmann::json resolved = nlohmann::json::object();

    const bool needs_density = command != Subcommand::OracleCheck;
    const bool needs_schedule = command != Subcommand::Sweep;
    const bool needs_state = command == Subcommand::Trajectory || command == Subcommand::OracleCheck;

    if (top.has("name")) resolved["name"] = top.text("name");

    if (needs_density) {
        for (auto key : {"s", "G", "omega_c"}) top.require(key);
        sc.density.ohmicity = top.number("s");
        sc.density.coupling = top.number("G");
        sc.density.cutoff_frequency = top.number("omega_c");
        if (top.has("cutoff")) {
            const auto c = detail::normalise_word(top.text("cutoff"));
            if (c == "exponential") sc.density.cutoff = Cutoff::Exponential;
            else if (c == "hard") sc.density.cutoff = Cutoff::Hard;
            else throw ConfigError("cutoff", "expected \"exponential\" or \"hard\"");
        } else {
            defaults.push_back("cutoff");
        }
        sc.density.validate();
        resolved["s"] = sc.density.ohmicity;
        resolved["G"] = sc.density.coupling;
        resolved["omega_c"] = sc.density.cutoff_frequency;
        resolved["cutoff"] = to_string(sc.density.cutoff);
    } else {
        for (auto key : {"s", "G", "omega_c", "cutoff"})
            if (top.has(key)) throw ConfigError(key, "not used by " + to_string(command));
    }

    if (top.has("beta")) {
        const auto& b = top.raw("beta");
        if (b.is_string() && detail::normalise_word(b.get<std::string>()) == "inf")
            sc.thermal.beta = BathParams::infinity;
        else if (b.is_number())
            sc.thermal.beta = b.get<double>();
        else
            throw ConfigError("beta", "expected a number or \"inf\"");
    } else {
        defaults.push_back("beta");
    }
    sc.thermal.validate();
    resolved["beta"] = detail::beta_json(sc.thermal.beta);

    if (top.has("omega_0")) sc.system.omega_0 = top.number("omega_0");
    else defaults.push_back("omega_0");
    sc.system.validate();
    resolved["omega_0"] = sc.system.omega_0;

    if (needs_schedule) {
        top.require("tau");
        top.require("t_max");
        auto& sched = sc.schedule;
        sched.tau = top.number("tau");
        if (!(sched.tau > 0.0)) throw ConfigError("tau", "must be > 0");
        sched.t_max = top.number("t_max");
        if (!(sched.t_max > 0.0)) throw ConfigError("t_max", "must be > 0");
        if (top.has("dt")) {
            sched.dt = top.number("dt");
        } else {
            sched.dt = sched.tau / 200.0;
            defaults.push_back("dt");
        }
        if (top.has("n_measurements")) {
            sched.n_measurements = top.integer("n_measurements");
        } else {
            sched.n_measurements = MeasurementSchedule::measurements_to_cover(sched.t_max, sched.tau);
            defaults.push_back("n_measurements");
        }
        sched.validate();
        resolved["tau"] = sched.tau;
        resolved["t_max"] = sched.t_max;
        resolved["dt"] = sched.dt;
        resolved["n_measurements"] = sched.n_measurements;
    } else {
        for (auto key : {"tau", "t_max", "dt", "n_measurements"})
            if (top.has(key)) throw ConfigError(key, "not used by sweep; use sweep.tau_grid");
    }

    if (needs_state) {
        top.require("preparation");
        const auto p = detail::normalise_word(top.text("preparation"));
        if (p == "productx") sc.preparation = Preparation::ProductX;
        else if (p == "bell") sc.preparation = Preparation::Bell;
        else if (p == "custom") sc.preparation = Preparation::Custom;
        else throw ConfigError("preparation", "expected \"product_x\", \"bell\" or \"custom\"");
        if (sc.preparation == Preparation::Custom) {
            top.require("amplitudes");
            const auto& a = top.raw("amplitudes");
            if (!a.is_array() || a.size() != 4) throw ConfigError("amplitudes", "expected 4 entries");
            nlohmann::json echo = nlohmann::json::array();
            for (std::size_t i = 0; i < 4; ++i) {
                sc.custom_state.amplitudes[i] =
                    detail::complex_value(a[i], "amplitudes[" + std::to_string(i) + "]");
                echo.push_back(detail::complex_json(sc.custom_state.amplitudes[i]));
            }
            if (std::abs(sc.custom_state.norm_squared() - 1.0) > 1e-12)
                throw ConfigError("amplitudes", "must have unit norm");
            resolved["amplitudes"] = echo;
        } else if (top.has("amplitudes")) {
            throw ConfigError("amplitudes", "only valid with preparation \"custom\"");
        }
        resolved["preparation"] = detail::to_string(sc.preparation);
    } else if (top.has("preparation")) {
        const auto p = top.text("preparation");
        if (command == Subcommand::Sweep && detail::normalise_word(p) != "productx")
            throw ConfigError("preparation", "sweeps always prepare product_x");
        resolved["preparation"] = p;
    }

    if (command == Subcommand::Trajectory) {
        if (top.has("mode")) {
            const auto m = detail::normalise_word(top.text("mode"));
            if (m == "reset") sc.mode = EvolutionMode::Reset;
            else if (m == "tracked") sc.mode = EvolutionMode::Tracked;
            else if (m == "both") sc.mode = EvolutionMode::Both;
            else throw ConfigError("mode", "expected \"reset\", \"tracked\" or \"both\"");
        } else {
            defaults.push_back("mode");
        }
        if (top.has("include_rho")) sc.include_rho = top.boolean("include_rho");
        else defaults.push_back("include_rho");
        resolved["mode"] = detail::to_string(sc.mode);
        resolved["include_rho"] = sc.include_rho;
    }

    if (command == Subcommand::Sweep) {
        nlohmann::json empty = nlohmann::json::object();
        const bool given = top.has("sweep");
        const auto& block = given ? top.raw("sweep") : empty;
        detail::ObjectReader sw(block, "sweep");
        auto& spec = rc.sweep;
        if (sw.has("tau_grid")) {
            for (auto key : {"tau_min", "tau_max", "tau_count"})
                if (sw.has(key)) throw ConfigError(sw.field(key), "conflicts with sweep.tau_grid");
            spec.tau_grid = detail::number_list(sw.raw("tau_grid"), "sweep.tau_grid");
        } else {
            double lo = 0.05, hi = 2.0;
            int count = 40;
            if (sw.has("tau_min")) lo = sw.number("tau_min");
            else defaults.push_back("sweep.tau_min");
            if (sw.has("tau_max")) hi = sw.number("tau_max");
            else defaults.push_back("sweep.tau_max");
            if (sw.has("tau_count")) count = sw.integer("tau_count");
            else defaults.push_back("sweep.tau_count");
            spec.tau_grid = SweepSpec::log_grid(lo, hi, count);
        }
        if (sw.has("n_list")) {
            const auto& v = sw.raw("n_list");
            if (!v.is_array()) throw ConfigError("sweep.n_list", "expected an array of integers");
            spec.n_list.clear();
            for (const auto& e : v) {
                if (!e.is_number_integer()) throw ConfigError("sweep.n_list", "expected an array of integers");
                spec.n_list.push_back(e.get<int>());
            }
        } else {
            defaults.push_back("sweep.n_list");
        }
        if (sw.has("points_per_segment")) spec.points_per_segment = sw.integer("points_per_segment");
        else defaults.push_back("sweep.points_per_segment");
        sw.reject_unknown();
        spec.validate();
        resolved["sweep"] = {{"tau_grid", spec.tau_grid},
                             {"n_list", spec.n_list},
                             {"points_per_segment", spec.points_per_segment}};
    } else if (top.has("sweep")) {
        throw ConfigError("sweep", "only valid for the sweep subcommand");
    }

    if (command == Subcommand::Kernels) {
        nlohmann::json empty = nlohmann::json::object();
        const bool given = top.has("kernels");
        const auto& block = given ? top.raw("kernels") : empty;
        detail::ObjectReader kr(block, "kernels");
        auto& ks = rc.kernels;
        if (kr.has("t_grid")) {
            ks.t_grid = detail::number_list(kr.raw("t_grid"), "kernels.t_grid");
            for (double t : ks.t_grid)
                if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("kernels.t_grid", "values must be >= 0");
        } else {
            const auto& sched = sc.schedule;
            const auto n = static_cast<long>(std::floor(sched.t_max / sched.dt + 1e-9));
            for (long i = 0; i <= n; ++i) ks.t_grid.push_back(static_cast<double>(i) * sched.dt);
            defaults.push_back("kernels.t_grid");
        }
        if (kr.has("max_lag")) ks.max_lag = kr.integer("max_lag");
        else defaults.push_back("kernels.max_lag");
        if (ks.max_lag < 0) throw ConfigError("kernels.max_lag", "must be >= 0");
        if (ks.max_lag > MeasurementSchedule::kHardCap)
            throw ComplexityError("kernels.max_lag exceeds the hard cap of " +
                                  std::to_string(MeasurementSchedule::kHardCap));
        kr.reject_unknown();
        resolved["kernels"] = {{"t_grid", ks.t_grid}, {"max_lag", ks.max_lag}};
    } else if (top.has("kernels")) {
        throw ConfigError("kernels", "only valid for the kernels subcommand");
    }

    if (command == Subcommand::OracleCheck) {
        top.require("oracle");
        detail::ObjectReader orc(top.raw("oracle"), "oracle");
        auto& os = rc.oracle;
        orc.require("modes");
        const auto& modes = orc.raw("modes");
        if (!modes.is_array() || modes.empty()) throw ConfigError("oracle.modes", "expected a non-empty array");
        nlohmann::json echo = nlohmann::json::array();
        for (std::size_t r = 0; r < modes.size(); ++r) {
            const std::string base = "oracle.modes[" + std::to_string(r) + "]";
            detail::ObjectReader mr(modes[r], base);
            mr.require("g");
            mr.require("omega");
            BathMode m;
            m.coupling = detail::complex_value(mr.raw("g"), mr.field("g"));
            m.frequency = mr.number("omega");
            mr.reject_unknown();
            os.bath.modes.push_back(m);
            echo.push_back({{"g", detail::complex_json(m.coupling)}, {"omega", m.frequency}});
        }
        if (orc.has("n_max")) os.bath.n_max = orc.integer("n_max");
        else defaults.push_back("oracle.n_max");
        if (orc.has("tolerance")) os.tolerance = orc.number("tolerance");
        else defaults.push_back("oracle.tolerance");
        if (!(os.tolerance > 0.0)) throw ConfigError("oracle.tolerance", "must be > 0");
        if (orc.has("reset_environment")) os.reset_environment = orc.boolean("reset_environment");
        else defaults.push_back("oracle.reset_environment");
        orc.reject_unknown();
        try {
            os.bath.validate();
        } catch (const ConfigError& e) {
            throw ConfigError("oracle." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
        }
        resolved["oracle"] = {{"modes", echo},
                              {"n_max", os.bath.n_max},
                              {"tolerance", os.tolerance},
                              {"reset_environment", os.reset_environment}};
    } else if (top.has("oracle")) {
        throw ConfigError("oracle", "only valid for the oracle-check subcommand");
    }

    top.reject_unknown();

    sc.meta = {{"subcommand", to_string(command)},
               {"config", resolved},
               {"defaults_applied", defaults},
               {"provenance", kDefaultsNote}};
    return rc;
}

}  // namespace dephasim
