#pragma once

// Scenario drivers: concurrence trajectories for the reset and tracked
// environments, measurement-interval sweeps, and record serialisation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dephasim/bath.hpp"
#include "dephasim/entanglement.hpp"
#include "dephasim/error.hpp"
#include "dephasim/parallel.hpp"
#include "dephasim/qubits.hpp"

namespace dephasim {

enum class Preparation { ProductX, Bell, Custom };
enum class EvolutionMode { Reset, Tracked, Both };

struct ScenarioConfig {
    SpectralDensity density;
    BathParams thermal;
    SystemParams system;
    MeasurementSchedule schedule;
    Preparation preparation = Preparation::ProductX;
    TwoQubitPureState custom_state;
    EvolutionMode mode = EvolutionMode::Both;
    bool include_rho = false;
    nlohmann::json meta;  // resolved-config echo copied into every record

    TwoQubitPureState state() const {
        switch (preparation) {
            case Preparation::ProductX: return state_product_x();
            case Preparation::Bell: return state_bell();
            case Preparation::Custom: break;
        }
        return custom_state;
    }

    bool wants_reset() const { return mode != EvolutionMode::Tracked; }
    bool wants_tracked() const { return mode != EvolutionMode::Reset; }

    void validate() const {
        density.validate();
        thermal.validate();
        system.validate();
        schedule.validate();
        state().validate();
    }
};

struct TrajectoryRecord {
    struct Row {
        double t = 0.0;
        int segment = 0;
        double c_reset = std::numeric_limits<double>::quiet_NaN();
        double c_tracked = std::numeric_limits<double>::quiet_NaN();
        std::vector<double> rho;  // re/im pairs, row-major, when requested
    };
    std::vector<Row> rows;
    bool has_rho = false;
    nlohmann::json meta;
};

struct SweepRecord {
    struct Row {
        double tau = 0.0;
        int n_measurements = 0;
        double c_max_tracked = 0.0;
        double c_reset_max = 0.0;
        double ratio = 0.0;
    };
    std::vector<Row> rows;
    nlohmann::json meta;
};

namespace detail {

/// Grid index -> (segment, t'). When tau is an integer multiple of dt the
/// position is computed from the index alone, which makes the reset series
/// exactly tau-periodic on the grid.
class GridLocator {
public:
    explicit GridLocator(const MeasurementSchedule& s) : sched_(s) {
        const double m = s.tau / s.dt;
        const double rounded = std::round(m);
        if (rounded >= 1.0 && std::abs(m - rounded) <= 1e-9 * m)
            steps_per_segment_ = static_cast<long>(rounded);
    }

    long points() const {
        return static_cast<long>(std::floor(sched_.t_max / sched_.dt + 1e-9)) + 1;
    }

    double time(long i) const { return static_cast<double>(i) * sched_.dt; }

    SegmentPosition locate(long i) const {
        if (steps_per_segment_ == 0) return sched_.locate(time(i));
        long seg = i / steps_per_segment_;
        long rem = i % steps_per_segment_;
        if (seg > sched_.n_measurements) {
            if (seg == sched_.n_measurements + 1 && rem == 0) {
                seg = sched_.n_measurements;
                rem = steps_per_segment_;
            } else {
                throw ConfigError("t", "lies beyond the last measured segment");
            }
        }
        return {static_cast<int>(seg), static_cast<double>(rem) * sched_.dt};
    }

private:
    MeasurementSchedule sched_;
    long steps_per_segment_ = 0;
};

inline std::vector<double> flatten(const DensityMatrix4& rho) {
    std::vector<double> out;
    out.reserve(32);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            out.push_back(rho(i, j).real());
            out.push_back(rho(i, j).imag());
        }
    return out;
}

}  // namespace detail

/// Concurrence of both evolutions on t = 0, dt, ..., t_max. With include_rho
/// the row also carries the tracked state (reset state in Reset mode).
inline TrajectoryRecord run_trajectory(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto bath = BathDescriptor::continuous(cfg.density, cfg.thermal);
    const auto psi = cfg.state();
    const auto& sched = cfg.schedule;
    const detail::GridLocator grid(sched);

    std::optional<KernelCache> cache;
    std::vector<std::unique_ptr<TrackedPropagator>> propagators;
    if (cfg.wants_tracked()) {
        cache.emplace(bath, sched.tau, sched.n_measurements);
        for (int n = 0; n <= sched.n_measurements; ++n)
            propagators.push_back(std::make_unique<TrackedPropagator>(psi, cfg.system, *cache, n));
    }

    TrajectoryRecord record;
    record.has_rho = cfg.include_rho;
    record.meta = cfg.meta;
    record.rows.resize(static_cast<std::size_t>(grid.points()));
    parallel_for(record.rows.size(), [&](std::size_t i) {
        const auto pos = grid.locate(static_cast<long>(i));
        auto& row = record.rows[i];
        row.t = grid.time(static_cast<long>(i));
        row.segment = pos.n_completed;
        DensityMatrix4 shown;
        if (cache) {
            const SegmentKernels k = cache->segment(pos.n_completed, pos.t_prime);
            const DensityMatrix4 tracked = propagators[static_cast<std::size_t>(pos.n_completed)]->at(k);
            row.c_tracked = concurrence(tracked).value;
            shown = tracked;
            if (cfg.wants_reset()) {
                const DensityMatrix4 reset = detail::assemble_segment(
                    psi, cfg.system.omega_0, pos.t_prime, k.gamma, k.delta,
                    {Complex(1.0), Complex(1.0), Complex(1.0)});
                row.c_reset = concurrence(reset).value;
            }
        } else {
            const DensityMatrix4 reset = detail::assemble_segment(
                psi, cfg.system.omega_0, pos.t_prime, gamma_t(bath, pos.t_prime),
                delta_t(bath, pos.t_prime), {Complex(1.0), Complex(1.0), Complex(1.0)});
            row.c_reset = concurrence(reset).value;
            shown = reset;
        }
        if (cfg.include_rho) row.rho = detail::flatten(shown);
    });
    return record;
}

struct SweepSpec {
    std::vector<double> tau_grid;
    std::vector<int> n_list{1, 2, 3};
    int points_per_segment = 200;

    /// `count` log-spaced values over [lo, hi].
    static std::vector<double> log_grid(double lo, double hi, int count) {
        if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("sweep.tau_min", "needs 0 < tau_min <= tau_max");
        if (count < 1) throw ConfigError("sweep.tau_count", "must be >= 1");
        std::vector<double> g(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
            g[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
        }
        return g;
    }

    void validate() const {
        if (tau_grid.empty()) throw ConfigError("sweep.tau_grid", "must not be empty");
        for (std::size_t i = 0; i < tau_grid.size(); ++i) {
            if (!(tau_grid[i] > 0.0) || !std::isfinite(tau_grid[i]))
                throw ConfigError("sweep.tau_grid", "values must be > 0");
            if (i > 0 && !(tau_grid[i] > tau_grid[i - 1]))
                throw ConfigError("sweep.tau_grid", "must be strictly ascending");
        }
        if (n_list.empty()) throw ConfigError("sweep.n_list", "must not be empty");
        for (int n : n_list)
            if (n < 1 || n > 3) throw ConfigError("sweep.n_list", "entries must be in {1, 2, 3}");
        if (points_per_segment < 2) throw ConfigError("sweep.points_per_segment", "must be >= 2");
    }
};

/// For each (tau, n): the largest tracked concurrence on the open segment
/// (n tau, (n+1) tau) after n measurements, the largest reset concurrence
/// on the same window, and their ratio. The preparation is always ProductX.
inline SweepRecord run_interval_sweep(const ScenarioConfig& tmpl, const SweepSpec& spec) {
    spec.validate();
    tmpl.density.validate();
    tmpl.thermal.validate();
    tmpl.system.validate();
    const auto bath = BathDescriptor::continuous(tmpl.density, tmpl.thermal);
    const auto psi = state_product_x();
    const int n_top = *std::max_element(spec.n_list.begin(), spec.n_list.end());

    SweepRecord record;
    record.meta = tmpl.meta;
    const std::size_t cells = spec.tau_grid.size();
    std::vector<std::vector<SweepRecord::Row>> per_tau(cells);
    parallel_for(cells, [&](std::size_t c) {
        const double tau = spec.tau_grid[c];
        const KernelCache cache(bath, tau, n_top);
        const double dt = tau / spec.points_per_segment;
        const int inner = spec.points_per_segment - 1;

        double reset_max = 0.0;
        std::vector<SegmentKernels> base(static_cast<std::size_t>(inner));
        for (int j = 1; j <= inner; ++j) {
            auto& k = base[static_cast<std::size_t>(j - 1)];
            k = cache.segment(0, j * dt);
            const DensityMatrix4 reset = detail::assemble_segment(
                psi, tmpl.system.omega_0, k.t_prime, k.gamma, k.delta,
                {Complex(1.0), Complex(1.0), Complex(1.0)});
            reset_max = std::max(reset_max, concurrence(reset).value);
        }
        if (!(reset_max > 0.0))
            throw NumericalError("reset concurrence never leaves zero at tau = " + std::to_string(tau));

        for (int n : spec.n_list) {
            const TrackedPropagator prop(psi, tmpl.system, cache, n);
            double tracked_max = 0.0;
            for (int j = 1; j <= inner; ++j) {
                SegmentKernels k = base[static_cast<std::size_t>(j - 1)];
                k.epsilon.resize(static_cast<std::size_t>(n));
                k.varsigma.resize(static_cast<std::size_t>(n));
                for (int p = 1; p <= n; ++p) {
                    k.epsilon[static_cast<std::size_t>(p - 1)] = epsilon_pn(bath, p, n + 1, k.t_prime, tau);
                    k.varsigma[static_cast<std::size_t>(p - 1)] = sigma_pn(bath, p, n + 1, k.t_prime, tau);
                }
                tracked_max = std::max(tracked_max, concurrence(prop.at(k)).value);
            }
            per_tau[c].push_back({tau, n, tracked_max, reset_max, tracked_max / reset_max});
        }
    });
    for (auto& rows : per_tau)
        for (auto& r : rows) record.rows.push_back(r);
    std::stable_sort(record.rows.begin(), record.rows.end(), [](const auto& a, const auto& b) {
        return a.tau != b.tau ? a.tau < b.tau : a.n_measurements < b.n_measurements;
    });
    return record;
}

enum class RecordFormat { Csv, Json };

namespace detail {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline nlohmann::json json_number(double v) {
    return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

inline double number_from_json(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline void write_meta_line(std::ostream& out, const nlohmann::json& meta) {
    if (!meta.is_null() && !meta.empty()) out << "# meta: " << meta.dump() << '\n';
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(path, "cannot open for writing");
    f << text;
    f.flush();
    if (!f) throw IoError(path, "write failed");
}

}  // namespace detail

inline std::string to_csv(const TrajectoryRecord& rec) {
    std::ostringstream out;
    detail::write_meta_line(out, rec.meta);
    out << "t,segment,c_reset,c_tracked";
    if (rec.has_rho)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) out << ",rho_re_" << i << j << ",rho_im_" << i << j;
    out << '\n';
    for (const auto& r : rec.rows) {
        out << detail::format_double(r.t) << ',' << r.segment << ',' << detail::format_double(r.c_reset)
            << ',' << detail::format_double(r.c_tracked);
        if (rec.has_rho)
            for (double v : r.rho) out << ',' << detail::format_double(v);
        out << '\n';
    }
    return out.str();
}

inline std::string to_csv(const SweepRecord& rec) {
    std::ostringstream out;
    detail::write_meta_line(out, rec.meta);
    out << "tau,n_measurements,c_max_tracked,c_reset_max,ratio\n";
    for (const auto& r : rec.rows)
        out << detail::format_double(r.tau) << ',' << r.n_measurements << ','
            << detail::format_double(r.c_max_tracked) << ',' << detail::format_double(r.c_reset_max)
            << ',' << detail::format_double(r.ratio) << '\n';
    return out.str();
}

inline nlohmann::json to_json(const TrajectoryRecord& rec) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rec.rows) {
        nlohmann::json row = {{"t", r.t},
                              {"segment", r.segment},
                              {"c_reset", detail::json_number(r.c_reset)},
                              {"c_tracked", detail::json_number(r.c_tracked)}};
        if (rec.has_rho) row["rho"] = r.rho;
        rows.push_back(std::move(row));
    }
    return {{"meta", rec.meta.is_null() ? nlohmann::json::object() : rec.meta}, {"rows", rows}};
}

inline nlohmann::json to_json(const SweepRecord& rec) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rec.rows)
        rows.push_back({{"tau", r.tau},
                        {"n_measurements", r.n_measurements},
                        {"c_max_tracked", r.c_max_tracked},
                        {"c_reset_max", r.c_reset_max},
                        {"ratio", r.ratio}});
    return {{"meta", rec.meta.is_null() ? nlohmann::json::object() : rec.meta}, {"rows", rows}};
}

inline TrajectoryRecord trajectory_from_json(const nlohmann::json& j) {
    TrajectoryRecord rec;
    rec.meta = j.at("meta");
    for (const auto& row : j.at("rows")) {
        TrajectoryRecord::Row r;
        r.t = row.at("t").get<double>();
        r.segment = row.at("segment").get<int>();
        r.c_reset = detail::number_from_json(row.at("c_reset"));
        r.c_tracked = detail::number_from_json(row.at("c_tracked"));
        if (row.contains("rho")) {
            r.rho = row.at("rho").get<std::vector<double>>();
            rec.has_rho = true;
        }
        rec.rows.push_back(std::move(r));
    }
    return rec;
}

inline SweepRecord sweep_from_json(const nlohmann::json& j) {
    SweepRecord rec;
    rec.meta = j.at("meta");
    for (const auto& row : j.at("rows"))
        rec.rows.push_back({row.at("tau").get<double>(), row.at("n_measurements").get<int>(),
                            row.at("c_max_tracked").get<double>(), row.at("c_reset_max").get<double>(),
                            row.at("ratio").get<double>()});
    return rec;
}

template <class Record>
std::string render(const Record& rec, RecordFormat format) {
    return format == RecordFormat::Csv ? to_csv(rec) : to_json(rec).dump(2) + "\n";
}

/// Writes the record to `path`. Output is byte-deterministic for a fixed record.
template <class Record>
void emit_records(const Record& rec, RecordFormat format, const std::string& path) {
    detail::write_file(path, render(rec, format));
}

}  // namespace dephasim
