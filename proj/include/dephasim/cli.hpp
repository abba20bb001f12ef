#pragma once

// Command-line front end: subcommand dispatch and the exit-code contract
// (0 ok, 2 config, 3 I/O, 4 numerical, 5 complexity refusal).

#include <array>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dephasim/bath.hpp"
#include "dephasim/config.hpp"
#include "dephasim/entanglement.hpp"
#include "dephasim/error.hpp"
#include "dephasim/experiments.hpp"
#include "dephasim/oracle.hpp"
#include "dephasim/qubits.hpp"

namespace dephasim {

struct CliOptions {
    Subcommand command = Subcommand::Trajectory;
    std::string config_path;
    std::string out_path;  // empty: the output stream
    RecordFormat format = RecordFormat::Csv;
    int verbosity = 0;
};

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(path, "cannot open for reading");
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError(path, "read failed");
    return text;
}

inline std::string quoted(const std::string& s) {
    return nlohmann::json(s).dump();
}

/// One-line diagnostic: kind, exit code, field or path when known, message.
inline std::string error_line(const std::exception& e, int code) {
    std::ostringstream line;
    line << "dephasim: error";
    if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
        line << " kind=config field=" << quoted(c->field());
    } else if (const auto* io = dynamic_cast<const IoError*>(&e)) {
        line << " kind=io path=" << quoted(io->path());
    } else if (dynamic_cast<const ComplexityError*>(&e)) {
        line << " kind=complexity";
    } else {
        line << " kind=numerical";
    }
    line << " exit=" << code << " message=" << quoted(e.what());
    return line.str();
}

class StageLog {
public:
    StageLog(std::ostream& err, int verbosity) : err_(err), verbosity_(verbosity) {}
    void operator()(const std::string& stage) const {
        if (verbosity_ <= 0) return;
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start_)
                            .count();
        err_ << "dephasim: [" << ms << " ms] " << stage << '\n';
    }

private:
    std::ostream& err_;
    int verbosity_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void deliver(const std::string& text, const CliOptions& opt, std::ostream& out) {
    if (opt.out_path.empty()) out << text;
    else write_file(opt.out_path, text);
}

inline std::string kernel_table(const RunConfig& rc) {
    const auto& sc = rc.scenario;
    const auto bath = BathDescriptor::continuous(sc.density, sc.thermal);
    const double tau = sc.schedule.tau;
    const int lags = rc.kernels.max_lag;
    std::ostringstream out;
    write_meta_line(out, sc.meta);
    out << "kernel_name,p,p_prime_or_N,t_or_tau,value\n";
    auto row = [&](const char* name, int p, int q, double t, double v) {
        out << name << ',' << p << ',' << q << ',' << format_double(t) << ',' << format_double(v) << '\n';
    };
    for (double t : rc.kernels.t_grid) row("gamma", 0, 0, t, gamma_t(bath, t));
    for (double t : rc.kernels.t_grid) row("delta", 0, 0, t, delta_t(bath, t));
    for (int lag = 0; lag <= lags; ++lag) row("mu", lag + 1, 1, tau, mu_pair(bath, lag + 1, 1, tau));
    for (int lag = 0; lag <= lags; ++lag) row("gamma_pair", lag + 1, 1, tau, gamma_pair(bath, lag + 1, 1, tau));
    for (int n = 2; n <= lags + 1; ++n)
        for (int p = 1; p < n; ++p)
            for (double t : rc.kernels.t_grid)
                if (t <= tau) row("epsilon", p, n, t, epsilon_pn(bath, p, n, t, tau));
    for (int n = 2; n <= lags + 1; ++n)
        for (int p = 1; p < n; ++p)
            for (double t : rc.kernels.t_grid)
                if (t <= tau) row("sigma", p, n, t, sigma_pn(bath, p, n, t, tau));
    return out.str();
}

struct OracleCheckResult {
    std::vector<double> times;
    std::vector<int> segments;
    std::vector<double> deviations;
    std::vector<double> c_oracle;
    std::vector<double> c_model;
    double max_deviation = 0.0;
    double probability_product = 1.0;
    double normalization = 1.0;
    std::vector<std::string> warnings;
    int dimension = 0;
};

/// Oracle trajectory against the closed forms evaluated on the same modes.
inline OracleCheckResult oracle_check(const RunConfig& rc) {
    const auto& sc = rc.scenario;
    const auto& os = rc.oracle;
    const auto psi = sc.state();
    const auto& sched = sc.schedule;
    const auto traj = oracle::oracle_trajectory(psi, sc.system, os.bath, sc.thermal, sched,
                                                os.reset_environment);
    const auto bath = BathDescriptor::discrete(os.bath, sc.thermal);
    const KernelCache cache(bath, sched.tau, sched.n_measurements);
    std::vector<std::unique_ptr<TrackedPropagator>> props;
    for (int n = 0; n <= sched.n_measurements; ++n)
        props.push_back(std::make_unique<TrackedPropagator>(psi, sc.system, cache, n));

    OracleCheckResult r;
    r.warnings = traj.warnings;
    r.dimension = 4;
    for (std::size_t m = 0; m < os.bath.modes.size(); ++m) r.dimension *= os.bath.n_max;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const auto pos = sched.locate(traj.times[i]);
        const DensityMatrix4 model =
            os.reset_environment
                ? evolve_reset(psi, sc.system, bath, sched, traj.times[i])
                : props[static_cast<std::size_t>(pos.n_completed)]->at(pos.t_prime);
        const double dev = (model - traj.states[i]).cwiseAbs().maxCoeff();
        r.times.push_back(traj.times[i]);
        r.segments.push_back(traj.segments[i]);
        r.deviations.push_back(dev);
        r.c_oracle.push_back(traj.concurrences[i]);
        r.c_model.push_back(concurrence(model).value);
        r.max_deviation = std::max(r.max_deviation, dev);
    }
    for (double p : traj.probabilities) r.probability_product *= p;
    r.normalization = os.reset_environment ? r.probability_product : props.back()->normalization();
    return r;
}

inline std::string oracle_table(const OracleCheckResult& r, const nlohmann::json& meta) {
    std::ostringstream out;
    write_meta_line(out, meta);
    out << "t,segment,c_oracle,c_model,max_abs_deviation\n";
    for (std::size_t i = 0; i < r.times.size(); ++i)
        out << format_double(r.times[i]) << ',' << r.segments[i] << ',' << format_double(r.c_oracle[i])
            << ',' << format_double(r.c_model[i]) << ',' << format_double(r.deviations[i]) << '\n';
    return out.str();
}

inline int dispatch(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    const StageLog log(err, opt.verbosity);
    log("reading " + opt.config_path);
    const RunConfig rc = parse_config(read_file(opt.config_path), opt.command);
    log("config resolved for " + to_string(opt.command));

    switch (opt.command) {
        case Subcommand::Trajectory: {
            const auto rec = run_trajectory(rc.scenario);
            log("trajectory: " + std::to_string(rec.rows.size()) + " points");
            deliver(render(rec, opt.format), opt, out);
            break;
        }
        case Subcommand::Sweep: {
            const auto rec = run_interval_sweep(rc.scenario, rc.sweep);
            log("sweep: " + std::to_string(rec.rows.size()) + " cells");
            deliver(render(rec, opt.format), opt, out);
            break;
        }
        case Subcommand::Kernels: {
            if (opt.format == RecordFormat::Json)
                throw ConfigError("format", "kernels output is CSV only");
            deliver(kernel_table(rc), opt, out);
            log("kernels written");
            break;
        }
        case Subcommand::OracleCheck: {
            const auto r = oracle_check(rc);
            log("oracle-check: " + std::to_string(r.times.size()) + " points, dimension " +
                std::to_string(r.dimension));
            for (const auto& w : r.warnings) err << "dephasim: warning: " << w << '\n';
            const double z_dev = std::abs(r.probability_product - r.normalization);
            const bool ok = r.max_deviation <= rc.oracle.tolerance;
            if (!opt.out_path.empty()) write_file(opt.out_path, oracle_table(r, rc.scenario.meta));
            out << "points=" << r.times.size() << " dimension=" << r.dimension << '\n'
                << "max_deviation=" << format_double(r.max_deviation)
                << " tolerance=" << format_double(rc.oracle.tolerance) << '\n'
                << "probability_product=" << format_double(r.probability_product)
                << " normalization_z=" << format_double(r.normalization)
                << " difference=" << format_double(z_dev) << '\n'
                << "status=" << (ok ? "PASS" : "FAIL") << '\n';
            if (!ok)
                throw NumericalError("oracle deviation " + format_double(r.max_deviation) +
                                     " exceeds tolerance " + format_double(rc.oracle.tolerance));
            break;
        }
    }
    log("done");
    return 0;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-qubit pure-dephasing simulator under repeated projective measurements", "dephasim"};
    app.require_subcommand(1);

    const std::pair<const char*, Subcommand> subs[] = {
        {"trajectory", Subcommand::Trajectory},
        {"sweep", Subcommand::Sweep},
        {"kernels", Subcommand::Kernels},
        {"oracle-check", Subcommand::OracleCheck},
    };
    const char* help[] = {
        "concurrence under reset and tracked environments",
        "maximum-concurrence ratios over a measurement-interval grid",
        "decoherence and correlation kernels as CSV",
        "compare the closed forms against exact diagonalisation",
    };
    // One option block per subcommand: CLI11 resets bound variables of
    // subcommands that were not selected.
    constexpr std::size_t n_subs = std::size(subs);
    std::array<CliOptions, n_subs> opts;
    std::array<std::string, n_subs> formats;
    std::array<CLI::App*, n_subs> handles{};
    for (std::size_t i = 0; i < n_subs; ++i) {
        auto* sub = app.add_subcommand(subs[i].first, help[i]);
        auto& o = opts[i];
        o.command = subs[i].second;
        formats[i] = "csv";
        sub->add_option("--config", o.config_path, "JSON configuration document")->required();
        sub->add_option("--out", o.out_path, "output file (default: standard output)");
        sub->add_option("--format", formats[i], "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_flag("-v,--verbose", o.verbosity, "log one line per stage");
        handles[i] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "dephasim: error kind=usage exit=2 message=" << detail::quoted(e.what()) << '\n';
        return 2;
    }
    CliOptions opt;
    for (std::size_t i = 0; i < n_subs; ++i)
        if (handles[i]->parsed()) {
            opt = opts[i];
            opt.format = formats[i] == "json" ? RecordFormat::Json : RecordFormat::Csv;
        }

    try {
        return detail::dispatch(opt, out, err);
    } catch (const Error& e) {
        err << detail::error_line(e, e.exit_code()) << '\n';
        return e.exit_code();
    } catch (const std::bad_alloc& e) {
        err << detail::error_line(ComplexityError("out of memory"), 5) << '\n';
        return 5;
    } catch (const std::exception& e) {
        err << detail::error_line(e, 4) << '\n';
        return 4;
    }
}

}  // namespace dephasim
