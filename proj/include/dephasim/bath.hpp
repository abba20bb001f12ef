#pragma once

// Environment kernels of the two-qubit pure-dephasing model.
//
// Every kernel is a sum over bath modes sum_r |g_r|^2 w(omega_r) with a
// kernel-specific weight w. For a continuous bath the sum becomes the
// integral int_0^inf J(omega) w(omega) domega, evaluated by panelled
// adaptive Gauss-Kronrod quadrature. Weights are written in product form
// (1 - cos x = 2 sin^2(x/2), etc.) so that they stay accurate as omega -> 0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dephasim/error.hpp"
#include "dephasim/quadrature.hpp"

namespace dephasim {

enum class Cutoff { Exponential, Hard };

inline std::string to_string(Cutoff c) { return c == Cutoff::Exponential ? "exponential" : "hard"; }

/// Ohmic-family spectral density J(w) = G w^s wc^(1-s) f(w/wc).
struct SpectralDensity {
    double coupling = 1.0;          // G
    double ohmicity = 1.0;          // s
    double cutoff_frequency = 1.0;  // omega_c
    Cutoff cutoff = Cutoff::Exponential;

    /// Exponential cutoffs are integrated up to this many multiples of omega_c.
    static constexpr double kExponentialSpan = 60.0;

    void validate() const {
        if (!(coupling > 0.0) || !std::isfinite(coupling)) throw ConfigError("G", "must be > 0");
        if (!(ohmicity > 0.0) || !std::isfinite(ohmicity)) throw ConfigError("s", "must be > 0");
        if (!(cutoff_frequency > 0.0) || !std::isfinite(cutoff_frequency))
            throw ConfigError("omega_c", "must be > 0");
    }

    double operator()(double omega) const {
        if (!(omega > 0.0)) return 0.0;
        const double x = omega / cutoff_frequency;
        const double base = coupling * cutoff_frequency * std::pow(x, ohmicity);
        if (cutoff == Cutoff::Hard) return omega <= cutoff_frequency ? base : 0.0;
        return base * std::exp(-x);
    }

    /// Upper end of the integration domain.
    double upper_limit() const {
        return cutoff == Cutoff::Hard ? cutoff_frequency : kExponentialSpan * cutoff_frequency;
    }
};

/// Inverse temperature; `infinity` is the zero-temperature sentinel.
struct BathParams {
    double beta = 100.0;

    static constexpr double infinity = std::numeric_limits<double>::infinity();

    static BathParams zero_temperature() { return BathParams{infinity}; }

    bool is_zero_temperature() const { return std::isinf(beta) && beta > 0.0; }

    void validate() const {
        if (!(beta > 0.0) || std::isnan(beta)) throw ConfigError("beta", "must be > 0 or \"inf\"");
    }

    /// coth(beta*omega/2), series-expanded for beta*omega < 1e-4.
    double coth_half(double omega) const {
        if (is_zero_temperature()) return 1.0;
        const double x = beta * omega;
        if (x < 1e-4) return 2.0 / x + x / 6.0;
        if (x > 80.0) return 1.0;
        return 1.0 / std::tanh(0.5 * x);
    }
};

struct BathMode {
    std::complex<double> coupling;  // g_r
    double frequency = 1.0;         // omega_r
};

struct DiscreteBath {
    std::vector<BathMode> modes;
    int n_max = 20;  // Fock truncation per mode (oracle only)

    void validate() const {
        if (modes.empty()) throw ConfigError("modes", "discrete bath needs at least one mode");
        for (std::size_t r = 0; r < modes.size(); ++r) {
            if (!(modes[r].frequency > 0.0) || !std::isfinite(modes[r].frequency))
                throw ConfigError("modes[" + std::to_string(r) + "].omega", "must be > 0");
            if (!std::isfinite(std::abs(modes[r].coupling)))
                throw ConfigError("modes[" + std::to_string(r) + "].g", "must be finite");
        }
        if (n_max < 2) throw ConfigError("n_max", "must be >= 2");
    }
};

/// Either backend for the kernels: a spectral density (quadrature) or an
/// explicit mode list (direct summation), together with the temperature.
class BathDescriptor {
public:
    struct Continuous {
        SpectralDensity density;
        BathParams thermal;
    };
    struct Discrete {
        DiscreteBath bath;
        BathParams thermal;
    };

    static BathDescriptor continuous(SpectralDensity sd, BathParams bp) {
        sd.validate();
        bp.validate();
        return BathDescriptor(Continuous{sd, bp});
    }
    static BathDescriptor discrete(DiscreteBath db, BathParams bp) {
        db.validate();
        bp.validate();
        return BathDescriptor(Discrete{std::move(db), bp});
    }

    bool is_continuous() const { return std::holds_alternative<Continuous>(rep_); }
    const BathParams& thermal() const {
        return std::visit([](const auto& b) -> const BathParams& { return b.thermal; }, rep_);
    }
    const Continuous* as_continuous() const { return std::get_if<Continuous>(&rep_); }
    const Discrete* as_discrete() const { return std::get_if<Discrete>(&rep_); }

    /// sum_r |g_r|^2 w(omega_r), or its spectral-density integral.
    /// `rate` bounds the oscillation frequency of w in omega; w ~ omega^power
    /// at the origin, where coth(beta omega/2) lowers the power by one at
    /// finite temperature when `thermal_weight` is set.
    template <class W>
    double sum_modes(W&& w, double rate, int power, bool thermal_weight) const {
        if (const auto* d = as_discrete()) {
            double total = 0.0;
            double comp = 0.0;
            for (const auto& m : d->bath.modes) {
                const double term = std::norm(m.coupling) * w(m.frequency);
                const double t = total + term;
                comp += std::abs(total) >= std::abs(term) ? (total - t) + term : (term - t) + total;
                total = t;
            }
            return total + comp;
        }
        const auto& c = std::get<Continuous>(rep_);
        quadrature::Domain dom;
        dom.upper = c.density.upper_limit();
        dom.max_panel = c.density.cutoff_frequency;
        dom.oscillation_rate = rate;
        const bool warm = thermal_weight && !c.thermal.is_zero_temperature();
        dom.endpoint_exponent = c.density.ohmicity + power + (warm ? 0.0 : 1.0);
        const auto& sd = c.density;
        return quadrature::integrate([&](double omega) { return sd(omega) * w(omega); }, dom);
    }

private:
    template <class T>
    explicit BathDescriptor(T rep) : rep_(std::move(rep)) {}

    std::variant<Continuous, Discrete> rep_;
};

namespace detail {

inline double sin_minus_x(double x) {
    if (std::abs(x) < 0.05) {
        const double x2 = x * x;
        return -x * x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 / 362880.0)));
    }
    return std::sin(x) - x;
}

inline double sin_half_sq(double x) {
    const double s = std::sin(0.5 * x);
    return s * s;
}

inline void require_time(double t, const char* name) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError(name, "must be a finite time >= 0");
}

inline void require_index(int p, const char* name) {
    if (p < 1) throw ConfigError(name, "index must be >= 1");
}

}  // namespace detail

/// gamma(t) = sum_r 4|g_r|^2/w_r^2 (1 - cos w_r t) coth(beta w_r/2).
inline double gamma_t(const BathDescriptor& bath, double t) {
    detail::require_time(t, "t");
    if (t == 0.0) return 0.0;
    const auto& bp = bath.thermal();
    return bath.sum_modes(
        [&](double w) { return 8.0 * detail::sin_half_sq(w * t) / (w * w) * bp.coth_half(w); }, t, 0,
        true);
}

/// Delta(t) = sum_r 4|g_r|^2/w_r^2 (sin w_r t - w_r t). Temperature independent.
inline double delta_t(const BathDescriptor& bath, double t) {
    detail::require_time(t, "t");
    if (t == 0.0) return 0.0;
    return bath.sum_modes([&](double w) { return 4.0 * detail::sin_minus_x(w * t) / (w * w); }, t,
                          1, false);
}

/// mu_{pp'}(tau) = sum_r 4|g_r|^2/w_r^2 sin[(p-p') w_r tau] (1 - cos w_r tau).
inline double mu_pair(const BathDescriptor& bath, int p, int p_prime, double tau) {
    detail::require_index(p, "p");
    detail::require_index(p_prime, "p_prime");
    detail::require_time(tau, "tau");
    const int lag = p - p_prime;
    if (lag == 0 || tau == 0.0) return 0.0;
    const int a = std::abs(lag);
    const double value = bath.sum_modes(
        [&](double w) {
            return 8.0 * std::sin(a * w * tau) * detail::sin_half_sq(w * tau) / (w * w);
        },
        (a + 1) * tau, 1, false);
    return lag > 0 ? value : -value;
}

/// gamma_{pp'}(tau) = sum_r 4|g_r|^2/w_r^2 (1 - cos w_r tau) cos[(p-p') w_r tau] coth(beta w_r/2).
inline double gamma_pair(const BathDescriptor& bath, int p, int p_prime, double tau) {
    detail::require_index(p, "p");
    detail::require_index(p_prime, "p_prime");
    detail::require_time(tau, "tau");
    const int a = std::abs(p - p_prime);
    if (a == 0) return gamma_t(bath, tau);
    if (tau == 0.0) return 0.0;
    const auto& bp = bath.thermal();
    return bath.sum_modes(
        [&](double w) {
            return 8.0 * detail::sin_half_sq(w * tau) * std::cos(a * w * tau) / (w * w) *
                   bp.coth_half(w);
        },
        (a + 1) * tau, 0, true);
}

namespace detail {

inline void require_segment(int p, int n, double t_prime, double tau) {
    require_index(p, "p");
    if (!(p <= n - 1)) throw ConfigError("n", "requires 1 <= p <= n - 1");
    require_time(t_prime, "t_prime");
    require_time(tau, "tau");
}

}  // namespace detail

/// epsilon_{p,N}(t', tau): the thermal cross term between the p-th measured
/// segment and the running segment,
///   4 sum_r |g_r|^2/w_r^2 coth(beta w_r/2) { cos[(p-N) w tau] - cos[(p-N+1) w tau]
///     - cos[(p-N) w tau - w t'] + cos[(p-N+1) w tau - w t'] },
/// evaluated as 16 sin(w t'/2) sin(w tau/2) cos[(p-N+1/2) w tau - w t'/2].
inline double epsilon_pn(const BathDescriptor& bath, int p, int n, double t_prime, double tau) {
    detail::require_segment(p, n, t_prime, tau);
    if (t_prime == 0.0 || tau == 0.0) return 0.0;
    const double shift = (p - n) + 0.5;
    const auto& bp = bath.thermal();
    return bath.sum_modes(
        [&](double w) {
            return 16.0 * std::sin(0.5 * w * t_prime) * std::sin(0.5 * w * tau) *
                   std::cos(shift * w * tau - 0.5 * w * t_prime) / (w * w) * bp.coth_half(w);
        },
        std::abs(shift) * tau + 0.5 * tau + t_prime, 0, true);
}

/// sigma_{p,N}(t', tau) carries an explicit factor i; this returns the real s
/// with sigma = i*s, where
///   s = 2 sum_r |g_r|^2/w_r^2 { -sin[w (p-N) tau - w t'] - sin[w (p-N+1) tau]
///       + sin[w (p-N) tau] + sin[w (p-N+1) tau - w t'] }.
inline double sigma_pn(const BathDescriptor& bath, int p, int n, double t_prime, double tau) {
    detail::require_segment(p, n, t_prime, tau);
    if (t_prime == 0.0 || tau == 0.0) return 0.0;
    const double shift = (p - n) + 0.5;
    return bath.sum_modes(
        [&](double w) {
            return 8.0 * std::sin(0.5 * w * t_prime) * std::sin(0.5 * w * tau) *
                   std::sin(shift * w * tau - 0.5 * w * t_prime) / (w * w);
        },
        std::abs(shift) * tau + 0.5 * tau + t_prime, 1, false);
}

/// Midpoint discretisation of J on n_modes uniform bins of (0, omega_max]:
/// omega_r = (r + 1/2) d, |g_r|^2 = J(omega_r) d.
inline DiscreteBath discretize_spectral_density(const SpectralDensity& sd, int n_modes,
                                                double omega_max, int n_max = 20) {
    sd.validate();
    if (n_modes < 1) throw ConfigError("n_modes", "must be >= 1");
    if (!(omega_max > 0.0) || !std::isfinite(omega_max))
        throw ConfigError("omega_max", "must be > 0");
    DiscreteBath out;
    out.n_max = n_max;
    out.modes.reserve(static_cast<std::size_t>(n_modes));
    const double d = omega_max / n_modes;
    for (int r = 0; r < n_modes; ++r) {
        const double w = (r + 0.5) * d;
        out.modes.push_back({std::sqrt(sd(w) * d), w});
    }
    return out;
}

/// Kernels of the running segment after `n_completed` measurements, at
/// offset t' into the segment. epsilon[j-1] and varsigma[j-1] hold
/// epsilon_{j,N}(t', tau) and sigma_{j,N}(t', tau)/i for j = 1..N-1.
struct SegmentKernels {
    double t_prime = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    std::vector<double> epsilon;
    std::vector<double> varsigma;
};

/// Interval kernels for a fixed (bath, tau, maximum measurement count).
/// Lag-indexed: gamma_lag[L] = gamma_{p+L,p}(tau), mu_lag[L] = mu_{p+L,p}(tau)
/// for L = 1..max_measurements-1 (entry 0 is gamma(tau) and 0 respectively).
class KernelCache {
public:
    KernelCache(BathDescriptor bath, double tau, int max_measurements)
        : bath_(std::move(bath)), tau_(tau), max_measurements_(max_measurements) {
        if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau", "must be > 0");
        if (max_measurements < 0) throw ConfigError("n_measurements", "must be >= 0");
        gamma_tau_ = gamma_t(bath_, tau_);
        delta_tau_ = delta_t(bath_, tau_);
        const auto n = static_cast<std::size_t>(std::max(max_measurements, 1));
        gamma_lag_.assign(n, 0.0);
        mu_lag_.assign(n, 0.0);
        gamma_lag_[0] = gamma_tau_;
        for (int lag = 1; lag < max_measurements; ++lag) {
            gamma_lag_[static_cast<std::size_t>(lag)] = gamma_pair(bath_, lag + 1, 1, tau_);
            mu_lag_[static_cast<std::size_t>(lag)] = mu_pair(bath_, lag + 1, 1, tau_);
        }
    }

    const BathDescriptor& bath() const { return bath_; }
    double tau() const { return tau_; }
    int max_measurements() const { return max_measurements_; }
    double gamma_tau() const { return gamma_tau_; }
    double delta_tau() const { return delta_tau_; }
    double gamma_lag(int lag) const { return gamma_lag_.at(static_cast<std::size_t>(lag)); }
    double mu_lag(int lag) const { return mu_lag_.at(static_cast<std::size_t>(lag)); }

    SegmentKernels segment(int n_completed, double t_prime) const {
        if (n_completed < 0 || n_completed > max_measurements_)
            throw ConfigError("n_measurements", "segment outside the cached range");
        SegmentKernels k;
        k.t_prime = t_prime;
        k.gamma = gamma_t(bath_, t_prime);
        k.delta = delta_t(bath_, t_prime);
        const int n = n_completed + 1;
        k.epsilon.resize(static_cast<std::size_t>(n_completed));
        k.varsigma.resize(static_cast<std::size_t>(n_completed));
        for (int j = 1; j <= n_completed; ++j) {
            k.epsilon[static_cast<std::size_t>(j - 1)] = epsilon_pn(bath_, j, n, t_prime, tau_);
            k.varsigma[static_cast<std::size_t>(j - 1)] = sigma_pn(bath_, j, n, t_prime, tau_);
        }
        return k;
    }

private:
    BathDescriptor bath_;
    double tau_;
    int max_measurements_;
    double gamma_tau_ = 0.0;
    double delta_tau_ = 0.0;
    std::vector<double> gamma_lag_;
    std::vector<double> mu_lag_;
};

}  // namespace dephasim
