#pragma once

// Brute-force kernel values for cross-checking the adaptive quadrature:
// composite Simpson on a million intervals in u, with omega = W u^q chosen
// so the integrand starts like u^3 at the origin, and
// weights written in terms of a(x) = 1 - e^{ix} rather than the product
// forms used by the library.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>

#include "dephasim/bath.hpp"

namespace reference {

using cplx = std::complex<long double>;

inline cplx one_minus_phase(long double x) {
    return cplx(0.0L, -2.0L * std::sin(x / 2.0L)) * std::exp(cplx(0.0L, x / 2.0L));
}

inline long double coth_half(const dephasim::BathParams& bp, long double w) {
    if (bp.is_zero_temperature()) return 1.0L;
    const long double x = static_cast<long double>(bp.beta) * w;
    if (x > 200.0L) return 1.0L;
    return std::cosh(x / 2.0L) / std::sinh(x / 2.0L);
}

inline long double sin_minus_x(long double x) {
    if (std::fabs(x) < 1e-2L) {
        long double term = -x * x * x / 6.0L;
        long double sum = term;
        for (int k = 2; k < 8; ++k) {
            term *= -x * x / ((2.0L * k) * (2.0L * k + 1.0L));
            sum += term;
        }
        return sum;
    }
    return std::sin(x) - x;
}

/// Integral of J(w) * weight(w) over the spectral-density domain; weight
/// behaves like w^power at the origin, one power lower when `thermal` at
/// finite temperature.
inline double integrate(const dephasim::SpectralDensity& sd, const dephasim::BathParams& bp,
                        int power, bool thermal,
                        const std::function<long double(long double)>& weight,
                        long intervals = 1000000) {
    const long double upper = sd.upper_limit();
    const long double e = sd.ohmicity + power + ((thermal && !bp.is_zero_temperature()) ? 0.0L : 1.0L);
    const long double q = e < 4.0L ? 4.0L / e : 1.0L;
    auto f = [&](long double u) -> long double {
        if (u <= 0.0L) u = 1e-9L;
        const long double w = upper * std::pow(u, q);
        const long double jac = q * upper * std::pow(u, q - 1.0L);
        return static_cast<long double>(sd(static_cast<double>(w))) * weight(w) * jac;
    };
    const long double h = 1.0L / intervals;
    long double sum = f(0.0L) + f(1.0L);
    for (long i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0L : 2.0L) * f(i * h);
    return static_cast<double>(sum * h / 3.0L);
}

inline double gamma_t(const dephasim::SpectralDensity& sd, const dephasim::BathParams& bp, double t) {
    return integrate(sd, bp, 0, true, [&](long double w) {
        return 2.0L * std::norm(one_minus_phase(w * t)) / (w * w) * coth_half(bp, w);
    });
}

inline double delta_t(const dephasim::SpectralDensity& sd, const dephasim::BathParams& bp, double t) {
    return integrate(sd, bp, 1, false, [&](long double w) { return 4.0L * sin_minus_x(w * t) / (w * w); });
}

inline double mu_pair(const dephasim::SpectralDensity& sd, const dephasim::BathParams& bp, int lag,
                      double tau) {
    return integrate(sd, bp, 1, false, [&](long double w) {
        return 2.0L * std::sin(lag * w * tau) * std::norm(one_minus_phase(w * tau)) / (w * w);
    });
}

inline double gamma_pair(const dephasim::SpectralDensity& sd, const dephasim::BathParams& bp, int lag,
                         double tau) {
    return integrate(sd, bp, 0, true, [&](long double w) {
        return 2.0L * std::cos(lag * w * tau) * std::norm(one_minus_phase(w * tau)) / (w * w) *
               coth_half(bp, w);
    });
}

inline cplx cross(long double w, int p, int n, double t_prime, double tau) {
    return one_minus_phase(w * tau) * std::conj(one_minus_phase(w * t_prime)) *
           std::exp(cplx(0.0L, (p - n) * w * tau));
}

inline double epsilon_pn(const dephasim::SpectralDensity& sd, const dephasim::BathParams& bp, int p,
                         int n, double t_prime, double tau) {
    return integrate(sd, bp, 0, true, [&](long double w) {
        return 4.0L * cross(w, p, n, t_prime, tau).real() / (w * w) * coth_half(bp, w);
    });
}

inline double sigma_pn(const dephasim::SpectralDensity& sd, const dephasim::BathParams& bp, int p,
                       int n, double t_prime, double tau) {
    return integrate(sd, bp, 1, false, [&](long double w) {
        return 2.0L * cross(w, p, n, t_prime, tau).imag() / (w * w);
    });
}

}  // namespace reference
