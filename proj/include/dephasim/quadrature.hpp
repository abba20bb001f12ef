#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dephasim/error.hpp"

namespace dephasim::quadrature {

struct Tolerance {
    double absolute = 1e-10;
    double relative = 1e-8;
};

/// Layout of the integration domain (0, upper]. `oscillation_rate` is the
/// largest angular "time" multiplying omega inside any trig factor of the
/// integrand; panels are made no wider than one period 2*pi/rate.
/// `endpoint_exponent` e > 0 declares integrand ~ omega^(e-1) near zero.
/// A non-integer e is removed on the first panel by omega = h*v^q with
/// q = m/e, m = max(1, ceil(3e)): the leading term becomes v^(m-1) and
/// every correction carries at least v^3.
struct Domain {
    double upper = 0.0;
    double max_panel = 0.0;
    double oscillation_rate = 0.0;
    double endpoint_exponent = 1.0;
};

namespace detail {

inline constexpr unsigned kMaxDepth = 18;

template <class F>
double panel(F& f, double a, double b, double& error, double& l1) {
    double err = 0.0;
    double norm = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
        f, a, b, kMaxDepth, 1e-11, &err, &norm);
    error += err;
    l1 += norm;
    return value;
}

}  // namespace detail

/// Integrate f over (0, dom.upper] panel by panel. Throws QuadratureError
/// naming the worst panel when the accumulated error estimate exceeds
/// max(absolute, relative * |result|) or the result is not finite.
template <class F>
double integrate(F&& f, const Domain& dom, Tolerance tol = {}) {
    if (!(dom.upper > 0.0)) {
        return 0.0;
    }
    double width = dom.max_panel > 0.0 ? std::min(dom.max_panel, dom.upper) : dom.upper;
    if (dom.oscillation_rate > 0.0) {
        width = std::min(width, 2.0 * std::numbers::pi / dom.oscillation_rate);
    }
    const auto n_panels = static_cast<long>(std::ceil(dom.upper / width - 1e-12));
    width = dom.upper / static_cast<double>(n_panels);

    double total_error = 0.0;
    double worst_error = -1.0;
    double worst_lo = 0.0;
    double total = 0.0;
    double compensation = 0.0;
    auto accumulate = [&](double value) {
        // Neumaier summation over panels
        const double t = total + value;
        if (std::abs(total) >= std::abs(value)) {
            compensation += (total - t) + value;
        } else {
            compensation += (value - t) + total;
        }
        total = t;
    };

    for (long i = 0; i < n_panels; ++i) {
        const double lo = width * static_cast<double>(i);
        const double hi = i + 1 == n_panels ? dom.upper : width * static_cast<double>(i + 1);
        double err = 0.0;
        double l1 = 0.0;
        double value = 0.0;
        const double e = dom.endpoint_exponent;
        if (i == 0 && e > 0.0 && e != std::round(e)) {
            const double q = std::max(1.0, std::ceil(3.0 * e)) / e;
            auto mapped = [&](double v) {
                const double w = hi * std::pow(v, q);
                if (!(w > 0.0)) {
                    return 0.0;
                }
                return f(w) * q * hi * std::pow(v, q - 1.0);
            };
            value = detail::panel(mapped, 0.0, 1.0, err, l1);
        } else {
            auto direct = [&](double w) { return w > 0.0 ? f(w) : 0.0; };
            value = detail::panel(direct, lo, hi, err, l1);
        }
        if (!std::isfinite(value)) {
            throw QuadratureError(lo, hi, value, err);
        }
        accumulate(value);
        total_error += err;
        if (err > worst_error) {
            worst_error = err;
            worst_lo = lo;
        }
    }
    const double result = total + compensation;
    if (!std::isfinite(result) ||
        total_error > std::max(tol.absolute, tol.relative * std::abs(result))) {
        throw QuadratureError(worst_lo, std::min(worst_lo + width, dom.upper), result,
                              total_error);
    }
    return result;
}

}  // namespace dephasim::quadrature
