#pragma once

// Two-qubit states in the sigma_z product basis and the two density-matrix
// evolutions under repeated projective measurement onto the prepared state:
// the environment either resets to equilibrium after every measurement or
// keeps the correlations the measurements imprint on it.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dephasim/bath.hpp"
#include "dephasim/error.hpp"

namespace dephasim {

using Complex = std::complex<double>;
using DensityMatrix4 = Eigen::Matrix4cd;

/// Joint sigma_z eigenvalues (k, l). Row order: (+,+), (+,-), (-,+), (-,-).
struct BasisIndex {
    int k = 1;
    int l = 1;

    constexpr int row() const { return (k > 0 ? 0 : 2) + (l > 0 ? 0 : 1); }
    static constexpr BasisIndex from_row(int row) {
        return BasisIndex{(row & 2) ? -1 : 1, (row & 1) ? -1 : 1};
    }
    /// Half the eigenvalue of sigma_z^(1) + sigma_z^(2): one of -1, 0, 1.
    constexpr int charge() const { return (k + l) / 2; }
    friend constexpr bool operator==(BasisIndex, BasisIndex) = default;
};

struct TwoQubitPureState {
    std::array<Complex, 4> amplitudes{};

    Complex operator[](BasisIndex b) const { return amplitudes[static_cast<std::size_t>(b.row())]; }
    Complex operator[](int row) const { return amplitudes[static_cast<std::size_t>(row)]; }

    double norm_squared() const {
        double n = 0.0;
        for (const auto& a : amplitudes) n += std::norm(a);
        return n;
    }

    void validate() const {
        if (std::abs(norm_squared() - 1.0) > 1e-12)
            throw ConfigError("preparation", "state amplitudes must have unit norm");
    }

    DensityMatrix4 projector() const {
        Eigen::Vector4cd v;
        for (int i = 0; i < 4; ++i) v[i] = amplitudes[static_cast<std::size_t>(i)];
        return v * v.adjoint();
    }

    /// Probability weight of each charge sector -1, 0, +1 (index charge + 1).
    std::array<double, 3> charge_weights() const {
        std::array<double, 3> w{};
        for (int row = 0; row < 4; ++row) {
            w[static_cast<std::size_t>(BasisIndex::from_row(row).charge() + 1)] +=
                std::norm(amplitudes[static_cast<std::size_t>(row)]);
        }
        return w;
    }
};

/// |1>_X |1>_X: every amplitude 1/2.
inline TwoQubitPureState state_product_x() {
    return TwoQubitPureState{{Complex(0.5), Complex(0.5), Complex(0.5), Complex(0.5)}};
}

/// (|-1,-1> + |1,1>)/sqrt(2).
inline TwoQubitPureState state_bell() {
    const double a = 1.0 / std::numbers::sqrt2;
    return TwoQubitPureState{{Complex(a), Complex(0.0), Complex(0.0), Complex(a)}};
}

struct SystemParams {
    double omega_0 = 1.0;

    void validate() const {
        if (!std::isfinite(omega_0)) throw ConfigError("omega_0", "must be finite");
    }
};

/// Position of a time point relative to the measurement train.
struct SegmentPosition {
    int n_completed = 0;  // N - 1
    double t_prime = 0.0; // t - (N - 1) tau
};

struct MeasurementSchedule {
    double tau = 1.0;
    int n_measurements = 0;  // measurements at tau, 2 tau, ..., n tau
    double t_max = 1.0;
    double dt = 0.005;

    static constexpr int kHardCap = 6;

    void validate() const {
        if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau", "must be > 0");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "must be > 0");
        if (!(t_max >= dt) || !std::isfinite(t_max)) throw ConfigError("t_max", "must be >= dt");
        if (n_measurements < 0) throw ConfigError("n_measurements", "must be >= 0");
        if (n_measurements > kHardCap)
            throw ComplexityError("n_measurements = " + std::to_string(n_measurements) +
                                  " exceeds the hard cap of " + std::to_string(kHardCap));
        if (t_max > (n_measurements + 1) * tau * (1.0 + 1e-12))
            throw ConfigError("t_max", "exceeds (n_measurements + 1) * tau");
    }

    /// Measurement count needed to cover [0, t_max].
    static int measurements_to_cover(double t_max, double tau) {
        const double q = t_max / tau;
        return std::max(0, static_cast<int>(std::ceil(q - 1e-9)) - 1);
    }

    /// Segment of time t. At t = k*tau (k <= n_measurements) the k-th
    /// measurement has just happened and t' = 0. The final instant
    /// (n_measurements + 1) tau is reported as the end of the last segment.
    SegmentPosition locate(double t) const {
        if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("t", "must be a finite time >= 0");
        double rem = std::fmod(t, tau);
        auto n = static_cast<int>(std::llround((t - rem) / tau));
        if (tau - rem <= 1e-9 * tau) {
            rem = 0.0;
            ++n;
        } else if (rem <= 1e-9 * tau) {
            rem = 0.0;
        }
        if (n > n_measurements) {
            if (n == n_measurements + 1 && rem == 0.0) return {n_measurements, tau};
            throw ConfigError("t", "lies beyond the last measured segment");
        }
        return {n, rem};
    }
};

/// Numerical health of a density matrix.
struct DensityDiagnostics {
    double hermiticity = 0.0;  // max |rho - rho^dagger|
    double trace_error = 0.0;  // |tr rho - 1|
    double min_eigenvalue = 0.0;
};

inline DensityDiagnostics diagnose(const DensityMatrix4& rho) {
    DensityDiagnostics d;
    d.hermiticity = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    d.trace_error = std::abs(rho.trace() - Complex(1.0));
    const DensityMatrix4 h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<DensityMatrix4> es(h, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
}

namespace detail {

/// Final-segment factor shared by both evolutions:
///   psi_{a'} psi*_a exp(-i w0 t' (x'-y) - i Delta(t') (x'^2-y^2) - gamma(t') (x'-y)^2) amp(x'-y),
/// with x', y the charges of rows a', a and amp(d) for d in {0, 1, 2};
/// amp(-d) = conj(amp(d)) which makes the result exactly Hermitian.
inline DensityMatrix4 assemble_segment(const TwoQubitPureState& psi, double omega_0, double t_prime,
                                       double gamma, double delta,
                                       const std::array<Complex, 3>& amp) {
    DensityMatrix4 rho;
    for (int ket = 0; ket < 4; ++ket) {
        const int x = BasisIndex::from_row(ket).charge();
        for (int bra = 0; bra < 4; ++bra) {
            const int y = BasisIndex::from_row(bra).charge();
            if (bra < ket) {
                rho(ket, bra) = std::conj(rho(bra, ket));
                continue;
            }
            const int d = x - y;
            const double phase = -omega_0 * t_prime * d - delta * (x * x - y * y);
            const double damping = -gamma * d * d;
            const Complex a = d >= 0 ? amp[static_cast<std::size_t>(d)]
                                     : std::conj(amp[static_cast<std::size_t>(-d)]);
            Complex v = psi[ket] * std::conj(psi[bra]) * std::exp(Complex(damping, phase)) * a;
            if (ket == bra) v = Complex(v.real(), 0.0);
            rho(ket, bra) = v;
        }
    }
    return rho;
}

}  // namespace detail

/// Reset-environment state: the single-segment closed form restarted from
/// |psi><psi| at every measurement,
///   rho_{k'l',kl} = psi_{k'l'} psi*_{kl} e^{-i w0 (k'+l'-k-l) t'/2}
///                   e^{-i Delta(t') (k'l'-kl)/2} e^{-(k+l-k'-l')^2 gamma(t')/4}.
inline DensityMatrix4 evolve_reset(const TwoQubitPureState& psi, const SystemParams& sys,
                                   const BathDescriptor& bath, const MeasurementSchedule& sched,
                                   double t) {
    const auto pos = sched.locate(t);
    const double g = gamma_t(bath, pos.t_prime);
    const double d = delta_t(bath, pos.t_prime);
    return detail::assemble_segment(psi, sys.omega_0, pos.t_prime, g, d,
                                    {Complex(1.0), Complex(1.0), Complex(1.0)});
}

/// One (ket, bra) basis pair per completed measurement.
struct IndexAssignment {
    std::vector<std::array<BasisIndex, 2>> pairs;
};

/// All 16^n assignments of (ket_j, bra_j) pairs, j = 1..n. Term i is decoded
/// as base-16 digits with j = 1 most significant; digit = 4*ket.row() + bra.row().
class IndexTerms {
public:
    explicit IndexTerms(int n_measurements) : n_(n_measurements) {
        if (n_measurements < 0) throw ConfigError("n_measurements", "must be >= 0");
        if (n_measurements > MeasurementSchedule::kHardCap)
            throw ComplexityError("index enumeration over " + std::to_string(n_measurements) +
                                  " measurements exceeds the hard cap");
        size_ = std::size_t{1} << (4 * n_measurements);
    }

    std::size_t size() const { return size_; }
    int measurements() const { return n_; }

    IndexAssignment operator[](std::size_t i) const {
        IndexAssignment a;
        a.pairs.resize(static_cast<std::size_t>(n_));
        for (int j = n_ - 1; j >= 0; --j) {
            const auto digit = static_cast<int>(i & 15u);
            i >>= 4;
            a.pairs[static_cast<std::size_t>(j)] = {BasisIndex::from_row(digit >> 2),
                                                    BasisIndex::from_row(digit & 3)};
        }
        return a;
    }

    class iterator {
    public:
        using iterator_category = std::input_iterator_tag;
        using value_type = IndexAssignment;
        using difference_type = std::ptrdiff_t;

        iterator(const IndexTerms* owner, std::size_t i) : owner_(owner), i_(i) {}
        IndexAssignment operator*() const { return (*owner_)[i_]; }
        iterator& operator++() {
            ++i_;
            return *this;
        }
        friend bool operator==(const iterator& a, const iterator& b) { return a.i_ == b.i_; }

    private:
        const IndexTerms* owner_;
        std::size_t i_;
    };

    iterator begin() const { return {this, 0}; }
    iterator end() const { return {this, size_}; }

private:
    int n_;
    std::size_t size_ = 1;
};

inline IndexTerms enumerate_index_terms(int n_measurements) { return IndexTerms(n_measurements); }

/// Exponent of one term of the measured-segment sum, given the ket charges x
/// and bra charges y of the n completed measurements:
///   sum_j [-i w0 tau d_j - i Delta(tau)(x_j^2 - y_j^2) - gamma(tau) d_j^2]
///   + sum_{i>j} [-2 d_i d_j gamma_{ij}(tau)
///                + 2i mu_{ij}(tau)(x_i x_j - y_i y_j - y_i x_j + y_j x_i)],
/// d = x - y.
inline Complex sequence_exponent(std::span<const int> x, std::span<const int> y,
                                 const SystemParams& sys, const KernelCache& cache) {
    const double tau = cache.tau();
    double re = 0.0;
    double im = 0.0;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        const int d = x[i] - y[i];
        im -= sys.omega_0 * tau * d + cache.delta_tau() * (x[i] * x[i] - y[i] * y[i]);
        re -= cache.gamma_tau() * d * d;
        for (std::size_t j = 0; j < i; ++j) {
            const int lag = static_cast<int>(i - j);
            re -= 2.0 * d * (x[j] - y[j]) * cache.gamma_lag(lag);
            im += 2.0 * cache.mu_lag(lag) *
                  (x[i] * x[j] - y[i] * y[j] - y[i] * x[j] + y[j] * x[i]);
        }
    }
    return {re, im};
}

namespace detail {

/// Neumaier-compensated complex accumulator.
class CompensatedSum {
public:
    void add(Complex v) {
        add_part(re_, cre_, v.real());
        add_part(im_, cim_, v.imag());
    }
    Complex value() const { return {re_ + cre_, im_ + cim_}; }

private:
    static void add_part(double& sum, double& comp, double v) {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double re_ = 0.0, cre_ = 0.0, im_ = 0.0, cim_ = 0.0;
};

}  // namespace detail

/// Tracked-environment evolution inside one segment (fixed number of
/// completed measurements). Terms of the index sum depend on each
/// measurement's (ket, bra) pair only through the charges (x_j, y_j), so
/// the 16^n assignments are folded into 9^n charge patterns with summed
/// projection weights. Pattern weights and Z are computed once; each t'
/// then costs one exponential per pattern.
class TrackedPropagator {
public:
    TrackedPropagator(const TwoQubitPureState& psi, const SystemParams& sys,
                      const KernelCache& cache, int n_completed)
        : psi_(psi), sys_(sys), cache_(&cache), n_(n_completed) {
        psi.validate();
        if (n_completed < 0) throw ConfigError("n_measurements", "must be >= 0");
        if (n_completed > MeasurementSchedule::kHardCap)
            throw ComplexityError("tracked evolution over " + std::to_string(n_completed) +
                                  " measurements exceeds the hard cap of " +
                                  std::to_string(MeasurementSchedule::kHardCap));
        if (n_completed > cache.max_measurements())
            throw ConfigError("n_measurements", "kernel cache built for fewer measurements");
        build(psi.charge_weights());
    }

    int completed_measurements() const { return n_; }

    /// Probability that every completed measurement returned the prepared state.
    double normalization() const { return z_; }
    /// Imaginary residue of the assembled normalization sum.
    double normalization_residue() const { return z_residue_; }

    DensityMatrix4 at(const SegmentKernels& k) const {
        if (k.epsilon.size() != static_cast<std::size_t>(n_))
            throw ConfigError("segment", "kernels computed for a different measurement count");
        std::array<detail::CompensatedSum, 3> sums;
        std::vector<double> eps(k.epsilon);
        std::vector<double> sig(k.varsigma);
        const auto n = static_cast<std::size_t>(n_);
        for (std::size_t b = 0; b < weights_.size(); ++b) {
            const std::int8_t* d = &diff_[b * n];
            const std::int8_t* s = &sum_[b * n];
            double lre = 0.0;
            double lim = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                lre -= d[j] * eps[j];
                lim -= 2.0 * s[j] * sig[j];
            }
            const Complex e1 = std::exp(Complex(lre, lim));
            const Complex w = weights_[b];
            sums[0].add(w);
            sums[1].add(w * e1);
            sums[2].add(w * e1 * e1);
        }
        std::array<Complex, 3> amp;
        for (std::size_t i = 0; i < 3; ++i) amp[i] = sums[i].value() / z_;
        amp[0] = Complex(amp[0].real(), 0.0);
        return detail::assemble_segment(psi_, sys_.omega_0, k.t_prime, k.gamma, k.delta, amp);
    }

    DensityMatrix4 at(double t_prime) const { return at(cache_->segment(n_, t_prime)); }

private:
    void build(const std::array<double, 3>& charge_weight) {
        const auto n = static_cast<std::size_t>(n_);
        std::size_t patterns = 1;
        for (std::size_t j = 0; j < n; ++j) patterns *= 9;
        std::vector<int> x(n), y(n);
        detail::CompensatedSum z;
        weights_.reserve(patterns);
        for (std::size_t code = 0; code < patterns; ++code) {
            std::size_t c = code;
            double w = 1.0;
            for (std::size_t j = n; j-- > 0;) {
                const auto digit = static_cast<int>(c % 9);
                c /= 9;
                x[j] = digit / 3 - 1;
                y[j] = digit % 3 - 1;
                w *= charge_weight[static_cast<std::size_t>(x[j] + 1)] *
                     charge_weight[static_cast<std::size_t>(y[j] + 1)];
            }
            if (w == 0.0) continue;
            const Complex term = w * std::exp(sequence_exponent(x, y, sys_, *cache_));
            weights_.push_back(term);
            for (std::size_t j = 0; j < n; ++j) {
                diff_.push_back(static_cast<std::int8_t>(x[j] - y[j]));
                sum_.push_back(static_cast<std::int8_t>(x[j] + y[j]));
            }
            z.add(term);
        }
        const Complex zc = z.value();
        z_ = zc.real();
        z_residue_ = std::abs(zc.imag());
        if (!(z_ >= 1e-14)) throw VanishingProbabilityError(z_);
    }

    TwoQubitPureState psi_;
    SystemParams sys_;
    const KernelCache* cache_;
    int n_;
    double z_ = 1.0;
    double z_residue_ = 0.0;
    std::vector<Complex> weights_;
    std::vector<std::int8_t> diff_;
    std::vector<std::int8_t> sum_;
};

/// Z_{N-1} for the schedule's measurement count.
inline double normalization_z(const TwoQubitPureState& psi, const SystemParams& sys,
                              const MeasurementSchedule& sched, const KernelCache& cache) {
    return TrackedPropagator(psi, sys, cache, sched.n_measurements).normalization();
}

/// Tracked-environment state at time t.
inline DensityMatrix4 evolve_tracked(const TwoQubitPureState& psi, const SystemParams& sys,
                                     const MeasurementSchedule& sched, const KernelCache& cache,
                                     double t) {
    const auto pos = sched.locate(t);
    return TrackedPropagator(psi, sys, cache, pos.n_completed).at(pos.t_prime);
}

}  // namespace dephasim
