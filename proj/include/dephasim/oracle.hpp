#pragma once

// Brute-force reference: the full system (x) truncated-Fock-bath density
// matrix, evolved by exact diagonalisation of the total Hamiltonian and
// projected at every measurement. Independent of every closed form in
// bath.hpp / qubits.hpp and used to validate them.

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dephasim/bath.hpp"
#include "dephasim/entanglement.hpp"
#include "dephasim/error.hpp"
#include "dephasim/qubits.hpp"

namespace dephasim::oracle {

using Matrix = Eigen::MatrixXcd;

inline constexpr int kDefaultMaxDimension = 4096;

/// Full state over system (outer index, basis rows 0..3) and bath modes
/// (inner index, mode 0 most significant, occupation 0..n_max-1 each).
struct TotalState {
    Matrix rho;
    int env_dim = 1;
};

struct TotalHamiltonian {
    Matrix matrix;
    int env_dim = 1;
    SystemParams sys;
    DiscreteBath bath;
    Eigen::VectorXd eigenvalues;
    Matrix eigenvectors;
};

namespace detail {

inline int environment_dimension(const DiscreteBath& bath, int max_dim) {
    long dim = 1;
    for (std::size_t r = 0; r < bath.modes.size(); ++r) {
        dim *= bath.n_max;
        if (4 * dim > max_dim) {
            throw ComplexityError("oracle dimension " + std::to_string(4 * dim) +
                                  " exceeds the cap of " + std::to_string(max_dim));
        }
    }
    return static_cast<int>(dim);
}

/// Annihilation operator of mode r embedded in the bath space.
inline Matrix annihilation(const DiscreteBath& bath, std::size_t r, int env_dim) {
    const int n = bath.n_max;
    int stride = 1;
    for (std::size_t q = r + 1; q < bath.modes.size(); ++q) stride *= n;
    Matrix b = Matrix::Zero(env_dim, env_dim);
    for (int i = 0; i < env_dim; ++i) {
        const int occ = (i / stride) % n;
        if (occ > 0) b(i - stride, i) = std::sqrt(static_cast<double>(occ));
    }
    return b;
}

inline int occupation(const DiscreteBath& bath, std::size_t r, int env_index) {
    int stride = 1;
    for (std::size_t q = r + 1; q < bath.modes.size(); ++q) stride *= bath.n_max;
    return (env_index / stride) % bath.n_max;
}

}  // namespace detail

/// H = w0/2 (sz1 + sz2) + sum_r w_r b_r^+ b_r + (sz1 + sz2) sum_r (g_r^* b_r + g_r b_r^+),
/// diagonalised on construction.
inline TotalHamiltonian build_hamiltonian(const SystemParams& sys, const DiscreteBath& bath,
                                          int max_dim = kDefaultMaxDimension) {
    sys.validate();
    bath.validate();
    const int env = detail::environment_dimension(bath, max_dim);
    Matrix h_env = Matrix::Zero(env, env);
    Matrix coupling = Matrix::Zero(env, env);
    for (std::size_t r = 0; r < bath.modes.size(); ++r) {
        const Matrix b = detail::annihilation(bath, r, env);
        const auto& m = bath.modes[r];
        for (int i = 0; i < env; ++i) h_env(i, i) += m.frequency * detail::occupation(bath, r, i);
        coupling += std::conj(m.coupling) * b + m.coupling * b.adjoint();
    }
    TotalHamiltonian h;
    h.env_dim = env;
    h.sys = sys;
    h.bath = bath;
    h.matrix = Matrix::Zero(4 * env, 4 * env);
    for (int row = 0; row < 4; ++row) {
        const double s = 2.0 * BasisIndex::from_row(row).charge();
        auto block = h.matrix.block(row * env, row * env, env, env);
        block = h_env + s * coupling;
        block.diagonal().array() += 0.5 * sys.omega_0 * s;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix);
    if (es.info() != Eigen::Success) throw NumericalError("oracle Hamiltonian diagonalisation failed");
    h.eigenvalues = es.eigenvalues();
    h.eigenvectors = es.eigenvectors();
    return h;
}

/// Largest per-mode population of the highest retained Fock level.
inline double thermal_tail_population(const DiscreteBath& bath, const BathParams& bp) {
    if (bp.is_zero_temperature()) return 0.0;
    double worst = 0.0;
    for (const auto& m : bath.modes) {
        const double q = std::exp(-bp.beta * m.frequency);
        double z = 0.0;
        for (int n = 0; n < bath.n_max; ++n) z += std::pow(q, n);
        worst = std::max(worst, std::pow(q, bath.n_max - 1) / z);
    }
    return worst;
}

/// Normalised Gibbs state of the truncated bath Hamiltonian.
inline Matrix thermal_state(const DiscreteBath& bath, const BathParams& bp) {
    bath.validate();
    bp.validate();
    int env = 1;
    for (std::size_t r = 0; r < bath.modes.size(); ++r) env *= bath.n_max;
    Matrix rho = Matrix::Zero(env, env);
    double z = 0.0;
    for (int i = 0; i < env; ++i) {
        double energy = 0.0;
        for (std::size_t r = 0; r < bath.modes.size(); ++r)
            energy += bath.modes[r].frequency * detail::occupation(bath, r, i);
        const double w = bp.is_zero_temperature() ? (energy == 0.0 ? 1.0 : 0.0)
                                                  : std::exp(-bp.beta * energy);
        rho(i, i) = w;
        z += w;
    }
    return rho / z;
}

inline TotalState product_state(const TwoQubitPureState& psi, const Matrix& env_rho) {
    const DensityMatrix4 p = psi.projector();
    const auto env = static_cast<int>(env_rho.rows());
    TotalState s;
    s.env_dim = env;
    s.rho = Matrix::Zero(4 * env, 4 * env);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            if (p(a, b) != Complex(0.0)) s.rho.block(a * env, b * env, env, env) = p(a, b) * env_rho;
    return s;
}

/// e^{-iHt} rho e^{+iHt} through the eigendecomposition of H.
inline TotalState evolve_exact(const TotalState& state, const TotalHamiltonian& h, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("t", "must be a finite time >= 0");
    if (t == 0.0) return state;
    const Eigen::VectorXcd phase = (Complex(0.0, -t) * h.eigenvalues.cast<Complex>()).array().exp();
    const Matrix u = h.eigenvectors * phase.asDiagonal() * h.eigenvectors.adjoint();
    TotalState out;
    out.env_dim = state.env_dim;
    out.rho = u * state.rho * u.adjoint();
    return out;
}

/// Tr_E rho.
inline DensityMatrix4 reduced_system(const TotalState& state) {
    const int env = state.env_dim;
    DensityMatrix4 r;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) r(a, b) = state.rho.block(a * env, b * env, env, env).trace();
    return r;
}

/// (P_psi (x) 1) rho (P_psi (x) 1) / p together with the outcome probability p.
inline std::pair<TotalState, double> project_system(const TotalState& state,
                                                    const TwoQubitPureState& psi) {
    const int env = state.env_dim;
    Matrix reduced_env = Matrix::Zero(env, env);
    for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
            const Complex w = std::conj(psi[c]) * psi[d];
            if (w != Complex(0.0)) reduced_env += w * state.rho.block(c * env, d * env, env, env);
        }
    const double p = reduced_env.trace().real();
    if (!(p >= 1e-14)) throw VanishingProbabilityError(p);
    return {product_state(psi, reduced_env / p), p};
}

struct OracleTrajectory {
    std::vector<double> times;
    std::vector<int> segments;
    std::vector<DensityMatrix4> states;
    std::vector<double> concurrences;
    std::vector<double> probabilities;  // one per completed measurement
    std::vector<std::string> warnings;
};

inline constexpr int kOracleMeasurementCap = 3;

/// Drives exact evolution and projection over the schedule's grid. With
/// `reset_environment` the bath is re-thermalised after every projection.
inline OracleTrajectory oracle_trajectory(const TwoQubitPureState& psi, const SystemParams& sys,
                                          const DiscreteBath& bath, const BathParams& bp,
                                          const MeasurementSchedule& sched,
                                          bool reset_environment = false,
                                          int max_dim = kDefaultMaxDimension) {
    psi.validate();
    sched.validate();
    if (sched.n_measurements > kOracleMeasurementCap)
        throw ComplexityError("oracle runs are capped at " + std::to_string(kOracleMeasurementCap) +
                              " measurements");
    OracleTrajectory out;
    const double tail = thermal_tail_population(bath, bp);
    if (tail > 1e-8)
        out.warnings.push_back("thermal population of the top Fock level is " +
                               std::to_string(tail) + "; increase n_max");

    const TotalHamiltonian h = build_hamiltonian(sys, bath, max_dim);
    const Matrix env0 = thermal_state(bath, bp);
    const Matrix& v = h.eigenvectors;
    const Eigen::VectorXcd energies = h.eigenvalues.cast<Complex>();
    const int env = h.env_dim;

    TotalState start = product_state(psi, env0);
    int current_segment = 0;
    Matrix rotated = v.adjoint() * start.rho * v;

    const auto n_points = static_cast<long>(std::floor(sched.t_max / sched.dt + 1e-9));
    for (long i = 0; i <= n_points; ++i) {
        const double t = static_cast<double>(i) * sched.dt;
        const auto pos = sched.locate(t);
        while (current_segment < pos.n_completed) {
            auto [projected, p] = project_system(evolve_exact(start, h, sched.tau), psi);
            out.probabilities.push_back(p);
            start = reset_environment ? product_state(psi, env0) : std::move(projected);
            rotated = v.adjoint() * start.rho * v;
            ++current_segment;
        }
        // rho(t') = V (rotated o e^{-i(E_i - E_j)t'}) V^dagger, traced over the bath.
        const Eigen::VectorXcd ph = (Complex(0.0, -pos.t_prime) * energies).array().exp();
        const Matrix evolved = ph.asDiagonal() * rotated * ph.conjugate().asDiagonal();
        const Matrix left = v * evolved;
        DensityMatrix4 r;
        for (int a = 0; a < 4; ++a)
            for (int b = a; b < 4; ++b) {
                const Complex val =
                    (left.middleRows(a * env, env).array() * v.middleRows(b * env, env).conjugate().array())
                        .sum();
                r(a, b) = val;
                if (b != a) r(b, a) = std::conj(val);
            }
        out.times.push_back(t);
        out.segments.push_back(pos.n_completed);
        out.states.push_back(r);
        out.concurrences.push_back(concurrence(r).value);
    }
    return out;
}

}  // namespace dephasim::oracle
