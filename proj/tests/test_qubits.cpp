#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "dephasim/qubits.hpp"
#include "support/random.hpp"

using namespace dephasim;

namespace {

BathDescriptor sub_ohmic(double s = 0.1, double beta = 100.0) {
    return BathDescriptor::continuous(SpectralDensity{1.0, s, 2.0, Cutoff::Exponential}, BathParams{beta});
}

BathDescriptor two_modes(double beta = 2.0) {
    DiscreteBath b;
    b.modes = {{{0.2, 0.0}, 1.0}, {{0.15, 0.05}, 2.3}};
    return BathDescriptor::discrete(b, BathParams{beta});
}

double max_abs(const DensityMatrix4& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Basis, RowsAndCharges) {
    for (int r = 0; r < 4; ++r) EXPECT_EQ(BasisIndex::from_row(r).row(), r);
    EXPECT_EQ((BasisIndex{1, 1}.charge()), 1);
    EXPECT_EQ((BasisIndex{1, -1}.charge()), 0);
    EXPECT_EQ((BasisIndex{-1, 1}.charge()), 0);
    EXPECT_EQ((BasisIndex{-1, -1}.charge()), -1);
    EXPECT_EQ((BasisIndex{-1, 1}.row()), 2);
}

TEST(States, Preparations) {
    EXPECT_NEAR(state_product_x().norm_squared(), 1.0, 1e-15);
    EXPECT_NEAR(state_bell().norm_squared(), 1.0, 1e-15);
    const auto w = state_product_x().charge_weights();
    EXPECT_DOUBLE_EQ(w[0], 0.25);
    EXPECT_DOUBLE_EQ(w[1], 0.5);
    EXPECT_DOUBLE_EQ(w[2], 0.25);
    TwoQubitPureState bad{{Complex(1.0), Complex(1.0), Complex(0.0), Complex(0.0)}};
    try {
        bad.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "preparation");
    }
}

TEST(Schedule, LocateSegments) {
    const MeasurementSchedule s{1.0, 2, 3.0, 0.01};
    EXPECT_EQ(s.locate(0.0).n_completed, 0);
    EXPECT_EQ(s.locate(0.5).n_completed, 0);
    EXPECT_DOUBLE_EQ(s.locate(0.5).t_prime, 0.5);
    EXPECT_EQ(s.locate(1.0).n_completed, 1);
    EXPECT_EQ(s.locate(1.0).t_prime, 0.0);
    EXPECT_EQ(s.locate(2.999999999999).n_completed, 2);
    const auto end = s.locate(3.0);
    EXPECT_EQ(end.n_completed, 2);
    EXPECT_EQ(end.t_prime, 1.0);
    EXPECT_THROW(s.locate(3.5), ConfigError);
    EXPECT_THROW(s.locate(-0.1), ConfigError);
}

TEST(Schedule, Validation) {
    EXPECT_EQ(MeasurementSchedule::measurements_to_cover(3.0, 1.0), 2);
    EXPECT_EQ(MeasurementSchedule::measurements_to_cover(2.5, 1.0), 2);
    EXPECT_EQ(MeasurementSchedule::measurements_to_cover(0.5, 1.0), 0);
    EXPECT_THROW((MeasurementSchedule{-1.0, 0, 1.0, 0.1}.validate()), ConfigError);
    EXPECT_THROW((MeasurementSchedule{1.0, 1, 3.0, 0.1}.validate()), ConfigError);
    EXPECT_THROW((MeasurementSchedule{1.0, 7, 3.0, 0.1}.validate()), ComplexityError);
    EXPECT_NO_THROW((MeasurementSchedule{1.0, 6, 7.0, 0.1}.validate()));
}

TEST(ResetEvolution, StartsFromProjector) {
    const auto psi = state_bell();
    const MeasurementSchedule s{1.0, 2, 3.0, 0.01};
    const auto rho = evolve_reset(psi, SystemParams{}, sub_ohmic(), s, 0.0);
    EXPECT_EQ(max_abs(rho - psi.projector()), 0.0);
    EXPECT_EQ(max_abs(evolve_reset(psi, SystemParams{}, sub_ohmic(), s, 2.0) - psi.projector()), 0.0);
}

TEST(ResetEvolution, PeriodicInTau) {
    const auto bath = sub_ohmic(0.5);
    const MeasurementSchedule s{0.5, 4, 2.5, 0.01};
    for (double t : {0.3, 1.3, 2.05}) {
        const auto a = evolve_reset(state_product_x(), SystemParams{}, bath, s, t);
        const auto b = evolve_reset(state_product_x(), SystemParams{}, bath, s, std::fmod(t, 0.5));
        EXPECT_EQ(max_abs(a - b), 0.0) << t;
    }
}

TEST(ResetEvolution, BellCoherenceDecays) {
    const auto bath = sub_ohmic(1.0, 1.0);
    const MeasurementSchedule s{1.0, 0, 1.0, 0.01};
    const double t = 0.7;
    const auto rho = evolve_reset(state_bell(), SystemParams{0.9}, bath, s, t);
    EXPECT_NEAR(std::abs(rho(0, 3)), 0.5 * std::exp(-4.0 * gamma_t(bath, t)), 1e-15);
    EXPECT_NEAR(std::arg(rho(0, 3)), std::remainder(-2.0 * 0.9 * t, 2 * std::numbers::pi), 1e-12);
    EXPECT_DOUBLE_EQ(rho(0, 0).real(), 0.5);
}

TEST(IndexEnumeration, SizesAndUniqueness) {
    EXPECT_EQ(enumerate_index_terms(0).size(), 1u);
    EXPECT_EQ(enumerate_index_terms(1).size(), 16u);
    EXPECT_EQ(enumerate_index_terms(2).size(), 256u);
    const auto terms = enumerate_index_terms(3);
    ASSERT_EQ(terms.size(), 4096u);
    std::set<std::vector<int>> seen;
    for (const auto& a : terms) {
        std::vector<int> key;
        for (const auto& p : a.pairs) {
            key.push_back(p[0].row());
            key.push_back(p[1].row());
        }
        seen.insert(key);
    }
    EXPECT_EQ(seen.size(), 4096u);
    const auto first = terms[1];
    EXPECT_EQ(first.pairs[2][1].row(), 1);
    EXPECT_EQ(first.pairs[0][0].row(), 0);
    EXPECT_THROW(enumerate_index_terms(7), ComplexityError);
}

TEST(TrackedEvolution, FoldedNormalizationMatchesFullEnumeration) {
    auto g = testing_support::rng(5);
    const auto psi = testing_support::random_pure(g);
    const SystemParams sys{0.8};
    const KernelCache cache(two_modes(), 1.0, 2);
    Complex z = 0.0;
    for (const auto& a : enumerate_index_terms(2)) {
        std::vector<int> x, y;
        double w = 1.0;
        for (const auto& p : a.pairs) {
            x.push_back(p[0].charge());
            y.push_back(p[1].charge());
            w *= std::norm(psi[p[0]]) * std::norm(psi[p[1]]);
        }
        z += w * std::exp(sequence_exponent(x, y, sys, cache));
    }
    const TrackedPropagator prop(psi, sys, cache, 2);
    EXPECT_NEAR(prop.normalization(), z.real(), 1e-14);
    EXPECT_NEAR(z.imag(), 0.0, 1e-14);
    EXPECT_LT(prop.normalization_residue(), 1e-14);
    EXPECT_GT(prop.normalization(), 0.0);
    EXPECT_LE(prop.normalization(), 1.0);
}

TEST(TrackedEvolution, NoMeasurementMeansUnitNormalization) {
    const KernelCache cache(sub_ohmic(), 1.0, 0);
    EXPECT_EQ(TrackedPropagator(state_product_x(), SystemParams{}, cache, 0).normalization(), 1.0);
}

TEST(TrackedEvolution, FirstSegmentEqualsReset) {
    for (const auto& psi : {state_product_x(), state_bell()}) {
        const auto bath = sub_ohmic(0.1);
        const MeasurementSchedule s{1.0, 2, 3.0, 0.01};
        const KernelCache cache(bath, 1.0, 2);
        for (double t : {0.0, 0.25, 0.8, 0.99}) {
            const auto a = evolve_tracked(psi, SystemParams{}, s, cache, t);
            const auto b = evolve_reset(psi, SystemParams{}, bath, s, t);
            EXPECT_LE(max_abs(a - b), 1e-12) << t;
        }
    }
}

TEST(TrackedEvolution, ValidDensityMatrices) {
    auto g = testing_support::rng(17);
    for (int trial = 0; trial < 6; ++trial) {
        const double s = testing_support::uniform(g, 0.1, 2.0);
        const auto bath = sub_ohmic(s, testing_support::uniform(g, 0.5, 100.0));
        const auto psi = trial % 2 ? state_bell() : testing_support::random_pure(g);
        const KernelCache cache(bath, 1.0, 3);
        for (int n = 0; n <= 3; ++n) {
            const TrackedPropagator prop(psi, SystemParams{1.0}, cache, n);
            for (double tp : {0.0, 0.3, 0.7, 1.0}) {
                const auto d = diagnose(prop.at(tp));
                EXPECT_LE(d.hermiticity, 1e-12);
                EXPECT_LE(d.trace_error, 1e-10);
                EXPECT_GE(d.min_eigenvalue, -1e-8);
            }
        }
    }
}

TEST(TrackedEvolution, ProjectorAtMeasurementInstants) {
    const auto psi = state_product_x();
    const KernelCache cache(sub_ohmic(0.1), 1.0, 3);
    for (int n = 1; n <= 3; ++n) {
        const auto rho = TrackedPropagator(psi, SystemParams{}, cache, n).at(0.0);
        EXPECT_LE(max_abs(rho - psi.projector()), 1e-12) << n;
    }
}

TEST(TrackedEvolution, PopulationsConstantWithinSegment) {
    const auto psi = state_product_x();
    const KernelCache cache(sub_ohmic(0.5), 0.8, 2);
    const TrackedPropagator prop(psi, SystemParams{}, cache, 2);
    const auto a = prop.at(0.1);
    for (double tp : {0.3, 0.55, 0.8})
        EXPECT_LE((prop.at(tp).diagonal() - a.diagonal()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TrackedEvolution, VanishingProbabilityIsReported) {
    // each qubit precesses by pi between measurements: |+x> -> |-x>
    DiscreteBath b;
    b.modes = {{{1e-4, 0.0}, 1.0}};
    const KernelCache cache(BathDescriptor::discrete(b, BathParams{}), 1.0, 1);
    EXPECT_THROW(TrackedPropagator(state_product_x(), SystemParams{std::numbers::pi}, cache, 1),
                 VanishingProbabilityError);
}

TEST(TrackedEvolution, Caps) {
    const KernelCache cache(sub_ohmic(), 1.0, 2);
    EXPECT_THROW(TrackedPropagator(state_bell(), SystemParams{}, cache, 7), ComplexityError);
    EXPECT_THROW(TrackedPropagator(state_bell(), SystemParams{}, cache, 3), ConfigError);
}
