#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dephasim/config.hpp"
#include "dephasim/experiments.hpp"

using namespace dephasim;

namespace {

ScenarioConfig scenario(double s, double G, double tau, double t_max, Preparation prep, double dt = 0.01) {
    ScenarioConfig c;
    c.density = SpectralDensity{G, s, 2.0, Cutoff::Exponential};
    c.thermal = BathParams{100.0};
    c.system = SystemParams{1.0};
    c.schedule = MeasurementSchedule{tau, MeasurementSchedule::measurements_to_cover(t_max, tau), t_max, dt};
    c.preparation = prep;
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

double max_divergence(const TrajectoryRecord& r, int segment = -1) {
    double worst = 0.0;
    for (const auto& row : r.rows)
        if (segment < 0 || row.segment == segment)
            worst = std::max(worst, std::abs(row.c_tracked - row.c_reset));
    return worst;
}

}  // namespace

TEST(Trajectory, Invariants) {
    for (auto prep : {Preparation::ProductX, Preparation::Bell}) {
        const auto rec = run_trajectory(scenario(0.1, 1.0, 1.0, 3.0, prep));
        ASSERT_EQ(rec.rows.size(), 301u);
        const double at_measurement = prep == Preparation::Bell ? 1.0 : 0.0;
        for (std::size_t i = 0; i < rec.rows.size(); ++i) {
            const auto& r = rec.rows[i];
            if (i > 0) {
                EXPECT_GT(r.t, rec.rows[i - 1].t);
            }
            for (double c : {r.c_reset, r.c_tracked}) {
                EXPECT_GE(c, 0.0);
                EXPECT_LE(c, 1.0);
            }
            if (i % 100 == 0 && i < 300) {
                EXPECT_NEAR(r.c_reset, at_measurement, 1e-9) << r.t;
                EXPECT_NEAR(r.c_tracked, at_measurement, 1e-9) << r.t;
            }
            if (i + 101 < rec.rows.size()) {
                EXPECT_EQ(r.c_reset, rec.rows[i + 100].c_reset);
            }
            if (r.segment == 0) {
                EXPECT_NEAR(r.c_tracked, r.c_reset, 1e-10);
            }
        }
    }
}

TEST(Trajectory, SecondSegmentSeparates) {
    const auto rec = run_trajectory(scenario(0.1, 1.0, 1.0, 3.0, Preparation::ProductX));
    EXPECT_EQ(max_divergence(rec, 0), 0.0);
    EXPECT_GT(max_divergence(rec, 1), 1e-3);
}

TEST(Trajectory, ShorterIntervalDivergesLess) {
    const auto slow = run_trajectory(scenario(0.1, 1.0, 1.0, 3.0, Preparation::ProductX));
    const auto fast = run_trajectory(scenario(0.1, 1.0, 0.3, 0.9, Preparation::ProductX, 0.003));
    EXPECT_LT(max_divergence(fast), max_divergence(slow));
}

TEST(Trajectory, ModesAndDensityColumns) {
    auto cfg = scenario(0.5, 1.0, 1.0, 2.0, Preparation::Bell, 0.05);
    cfg.mode = EvolutionMode::Reset;
    cfg.include_rho = true;
    auto rec = run_trajectory(cfg);
    EXPECT_TRUE(std::isnan(rec.rows[3].c_tracked));
    ASSERT_EQ(rec.rows[3].rho.size(), 32u);
    EXPECT_NEAR(rec.rows[3].rho[0] + rec.rows[3].rho[10] + rec.rows[3].rho[20] + rec.rows[3].rho[30], 1.0, 1e-12);
    cfg.mode = EvolutionMode::Tracked;
    rec = run_trajectory(cfg);
    EXPECT_TRUE(std::isnan(rec.rows[3].c_reset));
    EXPECT_FALSE(std::isnan(rec.rows[3].c_tracked));
}

TEST(Trajectory, ThreadCountDoesNotChangeOutput) {
    const auto cfg = scenario(0.1, 1.0, 1.0, 3.0, Preparation::ProductX, 0.02);
    ::setenv("DEPHASIM_THREADS", "1", 1);
    const auto a = to_csv(run_trajectory(cfg));
    ::setenv("DEPHASIM_THREADS", "3", 1);
    const auto b = to_csv(run_trajectory(cfg));
    ::unsetenv("DEPHASIM_THREADS");
    EXPECT_EQ(a, b);
}

TEST(Trajectory, GoldenFigureOne) {
    const auto rc = parse_config(slurp(DEPHASIM_CONFIG_DIR "/fig1_product_s0.1.json"), Subcommand::Trajectory);
    const auto text = to_csv(run_trajectory(rc.scenario));
    const auto golden = slurp(DEPHASIM_TEST_DIR "/golden/fig1_product_s0.1.csv");
    ASSERT_FALSE(golden.empty());
    EXPECT_TRUE(text == golden);
}

TEST(Records, EmptyCsvIsHeaderOnly) {
    EXPECT_EQ(to_csv(TrajectoryRecord{}), "t,segment,c_reset,c_tracked\n");
    EXPECT_EQ(to_csv(SweepRecord{}), "tau,n_measurements,c_max_tracked,c_reset_max,ratio\n");
    TrajectoryRecord with_meta;
    with_meta.meta = {{"k", 1}};
    EXPECT_EQ(to_csv(with_meta), "# meta: {\"k\":1}\nt,segment,c_reset,c_tracked\n");
}

TEST(Records, FixedPrecisionFormatting) {
    TrajectoryRecord r;
    r.rows.push_back({0.1, 0, 1.0 / 3.0, std::nan(""), {}});
    EXPECT_EQ(to_csv(r), "t,segment,c_reset,c_tracked\n0.10000000000000001,0,0.33333333333333331,nan\n");
}

TEST(Records, JsonRoundTrip) {
    auto cfg = scenario(0.5, 1.0, 1.0, 2.0, Preparation::ProductX, 0.1);
    cfg.include_rho = true;
    cfg.mode = EvolutionMode::Reset;
    cfg.meta = {{"name", "round trip"}};
    const auto rec = run_trajectory(cfg);
    const auto text = render(rec, RecordFormat::Json);
    const auto back = trajectory_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(render(back, RecordFormat::Json), text);
    EXPECT_EQ(to_csv(back), to_csv(rec));

    SweepRecord s;
    s.meta = {{"a", 2}};
    s.rows.push_back({0.5, 1, 0.2, 0.25, 0.8});
    const auto stext = render(s, RecordFormat::Json);
    EXPECT_EQ(render(sweep_from_json(nlohmann::json::parse(stext)), RecordFormat::Json), stext);
}

TEST(Records, EmitWritesAndReportsPath) {
    const auto path = (std::filesystem::temp_directory_path() / "dephasim_emit_test.csv").string();
    SweepRecord s;
    s.rows.push_back({0.5, 1, 0.2, 0.25, 0.8});
    emit_records(s, RecordFormat::Csv, path);
    EXPECT_EQ(slurp(path), to_csv(s));
    std::filesystem::remove(path);
    try {
        emit_records(s, RecordFormat::Csv, "/nonexistent-dir/x.csv");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_EQ(e.path(), "/nonexistent-dir/x.csv");
    }
}

TEST(Sweep, RowsAndRatios) {
    const auto cfg = scenario(0.5, 1.0, 1.0, 1.0, Preparation::ProductX);
    SweepSpec spec;
    spec.tau_grid = {0.4, 1.0};
    spec.n_list = {2, 1};
    spec.points_per_segment = 40;
    const auto rec = run_interval_sweep(cfg, spec);
    ASSERT_EQ(rec.rows.size(), 4u);
    EXPECT_EQ(rec.rows[0].tau, 0.4);
    EXPECT_EQ(rec.rows[0].n_measurements, 1);
    EXPECT_EQ(rec.rows[3].tau, 1.0);
    EXPECT_EQ(rec.rows[3].n_measurements, 2);
    for (const auto& r : rec.rows) {
        EXPECT_GT(r.c_reset_max, 0.0);
        EXPECT_EQ(r.ratio, r.c_max_tracked / r.c_reset_max);
    }
}

TEST(Sweep, MatchesTrajectoryWindowMaximum) {
    const auto cfg = scenario(0.5, 1.0, 0.8, 2.4, Preparation::ProductX, 0.8 / 40);
    SweepSpec spec;
    spec.tau_grid = {0.8};
    spec.n_list = {1, 2};
    spec.points_per_segment = 40;
    const auto sweep = run_interval_sweep(cfg, spec);
    const auto traj = run_trajectory(cfg);
    for (const auto& row : sweep.rows) {
        double tracked = 0.0, reset = 0.0;
        for (std::size_t i = 0; i < traj.rows.size(); ++i)
            if (traj.rows[i].segment == row.n_measurements && i % 40 != 0) {
                tracked = std::max(tracked, traj.rows[i].c_tracked);
                reset = std::max(reset, traj.rows[i].c_reset);
            }
        EXPECT_NEAR(row.c_max_tracked, tracked, 1e-12);
        EXPECT_NEAR(row.c_reset_max, reset, 1e-12);
    }
}

TEST(Sweep, Validation) {
    SweepSpec spec;
    spec.tau_grid = {1.0, 0.5};
    EXPECT_THROW(spec.validate(), ConfigError);
    spec.tau_grid = {0.5};
    spec.n_list = {4};
    EXPECT_THROW(spec.validate(), ConfigError);
    const auto g = SweepSpec::log_grid(0.05, 2.0, 40);
    ASSERT_EQ(g.size(), 40u);
    EXPECT_DOUBLE_EQ(g.front(), 0.05);
    EXPECT_DOUBLE_EQ(g.back(), 2.0);
}
