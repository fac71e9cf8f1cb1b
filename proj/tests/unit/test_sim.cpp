#include "rse/errors.hpp"
#include "rse/linalg.hpp"
#include "rse/network.hpp"
#include "rse/sim.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace rse;

TEST(Simulate, NoiseFreeExactStartHasNoError) {
    Benchmark b = build_benchmark();
    Scenario sc = b.scenario;
    sc.noise = false;
    sc.horizon = 300;
    sc.mode_schedule = {{0, 2}};
    sc.attack_profiles.assign(sc.attack_profiles.size(), SignalProfile{});
    sc.x0 = Vec::Zero(b.modes[0].n());
    sc.x0_hat = sc.x0;
    const Trace tr = simulate(b.modes, sc);
    ASSERT_FALSE(tr.truncated);
    for (const TraceRow& r : tr.rows) EXPECT_LE((r.x_hat - r.x).norm(), 1e-9) << "k=" << r.k;
}

TEST(Simulate, SeedDeterminism) {
    Benchmark b = build_benchmark();
    b.scenario.horizon = 200;
    b.scenario.mode_schedule = {{0, 2}};
    const Trace a = simulate(b.modes, b.scenario), c = simulate(b.modes, b.scenario);
    ASSERT_EQ(a.rows.size(), c.rows.size());
    for (size_t k = 0; k < a.rows.size(); ++k) {
        EXPECT_EQ(a.rows[k].x, c.rows[k].x);
        EXPECT_EQ(a.rows[k].x_hat, c.rows[k].x_hat);
        EXPECT_EQ(a.rows[k].mu, c.rows[k].mu);
    }
    b.scenario.seed += 1;
    const Trace d = simulate(b.modes, b.scenario);
    EXPECT_NE(a.rows.back().x, d.rows.back().x);
}

TEST(Simulate, BatchIndependentOfThreadCount) {
    Benchmark b = build_benchmark();
    b.scenario.horizon = 100;
    b.scenario.mode_schedule = {{0, 2}};
    const std::vector<std::uint64_t> seeds{3, 1, 4, 1, 5};
    const auto one = simulate_batch(b.modes, b.scenario, {}, seeds, 1);
    const auto many = simulate_batch(b.modes, b.scenario, {}, seeds, 3);
    for (size_t i = 0; i < seeds.size(); ++i) EXPECT_EQ(one[i].rows.back().x_hat, many[i].rows.back().x_hat);
    EXPECT_EQ(one[1].rows.back().x, one[3].rows.back().x);
}

TEST(Simulate, BenchmarkTracksModeSwitch) {
    const Benchmark b = build_benchmark();
    const Trace tr = simulate(b.modes, b.scenario);
    EXPECT_EQ(tr.rows[450].q_hat, 2);
    EXPECT_EQ(tr.rows.back().q_hat, 1);
    EXPECT_GT(tr.rows.back().mu(1), 0.9);
}

TEST(Rng, CorrelatedDrawsMatchCovariance) {
    Rng rng(77);
    const Mat R = (Mat(3, 3) << 2, 0.5, 0, 0.5, 1, 0.3, 0, 0.3, 0.5).finished();
    const Mat F = linalg::psd_factor(R);
    const int N = 100000;
    Mat acc = Mat::Zero(3, 3);
    for (int i = 0; i < N; ++i) {
        const Vec v = rng.correlated(F);
        acc += v * v.transpose();
    }
    EXPECT_LT((acc / N - R).norm() / R.norm(), 0.02);
}

TEST(Scenario, ScheduleAndInputs) {
    const Benchmark b = build_benchmark();
    EXPECT_EQ(b.scenario.mode_at(0), 2);
    EXPECT_EQ(b.scenario.mode_at(499), 2);
    EXPECT_EQ(b.scenario.mode_at(500), 1);
    EXPECT_DOUBLE_EQ(b.scenario.input_at(200, 1)(0), 2.0);
    EXPECT_DOUBLE_EQ(b.scenario.input_at(600, 1)(0), -2.0);
    EXPECT_DOUBLE_EQ(b.scenario.input_at(400, 1)(0), 0.0);
}

TEST(Scenario, RejectsBadModeReference) {
    Benchmark b = build_benchmark();
    b.scenario.mode_schedule = {{0, 9}};
    EXPECT_THROW(b.scenario.validate(b.modes), ConfigError);
}

TEST(Benchmark, MatchesListing) {
    const Benchmark b = build_benchmark();
    const ModeModel& m = b.modes[0];
    EXPECT_DOUBLE_EQ(m.A(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(m.Q(0, 0), 1e-4);
    EXPECT_DOUBLE_EQ(m.Q(1, 2), 0.5e-4);
    EXPECT_DOUBLE_EQ(m.R(0, 3), 0.5e-4);
    EXPECT_DOUBLE_EQ(m.R(4, 4), 1e-4);
    EXPECT_EQ(b.topology.sensor_matrix.row(4).norm(), 0.0);
    ASSERT_EQ(b.modes.size(), 5u);
    for (int q = 0; q < 4; ++q) {
        EXPECT_EQ(b.modes[q].signals.front(), 0) << "actuator in mode " << q + 1;
        EXPECT_EQ(b.modes[q].signals.size(), 4u);
    }
    EXPECT_EQ(b.modes[4].signals, (std::vector<int>{1, 2, 3, 4}));
}

TEST(Profile, Shapes) {
    EXPECT_DOUBLE_EQ(SignalProfile{}.value(3.0), 0.0);
    EXPECT_DOUBLE_EQ(SignalProfile::constant(2.0, 1.0, 2.0).value(0.5), 0.0);
    EXPECT_DOUBLE_EQ(SignalProfile::constant(2.0, 1.0, 2.0).value(1.5), 2.0);
    EXPECT_DOUBLE_EQ(SignalProfile::constant(2.0, 1.0, 2.0).value(2.0), 0.0);
    EXPECT_NEAR(SignalProfile::sine(3.0, 4.0).value(1.0), 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(SignalProfile::ramp(2.0, 1.0).value(3.0), 4.0);
}

TEST(Network, Defaults) {
    const PowerNetwork net = make_network(3, {0}, {{0, 1, 1.5}, {1, 2, 1.5}});
    EXPECT_DOUBLE_EQ(net.buses[0].inertia, 10.0);
    EXPECT_DOUBLE_EQ(net.buses[1].inertia, 100.0);
    EXPECT_DOUBLE_EQ(net.buses[2].damping, 1.0);
    EXPECT_DOUBLE_EQ(net.lines[0].susceptance, 1.5);
    EXPECT_DOUBLE_EQ(net.dt, 0.01);
    EXPECT_DOUBLE_EQ(net.process_noise, 0.01);
    EXPECT_DOUBLE_EQ(net.measurement_noise, 1e-8);
    EXPECT_EQ(net.n(), 6);
    EXPECT_EQ(net.m(), 4);
    EXPECT_EQ(net.l(), 9);
}

TEST(Network, LineRemovalOnlyTouchesEndpointRows) {
    const PowerNetwork net = make_network(3, {0}, {{0, 1, 1.5}, {1, 2, 1.5}, {0, 2, 1.5}});
    const OperationMode full = discretize(net, {}, "full");
    const OperationMode cut = discretize(net, {{2, 0}}, "cut");
    const Mat diff = full.A - cut.A;
    for (int r = 0; r < diff.rows(); ++r) {
        const bool endpoint_omega = r == 1 || r == 5;
        EXPECT_EQ(diff.row(r).norm() > 0.0, endpoint_omega) << "row " << r;
    }
    EXPECT_NEAR(diff(1, 0), -0.01 * 1.5 / 10.0, 1e-15);
    EXPECT_THROW(discretize(net, {{1, 1}}, "bad"), ConfigError);
}

TEST(Network, ThreeAreaModes) {
    const ThreeArea ta = three_area_network();
    EXPECT_EQ(ta.model.topology.t_m(), 4);
    EXPECT_EQ(ta.model.modes.size(), 12u);
    EXPECT_EQ(component_count(ta.network, {{0, 3}}), 2);
}

TEST(Network, Ieee68SecondMode) {
    const auto modes = ieee68_attack_modes();
    ASSERT_EQ(modes.size(), 8u);
    const PowerAttackMode& q2 = modes[1];
    EXPECT_EQ(q2.removed_lines, (LineSet{{17, 48}, {17, 49}}));
    EXPECT_EQ(q2.attacked_generators, std::vector<int>{1});
    const SignalProfile d = ieee68_attack_profile();
    EXPECT_NEAR(d.value(0.5), 500.0, 1e-9);
    EXPECT_NEAR(d.value(2.0), 500.0, 1e-9);
    EXPECT_NEAR(d.value(3.0), -250.0, 1e-9);
    EXPECT_NEAR(d.value(6.0), 0.0, 1e-9);
}
