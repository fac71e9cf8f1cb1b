#include "rse/filter.hpp"
#include "rse/linalg.hpp"
#include "rse/sim.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rse;

TEST(Transform, NoFeedthroughKeepsWholeOutput) {
    const Mat A = 0.5 * Mat::Identity(2, 2);
    const ModeModel m = test::make_mode("h0", A, Mat::Identity(2, 1), Mat::Identity(3, 2), Mat::Zero(3, 1));
    const TransformedMode tm = transform(m);
    EXPECT_EQ(tm.p_H, 0);
    EXPECT_EQ(tm.T1.rows(), 0);
    EXPECT_EQ(tm.l2(), 3);
    EXPECT_LT((tm.T2.transpose() * tm.T2 - Mat::Identity(3, 3)).norm(), 1e-12);
}

TEST(Transform, SquareFeedthroughLeavesNoFreeOutput) {
    const Mat A = 0.5 * Mat::Identity(2, 2);
    const ModeModel m = test::make_mode("sq", A, Mat::Zero(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2));
    const TransformedMode tm = transform(m);
    EXPECT_EQ(tm.p_H, 2);
    EXPECT_EQ(tm.l2(), 0);
    EXPECT_EQ(tm.p2(), 0);
    const FilterState st = init_filter(tm, Vec::Zero(2), Mat::Identity(2, 2), Vec::Zero(1), Vec::Ones(2));
    const FilterState next = filter_step(tm, st, Vec::Zero(1), Vec::Zero(1), Vec::Ones(2));
    EXPECT_EQ(next.innovation.size(), 0);
    EXPECT_TRUE(next.x.allFinite());
    EXPECT_TRUE(linalg::is_psd(next.Px));
}

TEST(Transform, RandomRankTwoFeedthrough) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat H = test::random_matrix(rng, 5, 2) * test::random_matrix(rng, 2, 4);
        ModeModel m = test::make_mode("r", 0.5 * Mat::Identity(3, 3), test::random_matrix(rng, 3, 4),
                                      test::random_matrix(rng, 5, 3), H);
        m.R = test::random_spd(rng, 5);
        const TransformedMode tm = transform(m);
        ASSERT_EQ(tm.p_H, 2);
        const Mat recon = tm.U1 * tm.sigma.asDiagonal() * tm.V1.transpose();
        EXPECT_LT((recon - H).norm(), 1e-10 * H.norm());
        EXPECT_LT((tm.T1 * m.R * tm.T2.transpose()).norm(), 1e-10);
        Mat T(5, 5);
        T << tm.T1, tm.T2;
        EXPECT_LT(linalg::condition_number(T), 1e8);
        EXPECT_LT((tm.V.transpose() * tm.V - Mat::Identity(4, 4)).norm(), 1e-12);
        EXPECT_GT(linalg::min_eigenvalue(tm.R1), 0.0);
        EXPECT_GT(linalg::min_eigenvalue(tm.R2), 0.0);
    }
}

TEST(Transform, RejectsIndefiniteNoise) {
    ModeModel m = test::make_mode("bad", Mat::Identity(1, 1), Mat::Zero(1, 0), Mat::Identity(1, 1), Mat::Zero(1, 0));
    m.R(0, 0) = -1.0;
    EXPECT_ANY_THROW(transform(m));
}

TEST(InitFilter, ScalarFeedthroughRecoversAttack) {
    const ModeModel m =
        test::make_mode("s", 0.5 * Mat::Identity(1, 1), Mat::Zero(1, 1), Mat::Identity(1, 1), 2.0 * Mat::Ones(1, 1));
    const TransformedMode tm = transform(m);
    ASSERT_EQ(tm.p_H, 1);
    EXPECT_NEAR(tm.sigma(0), 2.0, 1e-14);
    // y0 - C x0 = 4
    const FilterState st = init_filter(tm, Vec::Zero(1), Mat::Identity(1, 1), Vec::Zero(1), 4.0 * Vec::Ones(1));
    EXPECT_NEAR(std::abs(st.d1(0)), 2.0, 1e-14);
    EXPECT_NEAR((tm.V1 * st.d1)(0), 2.0, 1e-14);
}

TEST(InitFilter, NoFeedthroughGivesEmptyAttackPart) {
    const ModeModel m =
        test::make_mode("n", 0.5 * Mat::Identity(2, 2), Mat::Identity(2, 1), Mat::Identity(2, 2), Mat::Zero(2, 1));
    const FilterState st = init_filter(transform(m), Vec::Zero(2), Mat::Identity(2, 2), Vec::Zero(1), Vec::Zero(2));
    EXPECT_EQ(st.d1.size(), 0);
    EXPECT_EQ(st.Pd1.size(), 0);
}

TEST(FilterStep, MatchesKalmanFilterWithoutAttack) {
    Rng rng(3);
    ModeModel m = test::make_mode("kf", (Mat(2, 2) << 0.9, 0.2, -0.1, 0.8).finished(), Mat::Zero(2, 0),
                                  test::random_matrix(rng, 2, 2), Mat::Zero(2, 0), 0.01, 0.1);
    m.B = test::random_matrix(rng, 2, 1);
    m.D = test::random_matrix(rng, 2, 1);
    const TransformedMode tm = transform(m);
    Vec x = Vec::Zero(2);
    Mat P = Mat::Identity(2, 2);
    FilterState st = init_filter(tm, x, P, Vec::Zero(1), Vec::Zero(2));
    Vec u_prev = Vec::Zero(1);
    for (int k = 1; k < 200; ++k) {
        const Vec u = Vec::Constant(1, std::sin(0.1 * k));
        const Vec y = test::random_matrix(rng, 2, 1);
        st = filter_step(tm, st, u_prev, u, y);
        const Vec xp = m.A * x + m.B * u_prev;
        const Mat Pp = m.A * P * m.A.transpose() + m.Q;
        const Mat S = m.C * Pp * m.C.transpose() + m.R;
        const Mat K = Pp * m.C.transpose() * S.inverse();
        x = xp + K * (y - m.C * xp - m.D * u);
        P = (Mat::Identity(2, 2) - K * m.C) * Pp;
        EXPECT_LT((st.x - x).norm(), 1e-9 * (1.0 + x.norm()));
        EXPECT_LT((st.Px - P).norm(), 1e-9 * P.norm());
        u_prev = u;
    }
}

TEST(FilterStep, UnbiasedOnUnstableExample) {
    const PlantTopology t = test::unstable_topology();
    const ModeSet modes{build_mode(t, AttackSupport::from_signals(t, 0, {0, 1}))};
    Scenario sc;
    sc.horizon = 40;
    sc.mode_schedule = {{0, 0}};
    sc.attack_profiles = {SignalProfile::constant(0.5), SignalProfile::sine(0.2, 7.0)};
    sc.x0 = Vec::Zero(2);
    sc.x0_hat = Vec::Zero(2);
    sc.P0 = 1e-4 * Mat::Identity(2, 2);
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < 500; ++s) seeds.push_back(9000 + s);
    const std::vector<Trace> traces = simulate_batch(modes, sc, {}, seeds, 1);
    // Final quarter of the horizon.
    for (int k = 30; k < 40; ++k) {
        Vec sum = Vec::Zero(2), sq = Vec::Zero(2);
        for (const Trace& tr : traces) {
            const Vec e = tr.rows[k].x_hat - tr.rows[k].x;
            sum += e;
            sq += e.cwiseProduct(e);
        }
        const double N = static_cast<double>(traces.size());
        const Vec mean = sum / N;
        for (int i = 0; i < 2; ++i) {
            const double se = std::sqrt((sq(i) / N - mean(i) * mean(i)) / N);
            EXPECT_LE(std::abs(mean(i)), 3.0 * se + 1e-12) << "k=" << k << " i=" << i;
        }
    }
}

TEST(FilterStep, CovariancesStayPsd) {
    const Benchmark b = build_benchmark();
    Rng rng(5);
    for (const ModeModel& m : b.modes) {
        const TransformedMode tm = transform(m);
        FilterState st = init_filter(tm, Vec::Zero(m.n()), Mat::Identity(m.n(), m.n()), Vec::Zero(m.m()),
                                     Vec::Zero(m.l()));
        for (int k = 0; k < 100; ++k) {
            st = filter_step(tm, st, Vec::Zero(m.m()), Vec::Zero(m.m()), 0.01 * test::random_matrix(rng, m.l(), 1));
            ASSERT_TRUE(linalg::is_psd(st.Px));
            ASSERT_TRUE(linalg::is_psd(st.P_star));
            ASSERT_TRUE(linalg::is_psd(st.R2_star));
            ASSERT_TRUE(linalg::is_psd(st.Pd));
        }
    }
}
