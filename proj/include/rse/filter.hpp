#pragma once

#include "rse/linalg.hpp"
#include "rse/model.hpp"

namespace rse {

/// Output decoupling of one mode: z1 = T1 y sees the attack through Sigma,
/// z2 = T2 y is free of it, and the two noise parts are uncorrelated.
struct TransformedMode {
    ModeModel mode;

    int p_H = 0;  // rank of H
    Vec sigma;    // nonzero singular values of H (length p_H)
    Mat U1, U2, V1, V2, V;
    Mat T1, T2;
    Mat C1, C2, D1, D2, G1, G2, R1, R2;

    int n() const { return mode.n(); }
    int p() const { return mode.p(); }
    int p2() const { return mode.p() - p_H; }
    int l2() const { return static_cast<int>(T2.rows()); }

    Mat sigma_inv() const;
    Vec z1(const Vec& y) const { return T1 * y; }
    Vec z2(const Vec& y) const { return T2 * y; }
};

TransformedMode transform(const ModeModel& mode);

struct FilterState {
    int k = 0;

    Vec x;      // posterior state estimate
    Mat Px;
    Vec d1;     // feedthrough attack part at the current step
    Mat Pd1;
    Mat M1;

    // Intermediates of the most recent step.
    Vec x_pred;  // A x + B u_prev + G1 d1_prev
    Vec x_star;
    Mat P_star;
    Mat P_tilde;
    Mat R2_tilde;
    Mat R2_star;
    Mat M2;
    Mat L;
    Vec d2;      // dynamics-only attack part of the previous step
    Mat Pd2;
    Vec d;       // full attack estimate of the previous step
    Mat Pd;
    Vec innovation;  // z2 - C2 x_star - D2 u_now
};

FilterState init_filter(const TransformedMode& tm, const Vec& x0_hat, const Mat& P0, const Vec& u0,
                        const Vec& y0);

/// One step of the mode-matched input and state filter. Throws FilterError.
FilterState filter_step(const TransformedMode& tm, const FilterState& st, const Vec& u_prev,
                        const Vec& u_now, const Vec& y_now);

/// Gains and covariances after the data-independent covariance recursion has
/// settled (or after max_iter steps).
struct SteadyStateGains {
    Mat M1, M2, L;
    Mat Px, P_star, R2_star;
    int iterations = 0;
    bool converged = false;
};

SteadyStateGains steady_state_gains(const TransformedMode& tm, const Mat& P0, int max_iter = 20000,
                                    double tol = 1e-12);

}  // namespace rse
