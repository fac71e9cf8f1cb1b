#include "rse/filter.hpp"

#include "rse/errors.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace rse {

namespace {

void expect_len(const Vec& v, Eigen::Index n, const char* name) {
    if (v.size() != n) {
        throw DimensionError(std::string(name) + " has length " + std::to_string(v.size()) + ", expected " +
                             std::to_string(n));
    }
}

// Linear solve that reports conditioning trouble as a filter failure.
Mat filter_solve(const Mat& a, const Mat& b, const char* what, int k) {
    try {
        return linalg::solve_spd(a, b, what);
    } catch (const NumericalError& e) {
        throw FilterError(FilterError::Kind::IllConditioned,
                          "step " + std::to_string(k) + ": " + e.what());
    }
}

}  // namespace

Mat TransformedMode::sigma_inv() const {
    return sigma.cwiseInverse().asDiagonal();
}

TransformedMode transform(const ModeModel& mode) {
    mode.validate();
    TransformedMode tm;
    tm.mode = mode;
    const int l = mode.l();
    const int p = mode.p();

    Mat U = Mat::Identity(l, l);
    Mat V = Mat::Identity(p, p);
    if (p > 0 && mode.H.cwiseAbs().maxCoeff() > 0.0) {
        Eigen::JacobiSVD<Mat> svd(mode.H, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Vec& s = svd.singularValues();
        const double cutoff = linalg::kPinvTol * s(0);
        tm.p_H = static_cast<int>((s.array() > cutoff).count());
        tm.sigma = s.head(tm.p_H);
        U = svd.matrixU();
        V = svd.matrixV();
    } else {
        tm.sigma = Vec(0);
    }
    const int pH = tm.p_H;

    tm.U1 = U.leftCols(pH);
    tm.U2 = U.rightCols(l - pH);
    tm.V1 = V.leftCols(pH);
    tm.V2 = V.rightCols(p - pH);
    tm.V = V;

    const Mat& R = mode.R;
    tm.T2 = tm.U2.transpose();
    if (l - pH > 0) {
        const Mat RU2 = R * tm.U2;
        const Mat core = tm.U2.transpose() * RU2;
        const Mat corr = linalg::solve_spd(core, tm.U2.transpose(), "U2' R U2");
        tm.T1 = tm.U1.transpose() - tm.U1.transpose() * RU2 * corr;
    } else {
        tm.T1 = tm.U1.transpose();
    }

    tm.C1 = tm.T1 * mode.C;
    tm.C2 = tm.T2 * mode.C;
    tm.D1 = tm.T1 * mode.D;
    tm.D2 = tm.T2 * mode.D;
    tm.G1 = mode.G * tm.V1;
    tm.G2 = mode.G * tm.V2;
    tm.R1 = linalg::symmetrize(tm.T1 * R * tm.T1.transpose());
    tm.R2 = linalg::symmetrize(tm.T2 * R * tm.T2.transpose());
    return tm;
}

FilterState init_filter(const TransformedMode& tm, const Vec& x0_hat, const Mat& P0, const Vec& u0,
                        const Vec& y0) {
    const ModeModel& md = tm.mode;
    expect_len(x0_hat, md.n(), "x0_hat");
    expect_len(u0, md.m(), "u0");
    expect_len(y0, md.l(), "y0");
    if (P0.rows() != md.n() || P0.cols() != md.n()) {
        throw DimensionError("P0 must be n x n");
    }
    if (!linalg::is_psd(P0)) {
        throw ConfigError("P0 must be positive semidefinite");
    }
    FilterState st;
    st.k = 0;
    st.x = x0_hat;
    st.Px = linalg::symmetrize(P0);
    st.M1 = tm.sigma_inv();
    st.d1 = st.M1 * (tm.z1(y0) - tm.C1 * x0_hat - tm.D1 * u0);
    st.Pd1 = linalg::symmetrize(st.M1 * (tm.C1 * st.Px * tm.C1.transpose() + tm.R1) * st.M1);
    st.x_pred = x0_hat;
    st.x_star = x0_hat;
    st.P_star = st.Px;
    st.M2 = Mat::Zero(tm.p2(), tm.l2());
    st.L = Mat::Zero(md.n(), tm.l2());
    st.d2 = Vec::Zero(tm.p2());
    st.d = Vec::Zero(tm.p());
    st.innovation = Vec::Zero(tm.l2());
    return st;
}

FilterState filter_step(const TransformedMode& tm, const FilterState& st, const Vec& u_prev,
                        const Vec& u_now, const Vec& y_now) {
    const ModeModel& md = tm.mode;
    const int n = md.n();
    const int k = st.k + 1;
    expect_len(u_prev, md.m(), "u_prev");
    expect_len(u_now, md.m(), "u_now");
    expect_len(y_now, md.l(), "y_now");

    const Mat& A = md.A;
    const Mat& M1 = st.M1;
    const Mat I = Mat::Identity(n, n);
    const Vec z1 = tm.z1(y_now);
    const Vec z2 = tm.z2(y_now);

    FilterState out;
    out.k = k;

    // Attack estimation for d2 (previous step) and time update.
    const Mat G1M1 = tm.G1 * M1;
    const Mat A_hat = A - G1M1 * tm.C1;
    const Mat Q_hat = G1M1 * tm.R1 * G1M1.transpose() + md.Q;
    out.P_tilde = linalg::symmetrize(A_hat * st.Px * A_hat.transpose() + Q_hat);
    out.R2_tilde = linalg::symmetrize(tm.C2 * out.P_tilde * tm.C2.transpose() + tm.R2);

    const int p2 = tm.p2();
    const Mat C2G2 = tm.C2 * tm.G2;
    if (p2 > 0) {
        if (linalg::rank(C2G2, linalg::kPinvTol) < p2) {
            throw FilterError(FilterError::Kind::NotStronglyDetectable,
                              "step " + std::to_string(k) + ": mode '" + md.label +
                                  "' is not strongly detectable at runtime (C2*G2 lost column rank)");
        }
        const Mat Rinv_C2G2 = filter_solve(out.R2_tilde, C2G2, "R2_tilde", k);
        const Mat info = C2G2.transpose() * Rinv_C2G2;
        out.Pd2 = linalg::symmetrize(filter_solve(info, Mat::Identity(p2, p2), "G2' C2' R2_tilde^-1 C2 G2", k));
        out.M2 = out.Pd2 * Rinv_C2G2.transpose();
    } else {
        out.Pd2 = Mat::Zero(0, 0);
        out.M2 = Mat::Zero(0, tm.l2());
    }

    out.x_pred = A * st.x + md.B * u_prev + tm.G1 * st.d1;
    out.d2 = out.M2 * (z2 - tm.C2 * out.x_pred - tm.D2 * u_now);
    out.d = tm.V1 * st.d1 + tm.V2 * out.d2;

    const Mat C2tM2t = tm.C2.transpose() * out.M2.transpose();
    const Mat Pd12 = M1 * tm.C1 * st.Px * A.transpose() * C2tM2t - st.Pd1 * tm.G1.transpose() * C2tM2t;
    Mat Pd_blk(tm.p(), tm.p());
    Pd_blk.topLeftCorner(tm.p_H, tm.p_H) = st.Pd1;
    Pd_blk.topRightCorner(tm.p_H, p2) = Pd12;
    Pd_blk.bottomLeftCorner(p2, tm.p_H) = Pd12.transpose();
    Pd_blk.bottomRightCorner(p2, p2) = out.Pd2;
    out.Pd = linalg::symmetrize(tm.V * Pd_blk * tm.V.transpose());

    out.x_star = out.x_pred + tm.G2 * out.d2;
    const Mat G2M2 = tm.G2 * out.M2;
    const Mat IGMC = I - G2M2 * tm.C2;
    out.P_star = linalg::symmetrize(G2M2 * tm.R2 * G2M2.transpose() + IGMC * out.P_tilde * IGMC.transpose());

    // Measurement update.
    const Mat C2G2M2R2 = tm.C2 * G2M2 * tm.R2;
    out.R2_star = linalg::symmetrize(tm.C2 * out.P_star * tm.C2.transpose() + tm.R2 - C2G2M2R2 -
                                     C2G2M2R2.transpose());
    const Mat P_breve = out.P_star * tm.C2.transpose() - G2M2 * tm.R2;
    out.L = P_breve * linalg::pinv(out.R2_star);
    out.innovation = z2 - tm.C2 * out.x_star - tm.D2 * u_now;
    out.x = out.x_star + out.L * out.innovation;
    const Mat LPb = out.L * P_breve.transpose();
    out.Px = linalg::symmetrize(out.P_star + out.L * out.R2_star * out.L.transpose() - LPb - LPb.transpose());

    // Feedthrough attack estimate at the current step.
    out.M1 = M1;
    const Mat R1_tilde = tm.C1 * out.Px * tm.C1.transpose() + tm.R1;
    out.Pd1 = linalg::symmetrize(M1 * R1_tilde * M1.transpose());
    out.d1 = M1 * (z1 - tm.C1 * out.x - tm.D1 * u_now);
    return out;
}

SteadyStateGains steady_state_gains(const TransformedMode& tm, const Mat& P0, int max_iter, double tol) {
    const ModeModel& md = tm.mode;
    const Vec u = Vec::Zero(md.m());
    const Vec y = Vec::Zero(md.l());
    FilterState st = init_filter(tm, Vec::Zero(md.n()), P0, u, y);
    SteadyStateGains out;
    for (int i = 0; i < max_iter; ++i) {
        FilterState next = filter_step(tm, st, u, u, y);
        const double scale = std::max(1.0, next.Px.norm());
        const double change = (next.Px - st.Px).norm() / scale;
        st = std::move(next);
        out.iterations = i + 1;
        if (change < tol) {
            out.converged = true;
            break;
        }
    }
    out.M1 = st.M1;
    out.M2 = st.M2;
    out.L = st.L;
    out.Px = st.Px;
    out.P_star = st.P_star;
    out.R2_star = st.R2_star;
    return out;
}

}  // namespace rse
