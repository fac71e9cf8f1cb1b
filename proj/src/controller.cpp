#include "rse/controller.hpp"

#include "rse/errors.hpp"

#include <cmath>

namespace rse {

namespace {

Mat selector(int m, const std::vector<int>& cols) {
    Mat S = Mat::Zero(m, static_cast<Eigen::Index>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] < 0 || cols[j] >= m) {
            throw ConfigError("control input index " + std::to_string(cols[j]) + " out of range");
        }
        S(cols[j], static_cast<Eigen::Index>(j)) = 1.0;
    }
    return S;
}

}  // namespace

LqrResult lqr(const Mat& A, const Mat& B, const LqrWeights& weights, double tol, int max_iter) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    if (A.cols() != n || B.rows() != n) {
        throw DimensionError("lqr: A must be n x n and B n x m");
    }
    const Mat Q = weights.Q.size() ? weights.Q : Mat(Mat::Identity(n, n));
    const Mat R = weights.R.size() ? weights.R : Mat(Mat::Identity(m, m));
    if (Q.rows() != n || R.rows() != m) {
        throw DimensionError("lqr: weight sizes do not match A and B");
    }
    LqrResult out;
    Mat P = Q;
    for (int it = 1; it <= max_iter; ++it) {
        const Mat BtP = B.transpose() * P;
        const Mat gain = linalg::solve_spd(R + BtP * B, BtP * A, "R + B' P B");
        Mat next = linalg::symmetrize(Q + A.transpose() * P * A - A.transpose() * P * B * gain);
        const double scale = std::max(1.0, next.norm());
        const double change = (next - P).norm() / scale;
        P = std::move(next);
        if (!std::isfinite(scale) || scale > 1e14) {
            throw NumericalError("unstabilizable: Riccati iteration diverged");
        }
        if (change < tol) {
            out.iterations = it;
            out.P = P;
            out.K = linalg::solve_spd(R + B.transpose() * P * B, B.transpose() * P * A, "R + B' P B");
            out.spectral_radius = linalg::spectral_radius(A - B * out.K);
            if (out.spectral_radius >= 1.0) {
                throw NumericalError("unstabilizable: closed-loop spectral radius " +
                                     std::to_string(out.spectral_radius));
            }
            return out;
        }
    }
    throw NumericalError("unstabilizable: Riccati iteration did not settle");
}

Mat design_feedback(const Mat& A, const Mat& B, const LqrWeights& weights) {
    return lqr(A, B, weights).K;
}

RejectionGains design_rejection(const Mat& B, const Mat& G1, const Mat& G2, double d2_bound,
                                double d2_rate_bound) {
    const Mat Bp = linalg::pinv(B);
    const Mat proj = Mat::Identity(B.rows(), B.rows()) - B * Bp;
    RejectionGains r;
    r.J1 = Bp * G1;
    r.gamma1 = linalg::spectral_norm(proj * G1);
    r.j2_disabled = d2_rate_bound > d2_bound;
    if (r.j2_disabled) {
        r.J2 = Mat::Zero(B.cols(), G2.cols());
        r.gamma2 = linalg::spectral_norm(G2);
    } else {
        r.J2 = Bp * G2;
        r.gamma2 = linalg::spectral_norm(proj * G2);
    }
    return r;
}

ControllerGains design_controller(const TransformedMode& tm, const ControllerDesign& design) {
    const ModeModel& md = tm.mode;
    ControllerGains g;
    g.control_inputs = design.control_inputs;
    if (g.control_inputs.empty()) {
        for (int j = 0; j < md.m(); ++j) g.control_inputs.push_back(j);
    }
    g.S = selector(md.m(), g.control_inputs);
    const Mat BS = md.B * g.S;
    const LqrResult lq = lqr(md.A, BS, design.weights);
    g.Kc = lq.K;
    g.spectral_radius = lq.spectral_radius;

    const int mc = static_cast<int>(g.S.cols());
    if (design.reject_attacks) {
        const RejectionGains rj = design_rejection(BS, tm.G1, tm.G2, design.d2_bound, design.d2_rate_bound);
        g.J1 = rj.J1;
        g.J2 = rj.J2;
        g.gamma1 = rj.gamma1;
        g.gamma2 = rj.gamma2;
    } else {
        g.J1 = Mat::Zero(mc, tm.p_H);
        g.J2 = Mat::Zero(mc, tm.p2());
        g.gamma1 = linalg::spectral_norm(tm.G1);
        g.gamma2 = linalg::spectral_norm(tm.G2);
    }

    g.filter = steady_state_gains(tm, Mat::Identity(md.n(), md.n()));
    const int pH = tm.p_H, p2 = tm.p2();
    const Mat D1S = tm.D1 * g.S;
    const Mat D2S = tm.D2 * g.S;
    g.J_tilde = Mat::Identity(pH + p2, pH + p2);
    if (pH > 0) {
        g.J_tilde.topLeftCorner(pH, pH) -= g.filter.M1 * D1S * g.J1;
        g.J_tilde.topRightCorner(pH, p2) -= g.filter.M1 * D1S * g.J2;
    }
    if (p2 > 0) {
        g.J_tilde.bottomLeftCorner(p2, pH) -= g.filter.M2 * D2S * g.J1;
        g.J_tilde.bottomRightCorner(p2, p2) -= g.filter.M2 * D2S * g.J2;
    }
    const double cond = linalg::condition_number(g.J_tilde);
    if (!(cond <= linalg::kMaxCondition)) {
        throw ConfigError("controller for mode '" + md.label + "' rejected: J_tilde condition number " +
                          std::to_string(cond));
    }
    return g;
}

ControlOutput control_step(const ControllerGains& g, const TransformedMode& tm, const Vec& y_now,
                           const Vec& x_hat, const Vec& x_hat_pred, const Mat& M1, const Mat& M2,
                           const Vec& u_exo, const Vec& x_ref) {
    const int pH = tm.p_H, p2 = tm.p2();
    const Mat D1S = tm.D1 * g.S;
    const Mat D2S = tm.D2 * g.S;
    const Vec u_fb = -g.Kc * (x_hat - x_ref);

    Mat Jt = Mat::Identity(pH + p2, pH + p2);
    Vec rhs(pH + p2);
    if (pH > 0) {
        Jt.topLeftCorner(pH, pH) -= M1 * D1S * g.J1;
        Jt.topRightCorner(pH, p2) -= M1 * D1S * g.J2;
        rhs.head(pH) = M1 * (tm.z1(y_now) - tm.C1 * x_hat - tm.D1 * u_exo - D1S * u_fb);
    }
    if (p2 > 0) {
        Jt.bottomLeftCorner(p2, pH) -= M2 * D2S * g.J1;
        Jt.bottomRightCorner(p2, p2) -= M2 * D2S * g.J2;
        rhs.tail(p2) = M2 * (tm.z2(y_now) - tm.C2 * x_hat_pred - tm.D2 * u_exo - D2S * u_fb);
    }

    Vec d(pH + p2);
    if (pH + p2 > 0) {
        if (linalg::condition_number(Jt) > linalg::kMaxCondition) {
            throw NumericalError("J_tilde is ill-conditioned at runtime");
        }
        d = Jt.partialPivLu().solve(rhs);
    }
    ControlOutput out;
    out.d1 = d.head(pH);
    out.d2 = d.tail(p2);
    out.u_c = u_fb - g.J1 * out.d1 - g.J2 * out.d2;
    out.u = u_exo + g.S * out.u_c;
    return out;
}

ControlOutput control_step(const ControllerGains& g, const TransformedMode& tm, const FilterState& st,
                           const Vec& y_now, const Vec& u_exo, const Vec& x_ref) {
    return control_step(g, tm, y_now, st.x, st.x_pred, st.M1, st.M2, u_exo, x_ref);
}

Mat closed_loop_matrix(const TransformedMode& tm, const ControllerGains& g, const Mat& L, const Mat& M1,
                       const Mat& M2) {
    const ModeModel& md = tm.mode;
    const int n = md.n();
    const Mat I = Mat::Identity(n, n);
    const Mat BS = md.B * g.S;
    const Mat A_bar = (I - tm.G2 * M2 * tm.C2) * (md.A - tm.G1 * M1 * tm.C1);
    Mat out = Mat::Zero(2 * n, 2 * n);
    out.topLeftCorner(n, n) = md.A - BS * g.Kc;
    out.topRightCorner(n, n) =
        BS * (g.Kc - g.J1 * M1 * tm.C1 - g.J2 * M2 * tm.C2 * (md.A + tm.G1 * M1 * tm.C1));
    out.bottomRightCorner(n, n) = (I - L * tm.C2) * A_bar;
    return out;
}

}  // namespace rse
