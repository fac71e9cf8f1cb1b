#pragma once

#include "rse/filter.hpp"

#include <limits>
#include <vector>

namespace rse {

/// State and input weights; empty matrices mean identity.
struct LqrWeights {
    Mat Q;
    Mat R;
};

struct LqrResult {
    Mat K;
    Mat P;
    int iterations = 0;
    double spectral_radius = 0.0;  // of A - B K
};

/// Infinite-horizon discrete LQR by Riccati iteration. Throws NumericalError
/// ("unstabilizable") when the iteration diverges or stalls.
LqrResult lqr(const Mat& A, const Mat& B, const LqrWeights& weights = {}, double tol = 1e-10,
              int max_iter = 1000000);

Mat design_feedback(const Mat& A, const Mat& B, const LqrWeights& weights = {});

struct RejectionGains {
    Mat J1, J2;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    bool j2_disabled = false;
};

/// Minimizers of ||G_i - B J_i||_2, J_i = pinv(B) G_i. J2 is zero when the
/// attack's rate bound exceeds its magnitude bound.
RejectionGains design_rejection(const Mat& B, const Mat& G1, const Mat& G2, double d2_bound,
                                double d2_rate_bound);

struct ControllerDesign {
    std::vector<int> control_inputs;  // columns of B the controller drives; empty = all
    LqrWeights weights;
    double d2_bound = std::numeric_limits<double>::infinity();
    double d2_rate_bound = 0.0;
    bool reject_attacks = true;  // false gives plain state feedback
};

struct ControllerGains {
    std::vector<int> control_inputs;
    Mat S;  // m x m_c selector
    Mat Kc;
    Mat J1, J2;
    Mat J_tilde;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double spectral_radius = 0.0;
    SteadyStateGains filter;
};

/// Full design for one mode. Throws ConfigError when J_tilde is badly conditioned.
ControllerGains design_controller(const TransformedMode& tm, const ControllerDesign& design);

struct ControlOutput {
    Vec u;    // full input vector: u_exogenous + S u_c
    Vec u_c;  // controller part
    Vec d1;   // current-step feedthrough attack estimate
    Vec d2;   // previous-step dynamics attack estimate
};

/// Resolves the coupled attack estimates and returns
/// u = u_exo + S (-Kc (x_hat - x_ref) - J1 d1 - J2 d2).
ControlOutput control_step(const ControllerGains& g, const TransformedMode& tm, const Vec& y_now,
                           const Vec& x_hat, const Vec& x_hat_pred, const Mat& M1, const Mat& M2,
                           const Vec& u_exo, const Vec& x_ref);

ControlOutput control_step(const ControllerGains& g, const TransformedMode& tm, const FilterState& st,
                           const Vec& y_now, const Vec& u_exo, const Vec& x_ref);

/// Joint state / estimation-error transition matrix (2n x 2n).
Mat closed_loop_matrix(const TransformedMode& tm, const ControllerGains& g, const Mat& L, const Mat& M1,
                       const Mat& M2);

}  // namespace rse
