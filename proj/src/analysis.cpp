#include "rse/analysis.hpp"

#include "rse/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace rse {

namespace {

bool same_matrix(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (a.size() == 0) return true;
    const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    return (a - b).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

// Finite generalized eigenvalues of the compressed pencil z W E - W F.
std::vector<Complex> compressed_zeros(const Mat& F, const Mat& E, const Mat& W) {
    const Mat WF = W * F;
    const Mat WE = W * E;
    Eigen::GeneralizedEigenSolver<Mat> ges(WF, WE, false);
    if (ges.info() != Eigen::Success) {
        throw NumericalError("generalized eigenvalue solver failed on the system pencil");
    }
    std::vector<Complex> out;
    const auto alphas = ges.alphas();
    const auto betas = ges.betas();
    for (Eigen::Index i = 0; i < alphas.size(); ++i) {
        const double b = betas(i);
        const double a = std::abs(alphas(i));
        if (std::abs(b) <= 1e-10 * std::max(a, 1e-300)) continue;
        const Complex z = alphas(i) / b;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z) > 1e10) continue;
        out.push_back(z);
    }
    return out;
}

}  // namespace

CMat system_pencil(const ModeModel& mode, Complex z) {
    const int n = mode.n(), p = mode.p(), l = mode.l();
    CMat P(n + l, n + p);
    P.topLeftCorner(n, n) = z * CMat::Identity(n, n) - mode.A.cast<Complex>();
    P.topRightCorner(n, p) = -mode.G.cast<Complex>();
    P.bottomLeftCorner(l, n) = mode.C.cast<Complex>();
    P.bottomRightCorner(l, p) = mode.H.cast<Complex>();
    return P;
}

DetectabilityVerdict strong_detectability(const ModeModel& mode, std::uint64_t seed) {
    mode.validate();
    const int n = mode.n(), p = mode.p(), l = mode.l();
    DetectabilityVerdict v;
    v.full_rank = n + p;

    Rng rng(seed);
    for (int i = 0; i < 8; ++i) {
        const Complex z(rng.normal(), rng.normal());
        v.normal_rank = std::max(v.normal_rank, linalg::rank(system_pencil(mode, z), kAnalysisRankTol));
    }
    if (v.normal_rank < v.full_rank) {
        v.strongly_detectable = false;
        v.reason = "pencil rank deficient everywhere";
        return v;
    }

    // zE - F reproduces the pencil.
    Mat F(n + l, n + p);
    F << mode.A, mode.G, -mode.C, -mode.H;
    Mat E = Mat::Zero(n + l, n + p);
    E.topLeftCorner(n, n) = Mat::Identity(n, n);

    auto draw = [&]() {
        Mat W(n + p, n + l);
        for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = rng.normal();
        return compressed_zeros(F, E, W);
    };
    const std::vector<Complex> first = draw();
    std::vector<Complex> second = draw();

    for (const Complex& z : first) {
        const double tol = 1e-6 * std::max(1.0, std::abs(z));
        auto it = std::min_element(second.begin(), second.end(), [&](const Complex& a, const Complex& b) {
            return std::abs(a - z) < std::abs(b - z);
        });
        if (it == second.end() || std::abs(*it - z) > tol) continue;
        second.erase(it);
        if (linalg::rank(system_pencil(mode, z), kAnalysisRankTol) < v.normal_rank) {
            v.invariant_zeros.push_back(z);
        }
    }
    std::sort(v.invariant_zeros.begin(), v.invariant_zeros.end(), [](const Complex& a, const Complex& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    for (const Complex& z : v.invariant_zeros) {
        v.max_zero_modulus = std::max(v.max_zero_modulus, std::abs(z));
    }
    v.strongly_detectable = v.max_zero_modulus < 1.0;
    v.reason = v.strongly_detectable ? "full normal rank and all invariant zeros inside the unit circle"
                                     : "invariant zero on or outside the unit circle";
    return v;
}

BoundReport max_correctable(int l, int p) {
    BoundReport r;
    r.l = l;
    r.p_star_bound = l;
    r.entries.push_back({"", p, p <= l});
    r.all_within = p <= l;
    return r;
}

BoundReport max_correctable(const ModeSet& modes) {
    validate_mode_set(modes);
    BoundReport r;
    r.l = modes[0].l();
    r.p_star_bound = r.l;
    for (const ModeModel& m : modes) {
        const bool ok = m.p() <= r.l;
        r.entries.push_back({m.label, m.p(), ok});
        r.all_within = r.all_within && ok;
    }
    return r;
}

ResilienceReport resilience_guarantee(const ModeSet& modes) {
    validate_mode_set(modes);
    ResilienceReport rep;
    for (const ModeModel& m : modes) {
        if (!same_matrix(m.H, modes[0].H) || !same_matrix(m.D, modes[0].D)) {
            rep.hypothesis_holds = false;
            rep.reason = "hypothesis violated: H and D must be identical across modes ('" + m.label +
                         "' differs from '" + modes[0].label + "')";
            return rep;
        }
    }
    rep.hypothesis_holds = true;
    const int n = modes[0].n();
    std::vector<TransformedMode> tms;
    tms.reserve(modes.size());
    for (const ModeModel& m : modes) tms.push_back(transform(m));

    rep.guaranteed = true;
    for (size_t q = 0; q < modes.size(); ++q) {
        const Mat& T2 = tms[q].T2;
        for (size_t qp = 0; qp < modes.size(); ++qp) {
            PairCheck pc;
            pc.q = static_cast<int>(q);
            pc.q_prime = static_cast<int>(qp);
            pc.outputs_differ = !same_matrix(modes[q].C, modes[qp].C);
            if (pc.outputs_differ) {
                pc.required = 2 * n;
                pc.rank = linalg::rank(linalg::hstack(T2 * modes[qp].C, T2 * modes[q].C), kAnalysisRankTol);
            } else {
                pc.required = n;
                pc.rank = linalg::rank(Mat(T2 * modes[q].C), kAnalysisRankTol);
            }
            pc.satisfied = pc.rank == pc.required;
            if (T2.rows() < pc.required) {
                pc.note = "unsatisfiable: only " + std::to_string(T2.rows()) +
                          " attack-free output channels for a required rank of " + std::to_string(pc.required);
            }
            rep.guaranteed = rep.guaranteed && pc.satisfied;
            rep.pairs.push_back(pc);
        }
    }
    rep.reason = rep.guaranteed ? "all rank conditions hold" : "at least one rank condition fails";
    return rep;
}

Vec UnidentifiablePlan::mean(const TransformedMode& tq, const TransformedMode& tstar, const Vec& x_post_star,
                             const Vec& x_star_q, const Vec& u) const {
    if (masquerade == true_mode || !feasible) {
        return Vec::Zero(tstar.p());
    }
    const Vec mismatch =
        tstar.mode.C * x_post_star - tq.mode.C * x_star_q + (tstar.mode.D - tq.mode.D) * u;
    return -K_pinv * (T2q * mismatch);
}

UnidentifiablePlan synth_unidentifiable(const std::vector<TransformedMode>& modes, int q, int star,
                                        const AttackerMoments& moments) {
    const int N = static_cast<int>(modes.size());
    if (q < 0 || q >= N || star < 0 || star >= N) {
        throw ConfigError("red-team mode index out of range");
    }
    const TransformedMode& tq = modes[q];
    const TransformedMode& ts = modes[star];
    UnidentifiablePlan plan;
    plan.masquerade = q;
    plan.true_mode = star;
    plan.T2q = tq.T2;
    plan.K = tq.T2 * ts.mode.H;
    plan.K_pinv = linalg::pinv(plan.K);
    const int pstar = ts.p();

    if (q == star) {
        plan.feasible = true;
        plan.reason = "masquerading as the true mode needs no shaping";
        plan.Ds = Mat::Zero(pstar, pstar);
        plan.factor = Mat::Zero(pstar, pstar);
        return plan;
    }
    if (same_matrix(tq.mode.H, ts.mode.H)) {
        plan.reason = "infeasible: both modes share H, so T2^q H^* vanishes";
        return plan;
    }
    const int rows = static_cast<int>(plan.K.rows());
    if (rows == 0 || linalg::rank(plan.K, kAnalysisRankTol) < rows) {
        plan.reason = "infeasible: T2^q H^* does not have full row rank";
        return plan;
    }
    const int l = tq.mode.l();
    if (moments.second_moment.rows() != l || moments.second_moment.cols() != l) {
        throw DimensionError("attacker second moment must be l x l");
    }
    if (moments.S_star.rows() != rows || moments.S_star.cols() != rows) {
        plan.reason = "infeasible: the generalized innovations of the two modes differ in dimension";
        return plan;
    }
    const Mat middle = moments.S_star - tq.T2 * (moments.second_moment + tq.mode.R) * tq.T2.transpose();
    plan.Ds = linalg::symmetrize(plan.K_pinv * middle * plan.K_pinv.transpose());
    if (!linalg::is_psd(plan.Ds, 1e-9)) {
        plan.reason = "infeasible: attack covariance is indefinite (min eigenvalue " +
                      std::to_string(linalg::min_eigenvalue(plan.Ds)) + ")";
        return plan;
    }
    plan.feasible = true;
    plan.factor = linalg::psd_factor(plan.Ds);
    plan.reason = "feasible";
    return plan;
}

}  // namespace rse
