#include "rse/mm_estimator.hpp"

#include "rse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rse {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Vec generalized_innovation(const TransformedMode& tm, const FilterState& st, const Vec& u_now,
                           const Vec& y_now, int bank_size) {
    if (tm.l2() == 0 && bank_size > 1) {
        throw ConfigError("mode '" + tm.mode.label +
                          "' has no attack-free output channel; mode probabilities cannot be computed");
    }
    return tm.z2(y_now) - tm.C2 * st.x_star - tm.D2 * u_now;
}

double log_likelihood(const Vec& residual, const Mat& R2_star) {
    if (residual.size() == 0) {
        return 0.0;
    }
    if (R2_star.rows() != residual.size() || R2_star.cols() != residual.size()) {
        throw DimensionError("residual and covariance sizes differ");
    }
    const linalg::PsdInverse inv = linalg::psd_pseudo_inverse(R2_star);
    if (inv.det.rank == 0) {
        return residual.isZero(0.0) ? 0.0 : kNegInf;
    }
    const double quad = residual.dot(inv.pinv * residual);
    return -0.5 * quad - 0.5 * inv.det.rank * std::log(2.0 * std::numbers::pi) - 0.5 * inv.det.log_det;
}

double likelihood(const Vec& residual, const Mat& R2_star) {
    return std::exp(log_likelihood(residual, R2_star));
}

ProbabilityUpdate update_probabilities(const Vec& mu, const Vec& log_likelihoods, double epsilon) {
    if (mu.size() != log_likelihoods.size()) {
        throw DimensionError("probability and likelihood vectors differ in length");
    }
    ProbabilityUpdate out;
    if ((log_likelihoods.array() == kNegInf).all()) {
        out.mu = mu;
        out.all_zero = true;
        return out;
    }
    const double log_eps = std::log(epsilon);
    Vec lw(mu.size());
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
        const double lm = mu(j) > 0.0 ? std::log(mu(j)) : kNegInf;
        lw(j) = std::max(log_likelihoods(j) + lm, log_eps);
    }
    const double top = lw.maxCoeff();
    double total = 0.0;
    for (Eigen::Index j = 0; j < lw.size(); ++j) {
        total += std::exp(lw(j) - top);
    }
    out.mu = (lw.array() - top - std::log(total)).exp().matrix();
    return out;
}

int argmax_first(const Vec& v) {
    int best = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j) {
        if (v(j) > v(best)) best = static_cast<int>(j);
    }
    return best;
}

double windowed_ratio(const std::vector<Vec>& log_likelihoods, int a, int b, int window) {
    const int avail = static_cast<int>(log_likelihoods.size());
    const int w = std::min(window, avail);
    if (w <= 0) {
        return 1.0;
    }
    double sum = 0.0;
    for (int t = avail - w; t < avail; ++t) {
        sum += log_likelihoods[t](a) - log_likelihoods[t](b);
    }
    return std::exp(sum / w);
}

std::vector<double> window_ratios(const std::vector<Vec>& log_likelihoods, int a, int b, int window, int begin) {
    if (window < 1) {
        throw ConfigError("window must be positive");
    }
    std::vector<double> out;
    const int avail = static_cast<int>(log_likelihoods.size());
    for (int t0 = std::max(begin, 0); t0 + window <= avail; t0 += window) {
        double sum = 0.0;
        for (int t = t0; t < t0 + window; ++t) sum += log_likelihoods[t](a) - log_likelihoods[t](b);
        out.push_back(std::exp(sum / window));
    }
    return out;
}

double fraction_within(const std::vector<double>& ratios, double rho) {
    if (ratios.empty()) return 0.0;
    int inside = 0;
    for (double r : ratios) inside += (r >= 1.0 / rho && r <= rho);
    return static_cast<double>(inside) / static_cast<double>(ratios.size());
}

StaticMMEstimator::StaticMMEstimator(const ModeSet& modes, EstimatorConfig config) : config_(config) {
    validate_mode_set(modes);
    modes_.reserve(modes.size());
    for (const ModeModel& m : modes) {
        modes_.push_back(transform(m));
    }
}

StaticMMEstimator::StaticMMEstimator(std::vector<TransformedMode> modes, EstimatorConfig config)
    : modes_(std::move(modes)), config_(config) {
    if (modes_.empty()) {
        throw ConfigError("estimator needs at least one mode");
    }
}

void StaticMMEstimator::initialize(const Vec& x0_hat, const Mat& P0, const Vec& u0, const Vec& y0) {
    const int N = size();
    initialize(x0_hat, P0, u0, y0, Vec::Constant(N, 1.0 / N));
}

void StaticMMEstimator::initialize(const Vec& x0_hat, const Mat& P0, const Vec& u0, const Vec& y0,
                                   const Vec& mu0) {
    if (config_.epsilon <= 0.0 || config_.rho < 1.0 || config_.window < 1) {
        throw ConfigError("estimator needs epsilon > 0, rho >= 1 and window >= 1");
    }
    if (mu0.size() != size() || (mu0.array() < 0.0).any() || std::abs(mu0.sum() - 1.0) > 1e-12) {
        throw ConfigError("initial mode probabilities must lie on the simplex");
    }
    if (config_.nominal_mode && (*config_.nominal_mode < 0 || *config_.nominal_mode >= size())) {
        throw ConfigError("nominal mode index out of range");
    }
    if (size() > 1) {
        for (const TransformedMode& tm : modes_) {
            if (tm.l2() == 0) {
                throw ConfigError("mode '" + tm.mode.label +
                                  "' has no attack-free output channel; with several modes the attack count "
                                  "must be strictly less than the number of measurements");
            }
        }
    }
    states_.clear();
    failed_.assign(modes_.size(), false);
    diagnostics_.clear();
    loglik_history_.clear();
    logmu_history_.clear();
    for (const TransformedMode& tm : modes_) {
        states_.push_back(init_filter(tm, x0_hat, P0, u0, y0));
    }
    mu_ = mu0;
    all_zero_ = false;
    fuse();
}

void StaticMMEstimator::step(const Vec& u_prev, const Vec& u_now, const Vec& y_now) {
    if (states_.empty()) {
        throw ConfigError("estimator used before initialize()");
    }
    const int N = size();
    Vec loglik = Vec::Constant(N, kNegInf);
    for (int j = 0; j < N; ++j) {
        if (failed_[j]) {
            continue;
        }
        try {
            states_[j] = filter_step(modes_[j], states_[j], u_prev, u_now, y_now);
        } catch (const FilterError& e) {
            failed_[j] = true;
            diagnostics_.push_back(e.what());
            continue;
        }
        const Vec nu = generalized_innovation(modes_[j], states_[j], u_now, y_now, N);
        loglik(j) = log_likelihood(nu, states_[j].R2_star);
    }
    const ProbabilityUpdate upd = update_probabilities(mu_, loglik, config_.epsilon);
    mu_ = upd.mu;
    all_zero_ = upd.all_zero;
    if (all_zero_) {
        diagnostics_.push_back("step " + std::to_string(states_[0].k) +
                               ": every likelihood vanished, probabilities kept");
    }
    loglik_history_.push_back(loglik);
    logmu_history_.push_back(mu_.array().log().matrix());
    fuse();
}

void StaticMMEstimator::fuse() {
    // Failed filters never win, even if their stale probability is highest.
    Vec score = mu_;
    for (int j = 0; j < size(); ++j) {
        if (failed_[j]) score(j) = -1.0;
    }
    const int q = argmax_first(score);
    const FilterState& st = states_[q];
    fused_.q_hat = q;
    fused_.x = st.x;
    fused_.d = st.d;
    fused_.Px = st.Px;
    fused_.Pd = st.Pd;
}

DetectionReport StaticMMEstimator::detection_report() const {
    return detection_report(config_.nominal_mode, config_.window);
}

DetectionReport StaticMMEstimator::detection_report(std::optional<int> nominal_mode, int window) const {
    DetectionReport rep;
    const int N = size();
    const int avail = static_cast<int>(logmu_history_.size());
    const int w = std::min(window, avail);
    rep.window_used = w;
    rep.bayes_factors.assign(N, 1.0);
    if (w == 0) {
        rep.top_mode = argmax_first(mu_);
    } else {
        Vec mean_log_mu = Vec::Zero(N);
        for (int t = avail - w; t < avail; ++t) {
            mean_log_mu += logmu_history_[t];
        }
        rep.top_mode = argmax_first(mean_log_mu);
    }
    const double band = std::log(config_.rho);
    rep.indistinguishable_set.push_back(rep.top_mode);
    for (int j = 0; j < N; ++j) {
        if (j == rep.top_mode || w == 0) {
            continue;
        }
        double sum = 0.0;
        for (int t = avail - w; t < avail; ++t) {
            const double a = loglik_history_[t](rep.top_mode);
            const double b = loglik_history_[t](j);
            // Both vanishing carries no evidence either way.
            if (a == kNegInf && b == kNegInf) continue;
            sum += a - b;
        }
        const double mean = sum / w;
        rep.bayes_factors[j] = std::exp(mean);
        if (std::isfinite(mean) && std::abs(mean) <= band) {
            rep.indistinguishable_set.push_back(j);
        }
    }
    std::sort(rep.indistinguishable_set.begin(), rep.indistinguishable_set.end());
    const bool ambiguous = rep.indistinguishable_set.size() > 1;
    // Without a nominal mode every hypothesis in the bank is an attack.
    rep.attack_detected = ambiguous || !nominal_mode || rep.top_mode != *nominal_mode;
    if (rep.attack_detected && !ambiguous) {
        rep.identified_mode = rep.top_mode;
    }
    return rep;
}

}  // namespace rse
