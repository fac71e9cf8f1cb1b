#pragma once

#include "rse/filter.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rse {

struct EstimatorConfig {
    double epsilon = 1e-6;  // probability floor applied before normalization
    double rho = 1.05;      // indistinguishability threshold on geometric-mean ratios
    int window = 200;       // steps used by the detection report
    std::optional<int> nominal_mode;  // attack-free hypothesis, if the bank has one
};

/// z2 - C2 x_star - D2 u. Throws ConfigError when z2 is empty and the bank has
/// more than one mode, since probabilities cannot then be computed.
Vec generalized_innovation(const TransformedMode& tm, const FilterState& st, const Vec& u_now,
                           const Vec& y_now, int bank_size = 1);

/// Log of the Gaussian density built from the pseudo-inverse and pseudo-determinant
/// of R2_star. -inf when the covariance has rank 0 and the residual is nonzero.
double log_likelihood(const Vec& residual, const Mat& R2_star);
double likelihood(const Vec& residual, const Mat& R2_star);

struct ProbabilityUpdate {
    Vec mu;
    bool all_zero = false;  // every likelihood vanished; mu left unchanged
};

/// Bayes update in log space with the floor max(L * mu, epsilon).
ProbabilityUpdate update_probabilities(const Vec& mu, const Vec& log_likelihoods, double epsilon);

/// Index of the largest entry; ties go to the lowest index.
int argmax_first(const Vec& v);

struct FusedOutput {
    int q_hat = 0;
    Vec x;
    Vec d;
    Mat Px;
    Mat Pd;
};

struct DetectionReport {
    bool attack_detected = false;
    std::optional<int> identified_mode;
    std::vector<int> indistinguishable_set;  // always contains top_mode
    int top_mode = 0;
    int window_used = 0;
    /// Per mode, exp(mean over the window of log L_top - log L_j).
    std::vector<double> bayes_factors;
};

/// Windowed geometric-mean likelihood ratio of mode a over mode b, from a
/// per-step log-likelihood history (rows = steps).
double windowed_ratio(const std::vector<Vec>& log_likelihoods, int a, int b, int window);

/// Ratios over consecutive non-overlapping windows of the history, starting
/// at step `begin`. A trailing partial window is dropped.
std::vector<double> window_ratios(const std::vector<Vec>& log_likelihoods, int a, int b, int window, int begin = 0);

/// Share of `ratios` inside [1/rho, rho]; zero for an empty list.
double fraction_within(const std::vector<double>& ratios, double rho);

class StaticMMEstimator {
public:
    StaticMMEstimator(const ModeSet& modes, EstimatorConfig config = {});
    StaticMMEstimator(std::vector<TransformedMode> modes, EstimatorConfig config = {});

    void initialize(const Vec& x0_hat, const Mat& P0, const Vec& u0, const Vec& y0);
    void initialize(const Vec& x0_hat, const Mat& P0, const Vec& u0, const Vec& y0, const Vec& mu0);

    /// Advances every healthy filter, updates probabilities and the fused output.
    void step(const Vec& u_prev, const Vec& u_now, const Vec& y_now);

    int size() const { return static_cast<int>(modes_.size()); }
    const std::vector<TransformedMode>& modes() const { return modes_; }
    const EstimatorConfig& config() const { return config_; }
    const Vec& mu() const { return mu_; }
    const FilterState& filter(int j) const { return states_.at(j); }
    const FusedOutput& fused() const { return fused_; }
    bool healthy(int j) const { return !failed_.at(j); }
    const std::vector<std::string>& diagnostics() const { return diagnostics_; }
    bool last_update_degenerate() const { return all_zero_; }

    const std::vector<Vec>& log_likelihood_history() const { return loglik_history_; }
    const std::vector<Vec>& log_mu_history() const { return logmu_history_; }

    DetectionReport detection_report() const;
    DetectionReport detection_report(std::optional<int> nominal_mode, int window) const;

private:
    void fuse();

    std::vector<TransformedMode> modes_;
    EstimatorConfig config_;
    std::vector<FilterState> states_;
    std::vector<bool> failed_;
    Vec mu_;
    FusedOutput fused_;
    bool all_zero_ = false;
    std::vector<std::string> diagnostics_;
    std::vector<Vec> loglik_history_;
    std::vector<Vec> logmu_history_;
};

}  // namespace rse
