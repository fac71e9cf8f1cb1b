#pragma once

#include "rse/filter.hpp"
#include "rse/random.hpp"

#include <string>
#include <vector>

namespace rse {

struct DetectabilityVerdict {
    bool strongly_detectable = false;
    int normal_rank = 0;
    int full_rank = 0;  // n + p
    std::vector<Complex> invariant_zeros;
    double max_zero_modulus = 0.0;
    std::string reason;
};

/// Rank tolerance used throughout the analysis routines.
inline constexpr double kAnalysisRankTol = 1e-8;

/// The system pencil [zI - A, -G; C, H] evaluated at z.
CMat system_pencil(const ModeModel& mode, Complex z);

/// Invariant zeros via two random square compressions of the pencil, each
/// candidate confirmed by a rank test. `seed` fixes the random draws.
DetectabilityVerdict strong_detectability(const ModeModel& mode, std::uint64_t seed = 0x5eedULL);

struct BoundEntry {
    std::string label;
    int p = 0;
    bool within_bound = true;
};

struct BoundReport {
    int l = 0;
    int p_star_bound = 0;  // equals l
    std::vector<BoundEntry> entries;
    bool all_within = true;
};

BoundReport max_correctable(int l, int p);
BoundReport max_correctable(const ModeSet& modes);

struct PairCheck {
    int q = 0;
    int q_prime = 0;
    bool outputs_differ = false;
    int rank = 0;
    int required = 0;
    bool satisfied = false;
    std::string note;
};

struct ResilienceReport {
    bool hypothesis_holds = false;
    std::string reason;
    std::vector<PairCheck> pairs;
    bool guaranteed = false;
};

/// Rank conditions under which the estimates stay unbiased even when the
/// attack is never identified.
ResilienceReport resilience_guarantee(const ModeSet& modes);

/// What the attacker knows about the mismatch term. `second_moment` is the
/// l x l matrix added to R inside the covariance correction; S_star is the
/// covariance of the true mode's generalized innovation.
struct AttackerMoments {
    Mat second_moment;
    Mat S_star;
};

struct UnidentifiablePlan {
    int masquerade = 0;  // q, the mode the defender should believe
    int true_mode = 0;   // *, the mode actually used
    bool feasible = false;
    std::string reason;
    Mat T2q;
    Mat K;       // T2^q H^*
    Mat K_pinv;
    Mat Ds;      // attack covariance
    Mat factor;  // Ds = factor * factor^T

    /// Mean attack for the current step given the true-mode posterior and the
    /// masquerade filter's pre-update estimate.
    Vec mean(const TransformedMode& tq, const TransformedMode& tstar, const Vec& x_post_star,
             const Vec& x_star_q, const Vec& u) const;

    Vec sample(const Vec& mean, Rng& rng) const { return mean + rng.correlated(factor); }
};

UnidentifiablePlan synth_unidentifiable(const std::vector<TransformedMode>& modes, int q, int star,
                                        const AttackerMoments& moments);

}  // namespace rse
