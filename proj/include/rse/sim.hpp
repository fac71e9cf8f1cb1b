#pragma once

#include "rse/analysis.hpp"
#include "rse/controller.hpp"
#include "rse/mm_estimator.hpp"
#include "rse/model.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rse {

/// Time profile of one vulnerable signal. Zero outside [start, stop).
struct SignalProfile {
    enum class Kind { Zero, Constant, Sine, Ramp, PiecewiseLinear };

    Kind kind = Kind::Zero;
    double amplitude = 0.0;  // constant level, sine amplitude, ramp value at start
    double period = 1.0;     // sine period
    double phase = 0.0;      // sine phase (radians)
    double slope = 0.0;      // ramp slope per time unit
    double start = -std::numeric_limits<double>::infinity();
    double stop = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> knots;  // (time, value), increasing time

    double value(double t) const;

    static SignalProfile constant(double level, double start = -std::numeric_limits<double>::infinity(),
                                  double stop = std::numeric_limits<double>::infinity());
    static SignalProfile sine(double amplitude, double period, double phase = 0.0);
    static SignalProfile ramp(double slope, double start, double initial = 0.0);
    static SignalProfile piecewise(std::vector<std::pair<double, double>> knots);
};

struct ModeSwitch {
    int step = 0;
    int mode = 0;
};

/// u = value on steps [begin, end); later segments override earlier ones.
struct InputSegment {
    int begin = 0;
    int end = 0;
    Vec value;
};

struct Scenario {
    int horizon = 0;
    double dt = 1.0;  // time units per step, used by attack profiles
    std::vector<ModeSwitch> mode_schedule;
    std::vector<InputSegment> inputs;
    std::vector<SignalProfile> input_profiles;  // per input, added to the segments
    std::vector<SignalProfile> attack_profiles;  // by unified signal id
    std::uint64_t seed = 0;
    bool noise = true;
    Vec x0;
    Vec x0_hat;
    Mat P0;

    int mode_at(int k) const;
    Vec input_at(int k, int m) const;
    /// Attack vector of `mode` at step k (one entry per channel).
    Vec attack_at(int k, const ModeModel& mode) const;
    void validate(const ModeSet& modes) const;
};

struct SimulationOptions {
    EstimatorConfig estimator;
    /// Per-mode gains, chosen by the fused mode estimate each step.
    std::optional<std::vector<ControllerGains>> controllers;
    Vec x_ref;
    /// When set, attacks on steps whose true mode is plan.true_mode follow the plan.
    std::optional<UnidentifiablePlan> redteam;
};

struct TraceRow {
    int k = 0;
    int q_true = 0;
    int q_hat = 0;
    Vec x, x_hat, y, u;
    Vec d_true;  // by unified signal id
    Vec d_hat;   // fused estimate, by unified signal id
    Vec mu;
    Vec Px_diag;
};

struct Trace {
    std::vector<TraceRow> rows;
    int signal_count = 0;
    bool truncated = false;
    std::vector<std::string> diagnostics;
    std::vector<std::string> warnings;
    std::optional<DetectionReport> report;
    std::vector<Vec> log_likelihoods;  // per step after the first
};

/// Number of unified signals referenced by any mode.
int signal_count(const ModeSet& modes);

Trace simulate(const ModeSet& modes, const Scenario& scenario, const SimulationOptions& options = {});

/// One simulation per seed, run on up to `threads` workers (0 = hardware
/// concurrency). Results are in seed order and do not depend on the thread count.
std::vector<Trace> simulate_batch(const ModeSet& modes, const Scenario& scenario, const SimulationOptions& options,
                                  const std::vector<std::uint64_t>& seeds, unsigned threads = 0);

/// Benchmark plant with one operation mode, one actuator and four sensors open
/// to attack, p = 4 (five modes), and the switching scenario q3 -> q2 at k = 500.
struct Benchmark {
    PlantTopology topology;
    ModeSet modes;
    Scenario scenario;
};

Benchmark build_benchmark();

/// Second moment of C* (x - x_hat*) + v under the true mode, minus R, plus the
/// steady-state innovation covariance of the true-mode filter.
AttackerMoments estimate_attacker_moments(const ModeSet& modes, int star, const Scenario& nominal, int runs,
                                          int burn_in = 50);

}  // namespace rse
