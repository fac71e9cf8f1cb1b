#include "rse/sim.hpp"

#include "rse/errors.hpp"
#include "rse/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

namespace rse {

double SignalProfile::value(double t) const {
    if (t < start || t >= stop) {
        return 0.0;
    }
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::Constant:
            return amplitude;
        case Kind::Sine:
            return amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase);
        case Kind::Ramp:
            return amplitude + slope * (t - (std::isfinite(start) ? start : 0.0));
        case Kind::PiecewiseLinear: {
            if (knots.empty() || t < knots.front().first || t >= knots.back().first) {
                return 0.0;
            }
            auto hi = std::upper_bound(knots.begin(), knots.end(), t,
                                       [](double v, const std::pair<double, double>& kn) { return v < kn.first; });
            auto lo = hi - 1;
            const double w = (t - lo->first) / (hi->first - lo->first);
            return lo->second + w * (hi->second - lo->second);
        }
    }
    return 0.0;
}

SignalProfile SignalProfile::constant(double level, double start, double stop) {
    SignalProfile p;
    p.kind = Kind::Constant;
    p.amplitude = level;
    p.start = start;
    p.stop = stop;
    return p;
}

SignalProfile SignalProfile::sine(double amplitude, double period, double phase) {
    SignalProfile p;
    p.kind = Kind::Sine;
    p.amplitude = amplitude;
    p.period = period;
    p.phase = phase;
    return p;
}

SignalProfile SignalProfile::ramp(double slope, double start, double initial) {
    SignalProfile p;
    p.kind = Kind::Ramp;
    p.slope = slope;
    p.start = start;
    p.amplitude = initial;
    return p;
}

SignalProfile SignalProfile::piecewise(std::vector<std::pair<double, double>> knots) {
    for (size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i].first > knots[i - 1].first)) {
            throw ConfigError("piecewise-linear knots must have increasing times");
        }
    }
    SignalProfile p;
    p.kind = Kind::PiecewiseLinear;
    p.knots = std::move(knots);
    return p;
}

int Scenario::mode_at(int k) const {
    int mode = mode_schedule.empty() ? 0 : mode_schedule.front().mode;
    for (const ModeSwitch& s : mode_schedule) {
        if (s.step <= k) mode = s.mode;
    }
    return mode;
}

Vec Scenario::input_at(int k, int m) const {
    Vec u = Vec::Zero(m);
    for (const InputSegment& seg : inputs) {
        if (k >= seg.begin && k < seg.end) u = seg.value;
    }
    for (size_t i = 0; i < input_profiles.size() && static_cast<int>(i) < m; ++i) {
        u(static_cast<Eigen::Index>(i)) += input_profiles[i].value(k * dt);
    }
    return u;
}

Vec Scenario::attack_at(int k, const ModeModel& mode) const {
    Vec d = Vec::Zero(mode.p());
    const double t = k * dt;
    for (int j = 0; j < mode.p(); ++j) {
        const auto& ch = mode.channel_signals.at(j);
        if (ch.empty()) continue;
        const size_t sig = static_cast<size_t>(ch.front());
        if (sig < attack_profiles.size()) d(j) = attack_profiles[sig].value(t);
    }
    return d;
}

void Scenario::validate(const ModeSet& modes) const {
    if (horizon < 1) {
        throw ConfigError("scenario horizon must be at least 1");
    }
    if (!(dt > 0.0)) {
        throw ConfigError("scenario dt must be positive");
    }
    const int N = static_cast<int>(modes.size());
    for (const ModeSwitch& s : mode_schedule) {
        if (s.mode < 0 || s.mode >= N) {
            throw ConfigError("mode schedule refers to mode " + std::to_string(s.mode) + " of " + std::to_string(N));
        }
        if (s.step < 0 || s.step >= horizon) {
            throw ConfigError("mode switch step " + std::to_string(s.step) + " outside [0, horizon)");
        }
    }
    const int n = modes[0].n(), m = modes[0].m();
    for (const InputSegment& seg : inputs) {
        if (seg.value.size() != m) {
            throw DimensionError("input segment has length " + std::to_string(seg.value.size()) + ", expected " +
                                 std::to_string(m));
        }
    }
    if (static_cast<int>(input_profiles.size()) > m) {
        throw DimensionError("more input profiles than inputs");
    }
    if (x0.size() != n || x0_hat.size() != n) {
        throw DimensionError("x0 and x0_hat must have length n = " + std::to_string(n));
    }
    if (P0.rows() != n || P0.cols() != n) {
        throw DimensionError("P0 must be n x n");
    }
}

int signal_count(const ModeSet& modes) {
    int count = 0;
    for (const ModeModel& m : modes) {
        for (int s : m.signals) count = std::max(count, s + 1);
    }
    return count;
}

namespace {

Vec to_signal_space(const ModeModel& mode, const Vec& d, int count) {
    Vec out = Vec::Zero(count);
    for (int j = 0; j < mode.p() && j < d.size(); ++j) {
        for (int s : mode.channel_signals[j]) out(s) = d(j);
    }
    return out;
}

}  // namespace

Trace simulate(const ModeSet& modes, const Scenario& scenario, const SimulationOptions& options) {
    validate_mode_set(modes);
    scenario.validate(modes);
    const int N = static_cast<int>(modes.size());
    const int n = modes[0].n(), m = modes[0].m(), l = modes[0].l();

    Trace trace;
    trace.signal_count = signal_count(modes);

    std::set<int> used;
    for (int k = 0; k < scenario.horizon; ++k) used.insert(scenario.mode_at(k));
    if (scenario.mode_schedule.empty()) used.insert(0);
    for (int q : used) {
        const DetectabilityVerdict v = strong_detectability(modes[q]);
        if (!v.strongly_detectable) {
            trace.warnings.push_back("true mode '" + modes[q].label + "' is not strongly detectable: " + v.reason);
        }
    }

    StaticMMEstimator bank(modes, options.estimator);
    const auto& tms = bank.modes();

    const Vec x_ref = options.x_ref.size() ? options.x_ref : Vec(Vec::Zero(n));
    if (x_ref.size() != n) {
        throw DimensionError("x_ref must have length n");
    }
    if (options.controllers) {
        if (static_cast<int>(options.controllers->size()) != N) {
            throw ConfigError("need one controller per mode");
        }
        for (int j = 0; j < N; ++j) {
            const Mat DS = modes[j].D * (*options.controllers)[j].S;
            if (DS.size() && DS.cwiseAbs().maxCoeff() > 0.0) {
                throw ConfigError("closed-loop simulation needs controlled inputs without direct feedthrough (mode '" +
                                  modes[j].label + "')");
            }
        }
    }
    if (options.redteam) {
        const UnidentifiablePlan& plan = *options.redteam;
        if (plan.true_mode < 0 || plan.true_mode >= N || plan.masquerade < 0 || plan.masquerade >= N) {
            throw ConfigError("red-team plan refers to a mode outside the bank");
        }
        if (!plan.feasible) {
            throw ConfigError("red-team plan is infeasible: " + plan.reason);
        }
        if (tms[plan.masquerade].p2() > 0) {
            throw ConfigError("red-team plans need a masquerade mode whose attack is fully visible in the outputs (no dynamics-only part)");
        }
    }

    std::vector<Mat> w_factor(N), v_factor(N);
    for (int j = 0; j < N; ++j) {
        w_factor[j] = linalg::psd_factor(modes[j].Q);
        v_factor[j] = linalg::psd_factor(modes[j].R);
    }

    Rng rng(scenario.seed);
    Vec x = scenario.x0;
    Vec u_prev = Vec::Zero(m);
    trace.rows.reserve(scenario.horizon);

    for (int k = 0; k < scenario.horizon; ++k) {
        const int q = scenario.mode_at(k);
        const ModeModel& md = modes[q];
        const Vec u_exo = scenario.input_at(k, m);
        const Vec v = scenario.noise ? rng.correlated(v_factor[q]) : Vec(Vec::Zero(l));
        const Vec y_clean = md.C * x + md.D * u_exo + v;

        Vec d;
        if (options.redteam && q == options.redteam->true_mode) {
            const UnidentifiablePlan& plan = *options.redteam;
            const int star = plan.true_mode, qm = plan.masquerade;
            Vec x_post_star = scenario.x0_hat, x_star_q = scenario.x0_hat;
            if (k > 0) {
                // The true-mode estimate does not depend on the injected attack,
                // so a step on the clean output gives the value the defender will see.
                x_post_star = filter_step(tms[star], bank.filter(star), u_prev, u_exo, y_clean).x;
                x_star_q = filter_step(tms[qm], bank.filter(qm), u_prev, u_exo, y_clean).x_star;
            }
            d = plan.sample(plan.mean(tms[qm], tms[star], x_post_star, x_star_q, u_exo), rng);
        } else {
            d = scenario.attack_at(k, md);
        }
        const Vec y = y_clean + md.H * d;

        try {
            if (k == 0) {
                bank.initialize(scenario.x0_hat, scenario.P0, u_exo, y);
            } else {
                bank.step(u_prev, u_exo, y);
            }
        } catch (const Error& e) {
            trace.truncated = true;
            trace.diagnostics.push_back("step " + std::to_string(k) + ": " + e.what());
            break;
        }
        bool any_healthy = false;
        for (int j = 0; j < N; ++j) any_healthy = any_healthy || bank.healthy(j);
        if (!any_healthy) {
            trace.truncated = true;
            trace.diagnostics.push_back("step " + std::to_string(k) + ": every mode-matched filter failed");
            break;
        }

        const FusedOutput& fo = bank.fused();
        Vec u = u_exo;
        if (options.controllers) {
            const int qh = fo.q_hat;
            try {
                u = control_step((*options.controllers)[qh], tms[qh], bank.filter(qh), y, u_exo, x_ref).u;
            } catch (const Error& e) {
                trace.truncated = true;
                trace.diagnostics.push_back("step " + std::to_string(k) + ": controller: " + e.what());
                break;
            }
        }

        TraceRow row;
        row.k = k;
        row.q_true = q;
        row.q_hat = fo.q_hat;
        row.x = x;
        row.x_hat = fo.x;
        row.y = y;
        row.u = u;
        row.d_true = to_signal_space(md, d, trace.signal_count);
        row.d_hat = to_signal_space(modes[fo.q_hat], fo.d, trace.signal_count);
        row.mu = bank.mu();
        row.Px_diag = fo.Px.diagonal();
        trace.rows.push_back(std::move(row));

        const Vec w = scenario.noise ? rng.correlated(w_factor[q]) : Vec(Vec::Zero(n));
        x = md.A * x + md.B * u + md.G * d + w;
        u_prev = u;
    }

    for (const std::string& s : bank.diagnostics()) trace.diagnostics.push_back(s);
    trace.log_likelihoods = bank.log_likelihood_history();
    if (!trace.rows.empty()) {
        trace.report = bank.detection_report();
    }
    return trace;
}

std::vector<Trace> simulate_batch(const ModeSet& modes, const Scenario& scenario, const SimulationOptions& options,
                                  const std::vector<std::uint64_t>& seeds, unsigned threads) {
    std::vector<Trace> out(seeds.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<size_t>(seeds.size(), 1)));
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (size_t i = next++; i < seeds.size(); i = next++) {
            try {
                Scenario s = scenario;
                s.seed = seeds[i];
                out[i] = simulate(modes, s, options);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

Benchmark build_benchmark() {
    Benchmark bm;
    PlantTopology& t = bm.topology;
    t.n = 5;
    t.m = 1;
    t.l = 5;
    OperationMode op;
    op.name = "bench";
    op.A.resize(5, 5);
    op.A << 0.5, 2, 0, 0, 0,
            0, 0.2, 1, 0, 1,
            0, 0, 0.3, 0, 1,
            0, 0, 0, 0.7, 1,
            0, 0, 0, 0, 0.1;
    op.B.resize(5, 1);
    op.B << 1, 0.1, 0.1, 1, 0;
    op.C.resize(5, 5);
    op.C << 1, 0, 0, 0, 0,
            0, 1, -0.1, 0, 0,
            0, 0, 1, -0.5, 0.2,
            0, 0, 0, 1, 0,
            0, 0.25, 0, 0, 1;
    op.D = Mat::Zero(5, 1);
    t.operation_modes.push_back(op);
    t.actuator_matrix = op.B;  // G = B
    t.sensor_matrix = Mat::Zero(5, 4);
    t.sensor_matrix.topRows(4) = Mat::Identity(4, 4);
    t.Q.resize(5, 5);
    t.Q << 1, 0, 0, 0, 0,
           0, 1, 0.5, 0, 0,
           0, 0.5, 1, 0, 0,
           0, 0, 0, 1, 0,
           0, 0, 0, 0, 1;
    t.Q *= 1e-4;
    t.R.resize(5, 5);
    t.R << 1, 0, 0, 0.5, 0,
           0, 1, 0, 0, 0.3,
           0, 0, 1, 0, 0,
           0.5, 0, 0, 1, 0,
           0, 0.3, 0, 0, 1;
    t.R *= 1e-4;
    bm.modes = enumerate_modes(t, 4);

    Scenario& sc = bm.scenario;
    sc.horizon = 1000;
    sc.dt = 1.0;
    sc.mode_schedule = {{0, 2}, {500, 1}};  // q3 then q2 (zero-based 2, 1)
    sc.inputs = {{100, 301, Vec::Constant(1, 2.0)}, {500, 701, Vec::Constant(1, -2.0)}};
    // One profile per vulnerable signal: actuator, then sensors 1..4.
    sc.attack_profiles = {
        SignalProfile::sine(0.5, 500.0),
        SignalProfile::constant(1.0),
        SignalProfile::ramp(0.002, 500.0),
        SignalProfile::sine(0.6, 300.0, std::numbers::pi / 2),
        SignalProfile::constant(-0.5),
    };
    sc.seed = 1;
    sc.x0 = Vec::Zero(5);
    sc.x0_hat = Vec::Zero(5);
    sc.P0 = Mat::Identity(5, 5);
    return bm;
}

AttackerMoments estimate_attacker_moments(const ModeSet& modes, int star, const Scenario& nominal, int runs,
                                          int burn_in) {
    validate_mode_set(modes);
    if (star < 0 || star >= static_cast<int>(modes.size())) {
        throw ConfigError("true mode index out of range");
    }
    if (runs < 1) {
        throw ConfigError("moment estimation needs at least one run");
    }
    nominal.validate(modes);
    const ModeModel& md = modes[star];
    const TransformedMode tm = transform(md);
    const int m = md.m(), l = md.l();
    const Mat wf = linalg::psd_factor(md.Q);
    const Mat vf = linalg::psd_factor(md.R);

    Mat second = Mat::Zero(l, l);
    long count = 0;
    Rng seeder(nominal.seed);
    for (int r = 0; r < runs; ++r) {
        Rng rng(seeder.next_u64());
        Vec x = nominal.x0;
        Vec u_prev = Vec::Zero(m);
        FilterState st;
        for (int k = 0; k < nominal.horizon; ++k) {
            const Vec u = nominal.input_at(k, m);
            const Vec v = rng.correlated(vf);
            const Vec y = md.C * x + md.D * u + v;
            st = k == 0 ? init_filter(tm, nominal.x0_hat, nominal.P0, u, y) : filter_step(tm, st, u_prev, u, y);
            if (k >= burn_in) {
                const Vec e = md.C * (x - st.x) + v;
                second += e * e.transpose();
                ++count;
            }
            x = md.A * x + md.B * u + rng.correlated(wf);
            u_prev = u;
        }
    }
    if (count == 0) {
        throw ConfigError("moment estimation horizon is shorter than the burn-in");
    }
    AttackerMoments out;
    out.second_moment = linalg::symmetrize(second / static_cast<double>(count) - md.R);
    out.S_star = steady_state_gains(tm, nominal.P0).R2_star;
    return out;
}

}  // namespace rse
