#include "rse/model.hpp"

#include "rse/errors.hpp"

#include <algorithm>
#include <sstream>

namespace rse {

namespace {

std::string shape(const Mat& a) {
    return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

void expect_shape(const Mat& a, Eigen::Index rows, Eigen::Index cols, const std::string& name) {
    if (a.rows() != rows || a.cols() != cols) {
        throw DimensionError(name + " is " + shape(a) + ", expected " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
}

bool is_binary(const Mat& a) {
    return ((a.array() == 0.0) || (a.array() == 1.0)).all();
}

void check_noise(const Mat& Q, const Mat& R) {
    if (!linalg::is_symmetric(Q) || !linalg::is_psd(Q)) {
        throw ConfigError("Q must be symmetric positive semidefinite");
    }
    if (!linalg::is_symmetric(R) || R.rows() > 0 && linalg::min_eigenvalue(R) <= 0.0) {
        throw ConfigError("R must be symmetric positive definite");
    }
}

}  // namespace

void PlantTopology::validate() const {
    if (n <= 0 || m < 0 || l <= 0) {
        throw ConfigError("topology dimensions must satisfy n > 0, m >= 0, l > 0");
    }
    if (operation_modes.empty()) {
        throw ConfigError("topology needs at least one operation mode");
    }
    for (const OperationMode& op : operation_modes) {
        const std::string tag = "operation mode '" + op.name + "': ";
        expect_shape(op.A, n, n, tag + "A");
        expect_shape(op.B, n, m, tag + "B");
        expect_shape(op.C, l, n, tag + "C");
        expect_shape(op.D, l, m, tag + "D");
    }
    if (actuator_matrix.rows() != n && actuator_matrix.cols() > 0) {
        throw DimensionError("actuator matrix is " + shape(actuator_matrix) + ", expected " +
                             std::to_string(n) + " rows");
    }
    if (sensor_matrix.rows() != l && sensor_matrix.cols() > 0) {
        throw DimensionError("sensor matrix is " + shape(sensor_matrix) + ", expected " +
                             std::to_string(l) + " rows");
    }
    if (t_a() > m) {
        throw ConfigError("more vulnerable actuators (" + std::to_string(t_a()) + ") than inputs (" +
                          std::to_string(m) + ")");
    }
    if (t_s() > l) {
        throw ConfigError("more vulnerable sensors (" + std::to_string(t_s()) + ") than outputs (" +
                          std::to_string(l) + ")");
    }
    expect_shape(Q, n, n, "Q");
    expect_shape(R, l, l, "R");
    check_noise(Q, R);
}

AttackSupport AttackSupport::from_signals(const PlantTopology& topo, int operation_mode,
                                          std::vector<int> signals) {
    std::sort(signals.begin(), signals.end());
    if (std::adjacent_find(signals.begin(), signals.end()) != signals.end()) {
        throw ConfigError("attack support lists a signal twice");
    }
    const int ta = topo.t_a();
    const int p = static_cast<int>(signals.size());
    AttackSupport s;
    s.operation_mode = operation_mode;
    s.I_G = Mat::Zero(ta, p);
    s.I_H = Mat::Zero(topo.t_s(), p);
    for (int j = 0; j < p; ++j) {
        const int sig = signals[j];
        if (sig < 0 || sig >= topo.signal_count()) {
            throw ConfigError("attack signal index " + std::to_string(sig) + " out of range [0, " +
                              std::to_string(topo.signal_count()) + ")");
        }
        if (sig < ta) {
            s.I_G(sig, j) = 1.0;
        } else {
            s.I_H(sig - ta, j) = 1.0;
        }
    }
    return s;
}

std::vector<std::vector<int>> AttackSupport::channel_signals() const {
    const Eigen::Index ta = I_G.rows();
    std::vector<std::vector<int>> out(p());
    for (int j = 0; j < p(); ++j) {
        for (Eigen::Index i = 0; i < I_G.rows(); ++i) {
            if (I_G(i, j) != 0.0) out[j].push_back(static_cast<int>(i));
        }
        for (Eigen::Index i = 0; i < I_H.rows(); ++i) {
            if (I_H(i, j) != 0.0) out[j].push_back(static_cast<int>(ta + i));
        }
    }
    return out;
}

std::vector<int> AttackSupport::signals() const {
    std::vector<int> out;
    for (const auto& ch : channel_signals()) {
        out.insert(out.end(), ch.begin(), ch.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void AttackSupport::validate(const PlantTopology& topo) const {
    if (operation_mode < 0 || operation_mode >= topo.t_m()) {
        throw ConfigError("attack support refers to operation mode " + std::to_string(operation_mode) +
                          " but the topology has " + std::to_string(topo.t_m()));
    }
    expect_shape(I_G, topo.t_a(), p(), "I_G");
    expect_shape(I_H, topo.t_s(), p(), "I_H");
    if (!is_binary(I_G) || !is_binary(I_H)) {
        throw ConfigError("index matrices I_G and I_H must contain only 0 and 1");
    }
    // A column may hit one actuator, one sensor, or one of each (mixed attack).
    for (int j = 0; j < p(); ++j) {
        const double na = I_G.col(j).sum();
        const double ns = I_H.col(j).sum();
        if (na > 1.0 || ns > 1.0 || na + ns < 1.0) {
            throw ConfigError("attack channel " + std::to_string(j) +
                              " must drive one actuator and/or one sensor");
        }
    }
    if (p() > topo.signal_count()) {
        throw ConfigError("attack dimension exceeds the number of vulnerable signals");
    }
}

void ModeModel::validate() const {
    const int nn = n(), mm = m(), pp = p(), ll = l();
    expect_shape(A, nn, nn, label + ": A");
    expect_shape(B, nn, mm, label + ": B");
    expect_shape(G, nn, pp, label + ": G");
    expect_shape(C, ll, nn, label + ": C");
    expect_shape(D, ll, mm, label + ": D");
    expect_shape(H, ll, pp, label + ": H");
    expect_shape(Q, nn, nn, label + ": Q");
    expect_shape(R, ll, ll, label + ": R");
    check_noise(Q, R);
}

void validate_mode_set(const ModeSet& modes) {
    if (modes.empty()) {
        throw ConfigError("mode set is empty");
    }
    for (const ModeModel& mode : modes) {
        mode.validate();
        if (mode.n() != modes[0].n() || mode.m() != modes[0].m() || mode.l() != modes[0].l()) {
            throw DimensionError("mode '" + mode.label + "' does not share n, m, l with '" +
                                 modes[0].label + "'");
        }
    }
}

std::string support_label(const PlantTopology& topo, int operation_mode,
                          const std::vector<int>& signals) {
    std::ostringstream os;
    const OperationMode& op = topo.operation_modes.at(operation_mode);
    os << (op.name.empty() ? "op" + std::to_string(operation_mode + 1) : op.name) << ':';
    if (signals.empty()) {
        os << '-';
    }
    for (size_t i = 0; i < signals.size(); ++i) {
        if (i) os << ',';
        const int s = signals[i];
        if (s < topo.t_a()) {
            os << 'a' << s + 1;
        } else {
            os << 's' << s - topo.t_a() + 1;
        }
    }
    return os.str();
}

ModeModel build_mode(const PlantTopology& topo, const AttackSupport& support) {
    topo.validate();
    support.validate(topo);
    const OperationMode& op = topo.operation_modes[support.operation_mode];
    ModeModel mode;
    mode.operation_mode = support.operation_mode;
    mode.signals = support.signals();
    mode.channel_signals = support.channel_signals();
    mode.label = support_label(topo, support.operation_mode, mode.signals);
    mode.A = op.A;
    mode.B = op.B;
    mode.C = op.C;
    mode.D = op.D;
    mode.Q = topo.Q;
    mode.R = topo.R;
    mode.G = topo.t_a() > 0 ? Mat(topo.actuator_matrix * support.I_G) : Mat::Zero(topo.n, support.p());
    mode.H = topo.t_s() > 0 ? Mat(topo.sensor_matrix * support.I_H) : Mat::Zero(topo.l, support.p());
    return mode;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    }
    return r;
}

std::vector<std::vector<int>> combinations(int n, int k) {
    std::vector<std::vector<int>> out;
    if (k < 0 || k > n) {
        return out;
    }
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        out.push_back(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

namespace {

void check_limits(int t_a, int t_s, const EnumerationLimits& limits) {
    if (limits.max_actuator_attacks && (*limits.max_actuator_attacks < 0 || *limits.max_actuator_attacks > t_a)) {
        throw ConfigError("max actuator attacks must lie in [0, t_a]");
    }
    if (limits.max_sensor_attacks && (*limits.max_sensor_attacks < 0 || *limits.max_sensor_attacks > t_s)) {
        throw ConfigError("max sensor attacks must lie in [0, t_s]");
    }
}

bool limited(const EnumerationLimits& limits) {
    return limits.max_actuator_attacks.has_value() || limits.max_sensor_attacks.has_value();
}

}  // namespace

std::uint64_t model_count(int t_m, int t_a, int t_s, int p, const EnumerationLimits& limits) {
    check_limits(t_a, t_s, limits);
    if (!limited(limits)) {
        return static_cast<std::uint64_t>(t_m) * binomial(t_a + t_s, p);
    }
    const int na = limits.max_actuator_attacks.value_or(t_a);
    const int ns = limits.max_sensor_attacks.value_or(t_s);
    std::uint64_t total = 0;
    for (int i = 0; i <= std::min(na, p); ++i) {
        total += binomial(t_a, i) * binomial(t_s, std::min(p - i, ns));
    }
    return static_cast<std::uint64_t>(t_m) * total;
}

ModeSet enumerate_modes(const PlantTopology& topo, int p, const EnumerationLimits& limits,
                        std::vector<std::string>* warnings) {
    topo.validate();
    if (p < 0) {
        throw ConfigError("attack dimension p must be nonnegative");
    }
    if (p > topo.l) {
        throw ConfigError("attack dimension p = " + std::to_string(p) + " exceeds the number of outputs l = " +
                          std::to_string(topo.l) +
                          "; no estimator can correct more attacks than there are measurements");
    }
    check_limits(topo.t_a(), topo.t_s(), limits);

    // Each support is a sorted list of unified signal ids; the actuator part comes
    // first, so lexicographic order of the list is the mode order.
    std::vector<std::vector<int>> supports;
    if (!limited(limits)) {
        supports = combinations(topo.signal_count(), p);
    } else {
        const int na = limits.max_actuator_attacks.value_or(topo.t_a());
        const int ns = limits.max_sensor_attacks.value_or(topo.t_s());
        for (int i = 0; i <= std::min(na, p); ++i) {
            const int j = std::min(p - i, ns);
            for (const auto& act : combinations(topo.t_a(), i)) {
                for (const auto& sen : combinations(topo.t_s(), j)) {
                    std::vector<int> s = act;
                    for (int x : sen) s.push_back(topo.t_a() + x);
                    supports.push_back(std::move(s));
                }
            }
        }
        std::sort(supports.begin(), supports.end());
    }

    ModeSet modes;
    modes.reserve(static_cast<size_t>(topo.t_m()) * supports.size());
    for (int op = 0; op < topo.t_m(); ++op) {
        for (const auto& s : supports) {
            modes.push_back(build_mode(topo, AttackSupport::from_signals(topo, op, s)));
        }
    }
    if (modes.size() > 1 && p >= topo.l && warnings) {
        warnings->push_back("with " + std::to_string(modes.size()) + " modes and p = l = " + std::to_string(topo.l) +
                            " the generalized innovation is empty: the attack count must be strictly less "
                            "than the number of sensor measurements for mode probabilities to be computed");
    }
    return modes;
}

}  // namespace rse
