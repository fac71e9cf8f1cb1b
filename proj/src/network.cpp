#include "rse/network.hpp"

#include "rse/errors.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace rse {

namespace {

bool removed_line(const LineSet& removed, int a, int b) {
    for (const auto& [x, y] : removed) {
        if ((x == a && y == b) || (x == b && y == a)) return true;
    }
    return false;
}

}  // namespace

std::vector<int> PowerNetwork::generators() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i) {
        if (buses[i].generator) out.push_back(i);
    }
    return out;
}

void PowerNetwork::validate() const {
    if (buses.empty()) {
        throw ConfigError("network has no buses");
    }
    if (!(dt > 0.0)) {
        throw ConfigError("network sampling time must be positive");
    }
    for (const Bus& b : buses) {
        if (!(b.inertia > 0.0)) throw ConfigError("bus inertia must be positive");
    }
    for (const Line& ln : lines) {
        if (ln.from < 0 || ln.to < 0 || ln.from >= size() || ln.to >= size() || ln.from == ln.to) {
            throw ConfigError("line (" + std::to_string(ln.from) + ", " + std::to_string(ln.to) +
                              ") does not join two distinct buses");
        }
    }
    if (process_noise < 0.0 || !(measurement_noise > 0.0)) {
        throw ConfigError("noise levels must be nonnegative (process) and positive (measurement)");
    }
}

PowerNetwork make_network(int bus_count, const std::vector<int>& generator_buses, const std::vector<Line>& lines) {
    PowerNetwork net;
    net.buses.resize(bus_count);
    for (int g : generator_buses) {
        if (g < 0 || g >= bus_count) throw ConfigError("generator bus out of range");
        net.buses[g].generator = true;
        net.buses[g].inertia = 10.0;
    }
    net.lines = lines;
    net.validate();
    return net;
}

OperationMode discretize(const PowerNetwork& net, const LineSet& removed, const std::string& name) {
    net.validate();
    for (const auto& [a, b] : removed) {
        const bool present = std::any_of(net.lines.begin(), net.lines.end(), [&](const Line& ln) {
            return (ln.from == a && ln.to == b) || (ln.from == b && ln.to == a);
        });
        if (!present) {
            throw ConfigError("cannot remove line (" + std::to_string(a) + ", " + std::to_string(b) +
                              "): not in the network");
        }
    }
    const int N = net.size();
    const std::vector<int> gens = net.generators();
    const int n = 2 * N, m = static_cast<int>(gens.size()) + N, l = 3 * N;
    Mat Ac = Mat::Zero(n, n);
    Mat Bc = Mat::Zero(n, m);
    for (int i = 0; i < N; ++i) {
        const double mi = net.buses[i].inertia;
        Ac(2 * i, 2 * i + 1) = 1.0;
        Ac(2 * i + 1, 2 * i + 1) = -net.buses[i].damping / mi;
        Bc(2 * i + 1, static_cast<int>(gens.size()) + i) = -1.0 / mi;  // load
    }
    for (const Line& ln : net.lines) {
        if (removed_line(removed, ln.from, ln.to)) continue;
        for (const auto& [i, j] : {std::pair{ln.from, ln.to}, std::pair{ln.to, ln.from}}) {
            const double c = ln.susceptance / net.buses[i].inertia;
            Ac(2 * i + 1, 2 * i) -= c;
            Ac(2 * i + 1, 2 * j) += c;
        }
    }
    for (size_t g = 0; g < gens.size(); ++g) {
        Bc(2 * gens[g] + 1, static_cast<int>(g)) = 1.0 / net.buses[gens[g]].inertia;
    }

    OperationMode op;
    op.name = name;
    op.A = Mat::Identity(n, n) + net.dt * Ac;
    op.B = net.dt * Bc;
    op.C = Mat::Zero(l, n);
    op.D = Mat::Zero(l, m);
    for (int i = 0; i < N; ++i) {
        op.C(3 * i, 2 * i + 1) = net.buses[i].damping;  // P_elec = D omega + P_L
        op.D(3 * i, static_cast<int>(gens.size()) + i) = 1.0;
        op.C(3 * i + 1, 2 * i) = 1.0;
        op.C(3 * i + 2, 2 * i + 1) = 1.0;
    }
    return op;
}

int component_count(const PowerNetwork& net, const LineSet& removed) {
    std::vector<int> parent(net.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); };
    int count = net.size();
    for (const Line& ln : net.lines) {
        if (removed_line(removed, ln.from, ln.to)) continue;
        const int a = find(ln.from), b = find(ln.to);
        if (a != b) {
            parent[a] = b;
            --count;
        }
    }
    return count;
}

PlantTopology power_topology(const PowerNetwork& net, const std::vector<std::pair<std::string, LineSet>>& operation_modes,
                             std::vector<std::string>* warnings) {
    net.validate();
    PlantTopology t;
    const int N = net.size();
    const std::vector<int> gens = net.generators();
    t.n = net.n();
    t.m = net.m();
    t.l = net.l();
    for (const auto& [name, cut] : operation_modes) {
        t.operation_modes.push_back(discretize(net, cut, name));
        if (warnings && component_count(net, cut) > 1) {
            warnings->push_back("operation mode '" + name +
                                "' splits the network into islands without a common angle reference");
        }
    }
    // Actuator attacks enter like extra mechanical power.
    t.actuator_matrix = Mat::Zero(t.n, static_cast<Eigen::Index>(gens.size()));
    for (size_t g = 0; g < gens.size(); ++g) {
        t.actuator_matrix(2 * gens[g] + 1, static_cast<Eigen::Index>(g)) = net.dt / net.buses[gens[g]].inertia;
    }
    t.sensor_matrix = Mat::Zero(t.l, 0);
    t.Q = Mat::Zero(t.n, t.n);
    for (int i = 0; i < N; ++i) {
        const double s = net.dt / net.buses[i].inertia;
        t.Q(2 * i + 1, 2 * i + 1) = s * s * net.process_noise;
    }
    t.R = net.measurement_noise * Mat::Identity(t.l, t.l);
    return t;
}

PowerModel build_power_network(const PowerNetwork& net, const std::vector<PowerAttackMode>& attacks) {
    if (attacks.empty()) {
        throw ConfigError("no attack modes given");
    }
    std::vector<std::pair<std::string, LineSet>> ops;
    std::vector<int> op_index;
    for (const PowerAttackMode& a : attacks) {
        LineSet cut = a.removed_lines;
        for (auto& e : cut) {
            if (e.first > e.second) std::swap(e.first, e.second);
        }
        std::sort(cut.begin(), cut.end());
        auto it = std::find_if(ops.begin(), ops.end(), [&](const auto& o) { return o.second == cut; });
        if (it == ops.end()) {
            std::string name = cut.empty() ? "intact" : "cut";
            for (const auto& [x, y] : cut) name += "-" + std::to_string(x + 1) + "_" + std::to_string(y + 1);
            ops.emplace_back(name, cut);
            op_index.push_back(static_cast<int>(ops.size()) - 1);
        } else {
            op_index.push_back(static_cast<int>(it - ops.begin()));
        }
    }
    PowerModel pm;
    pm.topology = power_topology(net, ops, &pm.warnings);
    for (size_t i = 0; i < attacks.size(); ++i) {
        for (int g : attacks[i].attacked_generators) {
            if (g < 0 || g >= pm.topology.t_a()) throw ConfigError("attacked generator index out of range");
        }
        ModeModel mode = build_mode(pm.topology,
                                    AttackSupport::from_signals(pm.topology, op_index[i], attacks[i].attacked_generators));
        if (!attacks[i].name.empty()) mode.label = attacks[i].name;
        pm.modes.push_back(std::move(mode));
    }
    return pm;
}

ThreeArea three_area_network() {
    ThreeArea out;
    out.network = make_network(4, {0, 1, 2}, {{0, 3, 1.5}, {1, 3, 1.5}, {2, 3, 1.5}});
    std::vector<std::pair<std::string, LineSet>> ops = {
        {"closed", {}},
        {"breaker1", {{0, 3}}},
        {"breaker2", {{1, 3}}},
        {"breaker3", {{2, 3}}},
    };
    out.model.topology = power_topology(out.network, ops, &out.model.warnings);
    out.model.modes = enumerate_modes(out.model.topology, 1, {}, &out.model.warnings);
    return out;
}

Scenario three_area_scenario(const ThreeArea& ta, double attack) {
    const ModeSet& modes = ta.model.modes;
    const int n = ta.network.n();
    auto find = [&](const std::string& label) {
        for (size_t i = 0; i < modes.size(); ++i) {
            if (modes[i].label == label) return static_cast<int>(i);
        }
        throw ConfigError("three-area mode '" + label + "' missing");
    };
    Scenario s;
    s.horizon = 3000;
    s.dt = ta.network.dt;
    s.seed = 1;
    s.x0 = Vec::Zero(n);
    s.x0_hat = Vec::Zero(n);
    s.P0 = 1e-4 * Mat::Identity(n, n);
    s.mode_schedule = {{0, find("closed:a1")}, {1500, find("breaker2:a1")}};
    s.attack_profiles.assign(signal_count(modes), SignalProfile{});
    s.attack_profiles[0] = SignalProfile::constant(attack);
    return s;
}

ControllerDesign three_area_controller() {
    ControllerDesign d;
    d.control_inputs = {0, 1, 2};
    return d;
}

Vec three_area_reference(const ThreeArea& ta) {
    Vec x = Vec::Zero(ta.network.n());
    for (int i = 0; i < ta.network.size(); ++i) x(2 * i) = 0.1;
    return x;
}

std::vector<PowerAttackMode> ieee68_attack_modes() {
    auto ln = [](int a, int b) { return std::pair{a - 1, b - 1}; };
    const LineSet q1_lines = {ln(27, 53), ln(53, 54), ln(60, 61)};
    const LineSet q2_lines = {ln(18, 49), ln(18, 50)};
    const LineSet q3_lines = {ln(40, 41)};
    auto join = [](std::initializer_list<LineSet> parts) {
        LineSet out;
        for (const LineSet& p : parts) out.insert(out.end(), p.begin(), p.end());
        return out;
    };
    return {
        {"q1", q1_lines, {0}},
        {"q2", q2_lines, {1}},
        {"q3", q3_lines, {2}},
        {"q4", join({q1_lines, q2_lines}), {3}},
        {"q5", join({q1_lines, q3_lines}), {4}},
        {"q6", join({q2_lines, q3_lines}), {5}},
        {"q7", join({q1_lines, q2_lines, q3_lines}), {6}},
        {"q8", {}, {7}},
    };
}

SignalProfile ieee68_attack_profile() {
    return SignalProfile::piecewise({{0.0, 0.0}, {1.25, 1250.0}, {2.5, 0.0}, {5.0, -1250.0}});
}

}  // namespace rse
