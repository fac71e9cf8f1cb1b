#include "rse/io.hpp"

#include "rse/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rse::io {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& field) {
    if (!j.is_object() || !j.contains(key)) {
        bad(field, std::string("missing required field '") + key + "'");
    }
    return j.at(key);
}

double number(const json& j, const std::string& field) {
    if (!j.is_number()) bad(field, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& field) {
    if (!j.is_number_integer()) bad(field, "expected an integer");
    return j.get<int>();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json complex_list(const std::vector<Complex>& zs) {
    json out = json::array();
    for (const Complex& z : zs) out.push_back({z.real(), z.imag()});
    return out;
}

}  // namespace

Mat matrix_from_json(const json& j, const std::string& field, Eigen::Index rows_hint) {
    if (j.is_number()) {
        const Eigen::Index n = rows_hint > 0 ? rows_hint : 1;
        return j.get<double>() * Mat::Identity(n, n);
    }
    if (!j.is_array()) bad(field, "expected a nested array");
    if (j.empty()) {
        return Mat::Zero(std::max<Eigen::Index>(rows_hint, 0), 0);
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (!j[0].is_array()) bad(field, "expected rows to be arrays");
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            bad(field, "row " + std::to_string(r) + " has a different length than row 0");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = number(row[c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
    }
    return m;
}

Vec vector_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) bad(field, "expected an array");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], field + "[" + std::to_string(i) + "]");
    return v;
}

json to_json(const Mat& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

json to_json(const Vec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

int parse_signal(const json& j, int t_a, int signal_count, const std::string& field) {
    int id = -1;
    if (j.is_number_integer()) {
        id = j.get<int>();
    } else if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s.size() < 2 || (s[0] != 'a' && s[0] != 's')) bad(field, "signal names look like 'a1' or 's2'");
        int k = 0;
        try {
            k = std::stoi(s.substr(1));
        } catch (const std::exception&) {
            bad(field, "bad signal name '" + s + "'");
        }
        id = s[0] == 'a' ? k - 1 : t_a + k - 1;
        if ((s[0] == 'a' && (k < 1 || k > t_a)) || (s[0] == 's' && (k < 1 || id >= signal_count))) {
            bad(field, "signal '" + s + "' does not exist");
        }
    } else {
        bad(field, "expected a signal name or index");
    }
    if (id < 0 || id >= signal_count) bad(field, "signal index out of range");
    return id;
}

PlantTopology topology_from_json(const json& j) {
    PlantTopology t;
    t.n = integer(need(j, "n", "topology"), "topology.n");
    t.m = integer(need(j, "m", "topology"), "topology.m");
    t.l = integer(need(j, "l", "topology"), "topology.l");
    const json& ops = need(j, "operation_modes", "topology");
    if (!ops.is_array() || ops.empty()) bad("topology.operation_modes", "expected a nonempty array");
    for (size_t i = 0; i < ops.size(); ++i) {
        const std::string f = "topology.operation_modes[" + std::to_string(i) + "]";
        OperationMode op;
        op.name = ops[i].value("name", "op" + std::to_string(i + 1));
        op.A = matrix_from_json(need(ops[i], "A", f), f + ".A", t.n);
        op.B = ops[i].contains("B") ? matrix_from_json(ops[i]["B"], f + ".B", t.n) : Mat(Mat::Zero(t.n, t.m));
        op.C = matrix_from_json(need(ops[i], "C", f), f + ".C", t.l);
        op.D = ops[i].contains("D") ? matrix_from_json(ops[i]["D"], f + ".D", t.l) : Mat(Mat::Zero(t.l, t.m));
        t.operation_modes.push_back(op);
    }
    t.actuator_matrix = j.contains("actuator_matrix") ? matrix_from_json(j["actuator_matrix"], "topology.actuator_matrix", t.n)
                                                      : Mat(Mat::Zero(t.n, 0));
    t.sensor_matrix = j.contains("sensor_matrix") ? matrix_from_json(j["sensor_matrix"], "topology.sensor_matrix", t.l)
                                                  : Mat(Mat::Zero(t.l, 0));
    t.Q = matrix_from_json(need(j, "Q", "topology"), "topology.Q", t.n);
    t.R = matrix_from_json(need(j, "R", "topology"), "topology.R", t.l);
    t.validate();
    return t;
}

json topology_to_json(const PlantTopology& t) {
    json ops = json::array();
    for (const OperationMode& op : t.operation_modes) {
        ops.push_back({{"name", op.name}, {"A", to_json(op.A)}, {"B", to_json(op.B)}, {"C", to_json(op.C)}, {"D", to_json(op.D)}});
    }
    return {{"n", t.n},
            {"m", t.m},
            {"l", t.l},
            {"operation_modes", ops},
            {"actuator_matrix", to_json(t.actuator_matrix)},
            {"sensor_matrix", to_json(t.sensor_matrix)},
            {"Q", to_json(t.Q)},
            {"R", to_json(t.R)}};
}

ModeSet modes_from_json(const json& j, const PlantTopology& t, std::vector<std::string>* warnings) {
    const json& atk = need(j, "attack", "topology");
    if (atk.contains("supports")) {
        const json& sup = atk["supports"];
        if (!sup.is_array() || sup.empty()) bad("topology.attack.supports", "expected a nonempty array");
        ModeSet modes;
        for (size_t i = 0; i < sup.size(); ++i) {
            const std::string f = "topology.attack.supports[" + std::to_string(i) + "]";
            const int op = sup[i].contains("operation_mode") ? integer(sup[i]["operation_mode"], f + ".operation_mode") - 1 : 0;
            if (op < 0 || op >= t.t_m()) bad(f + ".operation_mode", "out of range (one-based)");
            std::vector<int> sig;
            const json& s = need(sup[i], "signals", f);
            if (!s.is_array()) bad(f + ".signals", "expected an array");
            for (size_t k = 0; k < s.size(); ++k) {
                sig.push_back(parse_signal(s[k], t.t_a(), t.signal_count(), f + ".signals[" + std::to_string(k) + "]"));
            }
            modes.push_back(build_mode(t, AttackSupport::from_signals(t, op, sig)));
            if (modes.back().p() > t.l) {
                throw ConfigError(f + ": attack dimension " + std::to_string(modes.back().p()) +
                                  " exceeds the number of outputs l = " + std::to_string(t.l) +
                                  "; no estimator can correct more attacks than there are measurements");
            }
        }
        return modes;
    }
    const int p = integer(need(atk, "p", "topology.attack"), "topology.attack.p");
    EnumerationLimits lim;
    if (atk.contains("max_actuator_attacks")) lim.max_actuator_attacks = integer(atk["max_actuator_attacks"], "topology.attack.max_actuator_attacks");
    if (atk.contains("max_sensor_attacks")) lim.max_sensor_attacks = integer(atk["max_sensor_attacks"], "topology.attack.max_sensor_attacks");
    return enumerate_modes(t, p, lim, warnings);
}

int parse_mode_ref(const json& j, const ModeSet& modes, const std::string& field) {
    if (j.is_number_integer()) {
        const int q = j.get<int>();
        if (q < 1 || q > static_cast<int>(modes.size())) bad(field, "mode number out of range (one-based)");
        return q - 1;
    }
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        for (size_t i = 0; i < modes.size(); ++i) {
            if (modes[i].label == s) return static_cast<int>(i);
        }
        bad(field, "no mode labelled '" + s + "'");
    }
    bad(field, "expected a one-based mode number or a mode label");
}

SignalProfile profile_from_json(const json& j, const std::string& field) {
    const std::string type = need(j, "type", field).get<std::string>();
    SignalProfile p;
    if (type == "zero") {
        p.kind = SignalProfile::Kind::Zero;
    } else if (type == "constant") {
        p = SignalProfile::constant(number(need(j, "value", field), field + ".value"));
    } else if (type == "sine") {
        p = SignalProfile::sine(number(need(j, "amplitude", field), field + ".amplitude"),
                                number(need(j, "period", field), field + ".period"),
                                j.contains("phase") ? number(j["phase"], field + ".phase") : 0.0);
    } else if (type == "ramp") {
        p = SignalProfile::ramp(number(need(j, "slope", field), field + ".slope"),
                                j.contains("start") ? number(j["start"], field + ".start") : 0.0,
                                j.contains("initial") ? number(j["initial"], field + ".initial") : 0.0);
    } else if (type == "piecewise") {
        std::vector<std::pair<double, double>> knots;
        const json& kn = need(j, "knots", field);
        for (size_t i = 0; i < kn.size(); ++i) {
            if (!kn[i].is_array() || kn[i].size() != 2) bad(field + ".knots", "each knot is [time, value]");
            knots.emplace_back(number(kn[i][0], field + ".knots"), number(kn[i][1], field + ".knots"));
        }
        p = SignalProfile::piecewise(std::move(knots));
    } else {
        bad(field + ".type", "unknown profile type '" + type + "'");
    }
    if (j.contains("start") && type != "ramp") p.start = number(j["start"], field + ".start");
    if (j.contains("stop")) p.stop = number(j["stop"], field + ".stop");
    return p;
}

Scenario scenario_from_json(const json& j, const ModeSet& modes, int t_a, const Scenario* defaults) {
    const int n = modes.at(0).n(), m = modes[0].m();
    const int signals = std::max(signal_count(modes), t_a);
    Scenario s;
    if (defaults) {
        s = *defaults;
    } else {
        s.x0 = Vec::Zero(n);
        s.x0_hat = Vec::Zero(n);
        s.P0 = Mat::Identity(n, n);
    }
    if (!j.is_object()) bad("scenario", "expected an object");
    if (j.contains("horizon")) s.horizon = integer(j["horizon"], "scenario.horizon");
    if (j.contains("dt")) s.dt = number(j["dt"], "scenario.dt");
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("noise")) s.noise = j["noise"].get<bool>();
    if (j.contains("mode_schedule")) {
        s.mode_schedule.clear();
        for (size_t i = 0; i < j["mode_schedule"].size(); ++i) {
            const json& e = j["mode_schedule"][i];
            const std::string f = "scenario.mode_schedule[" + std::to_string(i) + "]";
            s.mode_schedule.push_back({integer(need(e, "step", f), f + ".step"), parse_mode_ref(need(e, "mode", f), modes, f + ".mode")});
        }
    }
    if (j.contains("inputs")) {
        s.inputs.clear();
        for (size_t i = 0; i < j["inputs"].size(); ++i) {
            const json& e = j["inputs"][i];
            const std::string f = "scenario.inputs[" + std::to_string(i) + "]";
            InputSegment seg;
            seg.begin = integer(need(e, "begin", f), f + ".begin");
            seg.end = integer(need(e, "end", f), f + ".end");
            seg.value = vector_from_json(need(e, "value", f), f + ".value");
            if (seg.value.size() != m) bad(f + ".value", "expected length " + std::to_string(m));
            s.inputs.push_back(seg);
        }
    }
    if (j.contains("input_profiles")) {
        s.input_profiles.assign(m, SignalProfile{});
        for (auto it = j["input_profiles"].begin(); it != j["input_profiles"].end(); ++it) {
            const std::string f = "scenario.input_profiles." + it.key();
            int idx = 0;
            try {
                idx = std::stoi(it.key());
            } catch (const std::exception&) {
                bad(f, "keys are one-based input numbers");
            }
            if (idx < 1 || idx > m) bad(f, "input number out of range");
            s.input_profiles[idx - 1] = profile_from_json(it.value(), f);
        }
    }
    if (j.contains("attacks")) {
        s.attack_profiles.assign(signals, SignalProfile{});
        for (auto it = j["attacks"].begin(); it != j["attacks"].end(); ++it) {
            const std::string f = "scenario.attacks." + it.key();
            const int id = parse_signal(json(it.key()), t_a, signals, f);
            s.attack_profiles[id] = profile_from_json(it.value(), f);
        }
    }
    if (j.contains("x0")) s.x0 = vector_from_json(j["x0"], "scenario.x0");
    if (j.contains("x0_hat")) s.x0_hat = vector_from_json(j["x0_hat"], "scenario.x0_hat");
    if (j.contains("P0")) {
        s.P0 = j["P0"].is_number() ? Mat(number(j["P0"], "scenario.P0") * Mat::Identity(n, n))
                                   : matrix_from_json(j["P0"], "scenario.P0", n);
    }
    s.validate(modes);
    return s;
}

std::vector<Line> read_edge_list(std::istream& in) {
    std::vector<Line> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        int a = 0, b = 0;
        double t = 0.0;
        if (!(ss >> a >> b)) {
            if (lineno == 1) continue;  // header row
            throw ConfigError("edge list line " + std::to_string(lineno) + ": expected from,to,susceptance");
        }
        if (!(ss >> t)) t = 1.5;
        if (a < 1 || b < 1) {
            throw ConfigError("edge list line " + std::to_string(lineno) + ": bus numbers are one-based");
        }
        out.push_back({a - 1, b - 1, t});
    }
    return out;
}

std::vector<Line> read_edge_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open edge list " + path.string());
    return read_edge_list(in);
}

PowerNetwork network_from_json(const json& j, const std::filesystem::path& base_dir) {
    const int buses = integer(need(j, "buses", "network"), "network.buses");
    std::vector<int> gens;
    for (const json& g : need(j, "generators", "network")) gens.push_back(integer(g, "network.generators") - 1);
    std::vector<Line> lines;
    if (j.contains("edges_csv")) {
        std::filesystem::path p = j["edges_csv"].get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        lines = read_edge_list(p);
    }
    if (j.contains("lines")) {
        for (const json& e : j["lines"]) {
            if (!e.is_array() || e.size() < 2) bad("network.lines", "each line is [from, to, susceptance?]");
            lines.push_back({integer(e[0], "network.lines") - 1, integer(e[1], "network.lines") - 1,
                             e.size() > 2 ? number(e[2], "network.lines") : 1.5});
        }
    }
    PowerNetwork net = make_network(buses, gens, lines);
    if (j.contains("dt")) net.dt = number(j["dt"], "network.dt");
    if (j.contains("process_noise")) net.process_noise = number(j["process_noise"], "network.process_noise");
    if (j.contains("measurement_noise")) net.measurement_noise = number(j["measurement_noise"], "network.measurement_noise");
    for (Bus& b : net.buses) {
        if (j.contains("generator_inertia") && b.generator) b.inertia = number(j["generator_inertia"], "network.generator_inertia");
        if (j.contains("load_inertia") && !b.generator) b.inertia = number(j["load_inertia"], "network.load_inertia");
        if (j.contains("damping")) b.damping = number(j["damping"], "network.damping");
    }
    net.validate();
    return net;
}

std::vector<PowerAttackMode> power_attacks_from_json(const json& j, const PowerNetwork& net) {
    std::vector<PowerAttackMode> out;
    const json& list = need(j, "attack_modes", "network");
    for (size_t i = 0; i < list.size(); ++i) {
        const std::string f = "network.attack_modes[" + std::to_string(i) + "]";
        PowerAttackMode a;
        a.name = list[i].value("name", "q" + std::to_string(i + 1));
        if (list[i].contains("removed_lines")) {
            for (const json& e : list[i]["removed_lines"]) {
                if (!e.is_array() || e.size() != 2) bad(f + ".removed_lines", "each entry is [from, to]");
                a.removed_lines.emplace_back(integer(e[0], f) - 1, integer(e[1], f) - 1);
            }
        }
        if (list[i].contains("attacked_generators")) {
            for (const json& g : list[i]["attacked_generators"]) {
                const int gi = integer(g, f + ".attacked_generators") - 1;
                if (gi < 0 || gi >= static_cast<int>(net.generators().size())) bad(f + ".attacked_generators", "generator number out of range");
                a.attacked_generators.push_back(gi);
            }
        }
        out.push_back(a);
    }
    return out;
}

EstimatorConfig estimator_from_json(const json& j, const ModeSet& modes) {
    EstimatorConfig c;
    if (j.is_null()) return c;
    if (j.contains("epsilon")) c.epsilon = number(j["epsilon"], "estimator.epsilon");
    if (j.contains("rho")) c.rho = number(j["rho"], "estimator.rho");
    if (j.contains("window")) c.window = integer(j["window"], "estimator.window");
    if (j.contains("nominal_mode")) c.nominal_mode = parse_mode_ref(j["nominal_mode"], modes, "estimator.nominal_mode");
    if (!(c.epsilon > 0.0) || c.rho < 1.0 || c.window < 1) {
        bad("estimator", "needs epsilon > 0, rho >= 1, window >= 1");
    }
    return c;
}

ControllerSettings controller_from_json(const json& j, int n, int m) {
    ControllerSettings s;
    s.x_ref = Vec::Zero(n);
    if (j.is_null()) return s;
    if (j.contains("control_inputs")) {
        for (const json& c : j["control_inputs"]) s.design.control_inputs.push_back(integer(c, "controller.control_inputs") - 1);
    }
    const int mc = s.design.control_inputs.empty() ? m : static_cast<int>(s.design.control_inputs.size());
    if (j.contains("state_weight")) {
        s.design.weights.Q = j["state_weight"].is_number() ? Mat(number(j["state_weight"], "controller.state_weight") * Mat::Identity(n, n))
                                                           : matrix_from_json(j["state_weight"], "controller.state_weight", n);
    }
    if (j.contains("input_weight")) {
        s.design.weights.R = j["input_weight"].is_number() ? Mat(number(j["input_weight"], "controller.input_weight") * Mat::Identity(mc, mc))
                                                           : matrix_from_json(j["input_weight"], "controller.input_weight", mc);
    }
    if (j.contains("d2_bound")) s.design.d2_bound = number(j["d2_bound"], "controller.d2_bound");
    if (j.contains("d2_rate_bound")) s.design.d2_rate_bound = number(j["d2_rate_bound"], "controller.d2_rate_bound");
    if (j.contains("x_ref")) {
        s.x_ref = vector_from_json(j["x_ref"], "controller.x_ref");
        if (s.x_ref.size() != n) bad("controller.x_ref", "expected length " + std::to_string(n));
    }
    return s;
}

std::vector<std::string> trace_columns(int n, int m, int l, int signal_count, int modes) {
    std::vector<std::string> cols = {"k", "q_true", "q_hat"};
    auto add = [&](const char* prefix, int count) {
        for (int i = 0; i < count; ++i) cols.push_back(prefix + std::to_string(i + 1));
    };
    add("x", n);
    add("xhat", n);
    add("y", l);
    add("u", m);
    add("d", signal_count);
    add("dhat", signal_count);
    add("mu", modes);
    add("Pxx", n);
    return cols;
}

void write_trace_csv(std::ostream& out, const Trace& trace, const ModeSet& modes) {
    const int n = modes[0].n(), m = modes[0].m(), l = modes[0].l();
    out << kTraceSchema << '\n';
    const auto cols = trace_columns(n, m, l, trace.signal_count, static_cast<int>(modes.size()));
    for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    auto put = [&](const Vec& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << fmt(v(i));
    };
    for (const TraceRow& r : trace.rows) {
        out << r.k << ',' << r.q_true + 1 << ',' << r.q_hat + 1;
        put(r.x);
        put(r.x_hat);
        put(r.y);
        put(r.u);
        put(r.d_true);
        put(r.d_hat);
        put(r.mu);
        put(r.Px_diag);
        out << '\n';
    }
}

json verdict_to_json(const DetectabilityVerdict& v) {
    return {{"strongly_detectable", v.strongly_detectable},
            {"normal_rank", v.normal_rank},
            {"full_rank", v.full_rank},
            {"invariant_zeros", complex_list(v.invariant_zeros)},
            {"max_zero_modulus", v.max_zero_modulus},
            {"reason", v.reason}};
}

json bound_to_json(const BoundReport& r) {
    json entries = json::array();
    for (const BoundEntry& e : r.entries) entries.push_back({{"mode", e.label}, {"p", e.p}, {"within_bound", e.within_bound}});
    return {{"l", r.l}, {"p_star_bound", r.p_star_bound}, {"all_within", r.all_within}, {"modes", entries}};
}

json resilience_to_json(const ResilienceReport& r, const ModeSet& modes) {
    json pairs = json::array();
    for (const PairCheck& p : r.pairs) {
        json e = {{"q", modes[p.q].label},
                  {"q_prime", modes[p.q_prime].label},
                  {"outputs_differ", p.outputs_differ},
                  {"rank", p.rank},
                  {"required", p.required},
                  {"satisfied", p.satisfied}};
        if (!p.note.empty()) e["note"] = p.note;
        pairs.push_back(e);
    }
    return {{"hypothesis_holds", r.hypothesis_holds}, {"guaranteed", r.guaranteed}, {"reason", r.reason}, {"pairs", pairs}};
}

json report_to_json(const DetectionReport& r, const ModeSet& modes) {
    json set = json::array();
    for (int q : r.indistinguishable_set) set.push_back(modes[q].label);
    json out = {{"attack_detected", r.attack_detected},
                {"top_mode", modes[r.top_mode].label},
                {"indistinguishable_set", set},
                {"window_used", r.window_used},
                {"bayes_factors", r.bayes_factors}};
    out["identified_mode"] = r.identified_mode ? json(modes[*r.identified_mode].label) : json(nullptr);
    return out;
}

json gains_to_json(const ControllerGains& g) {
    json inputs = json::array();
    for (int c : g.control_inputs) inputs.push_back(c + 1);
    return {{"control_inputs", inputs},
            {"Kc", to_json(g.Kc)},
            {"J1", to_json(g.J1)},
            {"J2", to_json(g.J2)},
            {"J_tilde", to_json(g.J_tilde)},
            {"gamma1", g.gamma1},
            {"gamma2", g.gamma2},
            {"spectral_radius", g.spectral_radius}};
}

json plan_to_json(const UnidentifiablePlan& p, const ModeSet& modes) {
    return {{"masquerade", modes[p.masquerade].label},
            {"true_mode", modes[p.true_mode].label},
            {"feasible", p.feasible},
            {"reason", p.reason},
            {"Ds", to_json(p.Ds)}};
}

json summary_json(const Trace& trace, const ModeSet& modes, int settle_steps) {
    json out;
    out["steps"] = trace.rows.size();
    out["truncated"] = trace.truncated;
    out["diagnostics"] = trace.diagnostics;
    out["warnings"] = trace.warnings;
    if (trace.rows.empty()) return out;
    json mu = json::object();
    const Vec& last = trace.rows.back().mu;
    for (size_t i = 0; i < modes.size(); ++i) mu[modes[i].label] = last(static_cast<Eigen::Index>(i));
    out["final_mu"] = mu;
    out["final_q_hat"] = modes[trace.rows.back().q_hat].label;

    const int n = modes[0].n();
    Vec sq = Vec::Zero(n);
    int count = 0, hits = 0;
    for (const TraceRow& r : trace.rows) {
        if (r.k < settle_steps) continue;
        sq += (r.x - r.x_hat).cwiseAbs2();
        hits += r.q_hat == r.q_true;
        ++count;
    }
    if (count > 0) {
        out["state_rmse"] = to_json(Vec((sq / count).cwiseSqrt()));
        out["mode_accuracy"] = static_cast<double>(hits) / count;
    }
    out["settle_steps"] = settle_steps;
    if (trace.report) out["detection"] = report_to_json(*trace.report, modes);
    return out;
}

}  // namespace rse::io
