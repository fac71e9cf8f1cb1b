#include "cli.hpp"

#include "rse/analysis.hpp"
#include "rse/errors.hpp"
#include "rse/io.hpp"
#include "rse/network.hpp"
#include "rse/sim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace rse::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level() {
    const char* env = std::getenv("RSE_LOG_LEVEL");
    const std::string v = env ? env : "warn";
    if (v == "error") return Level::Error;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
}

class Log {
public:
    explicit Log(std::ostream& err) : err_(err), level_(log_level()) {}
    void warn(const std::string& msg) const { emit(Level::Warn, "warning", msg); }
    void info(const std::string& msg) const { emit(Level::Info, "info", msg); }
    void debug(const std::string& msg) const { emit(Level::Debug, "debug", msg); }

private:
    void emit(Level at, const char* tag, const std::string& msg) const {
        if (static_cast<int>(at) <= static_cast<int>(level_)) err_ << "rse: " << tag << ": " << msg << '\n';
    }
    std::ostream& err_;
    Level level_;
};

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    int runs = 1;
    bool mitigate = false;
    std::string out_dir;
};

struct Setup {
    fs::path base_dir;
    json doc;
    std::string preset;
    PlantTopology topology;
    ModeSet modes;
    std::vector<std::string> warnings;
    std::optional<Scenario> scenario;
    EstimatorConfig estimator;
    std::optional<io::ControllerSettings> controller;
    int settle_steps = 0;
};

json load_maybe_file(const json& doc, const char* key, const fs::path& base) {
    const std::string file_key = std::string(key) + "_file";
    if (doc.contains(file_key)) {
        fs::path p = doc[file_key].get<std::string>();
        if (p.is_relative()) p = base / p;
        return io::read_json_file(p);
    }
    return doc.contains(key) ? doc[key] : json();
}

Setup load_setup(const std::string& path) {
    if (path.empty()) throw ConfigError("--config is required");
    Setup s;
    s.base_dir = fs::path(path).parent_path();
    s.doc = io::read_json_file(path);
    if (!s.doc.contains("system")) throw ConfigError(path + ": missing required field 'system'");
    json sys = s.doc["system"];
    if (sys.is_string()) sys = json{{"preset", sys}};

    std::optional<Scenario> default_scenario;
    if (sys.contains("preset")) {
        s.preset = sys["preset"].get<std::string>();
        if (s.preset == "benchmark") {
            Benchmark b = build_benchmark();
            s.topology = b.topology;
            s.modes = b.modes;
            default_scenario = b.scenario;
        } else if (s.preset == "three_area") {
            ThreeArea ta = three_area_network();
            s.topology = ta.model.topology;
            s.modes = ta.model.modes;
            s.warnings = ta.model.warnings;
            default_scenario = three_area_scenario(ta);
            s.controller = io::ControllerSettings{three_area_controller(), three_area_reference(ta)};
            s.settle_steps = 1000;
        } else {
            throw ConfigError("system.preset: unknown preset '" + s.preset + "' (benchmark, three_area)");
        }
    } else if (sys.contains("topology") || sys.contains("topology_file")) {
        const json topo = load_maybe_file(sys, "topology", s.base_dir);
        s.topology = io::topology_from_json(topo);
        s.modes = io::modes_from_json(topo, s.topology, &s.warnings);
    } else if (sys.contains("network")) {
        const json& nj = sys["network"];
        const PowerNetwork net = io::network_from_json(nj, s.base_dir);
        if (nj.contains("attack_modes")) {
            PowerModel pm = build_power_network(net, io::power_attacks_from_json(nj, net));
            s.topology = pm.topology;
            s.modes = pm.modes;
            s.warnings = pm.warnings;
        } else if (nj.contains("enumerate")) {
            const json& en = nj["enumerate"];
            std::vector<std::pair<std::string, LineSet>> ops = {{"intact", {}}};
            if (en.contains("operation_modes")) {
                ops.clear();
                for (const json& o : en["operation_modes"]) {
                    LineSet cut;
                    for (const json& e : o.value("removed_lines", json::array())) {
                        cut.emplace_back(e.at(0).get<int>() - 1, e.at(1).get<int>() - 1);
                    }
                    ops.emplace_back(o.value("name", "op" + std::to_string(ops.size() + 1)), cut);
                }
            }
            s.topology = power_topology(net, ops, &s.warnings);
            s.modes = enumerate_modes(s.topology, en.value("p", 1), {}, &s.warnings);
        } else {
            throw ConfigError("system.network: needs 'attack_modes' or 'enumerate'");
        }
    } else {
        throw ConfigError("system: expected 'preset', 'topology', 'topology_file' or 'network'");
    }

    const json sc = load_maybe_file(s.doc, "scenario", s.base_dir);
    if (!sc.is_null()) {
        s.scenario = io::scenario_from_json(sc, s.modes, s.topology.t_a(), default_scenario ? &*default_scenario : nullptr);
    } else {
        s.scenario = default_scenario;
    }
    s.estimator = io::estimator_from_json(s.doc.value("estimator", json()), s.modes);
    if (s.doc.contains("controller")) {
        s.controller = io::controller_from_json(s.doc["controller"], s.modes[0].n(), s.modes[0].m());
    }
    if (s.doc.contains("settle_steps")) s.settle_steps = s.doc["settle_steps"].get<int>();
    return s;
}

void emit(const json& j, const Options& o, const std::string& file, std::ostream& out) {
    if (o.out_dir.empty()) {
        out << j.dump(2) << '\n';
        return;
    }
    fs::create_directories(o.out_dir);
    std::ofstream f(fs::path(o.out_dir) / file);
    f << j.dump(2) << '\n';
    if (!f) throw Error("cannot write " + (fs::path(o.out_dir) / file).string());
}

int detection_code(const DetectionReport& r) {
    if (r.indistinguishable_set.size() > 1) return kExitIndistinguishable;
    return r.attack_detected ? kExitDetected : kExitOk;
}

int cmd_enumerate(const Options& o, std::ostream& out, const Log& log) {
    Setup s = load_setup(o.config);
    for (const std::string& w : s.warnings) log.warn(w);
    json modes = json::array();
    for (size_t i = 0; i < s.modes.size(); ++i) {
        const ModeModel& m = s.modes[i];
        modes.push_back({{"index", i + 1},
                         {"label", m.label},
                         {"operation_mode", s.topology.operation_modes[m.operation_mode].name},
                         {"p", m.p()}});
    }
    emit({{"count", s.modes.size()}, {"modes", modes}, {"warnings", s.warnings}}, o, "modes.json", out);
    return kExitOk;
}

int cmd_analyze(const Options& o, std::ostream& out, const Log& log) {
    Setup s = load_setup(o.config);
    for (const std::string& w : s.warnings) log.warn(w);
    json modes = json::array();
    for (size_t i = 0; i < s.modes.size(); ++i) {
        json e = io::verdict_to_json(strong_detectability(s.modes[i]));
        e["index"] = i + 1;
        e["label"] = s.modes[i].label;
        e["p"] = s.modes[i].p();
        modes.push_back(e);
    }
    const BoundReport bound = max_correctable(s.modes);
    json report = {{"modes", modes},
                   {"bound", io::bound_to_json(bound)},
                   {"resilience", io::resilience_to_json(resilience_guarantee(s.modes), s.modes)},
                   {"warnings", s.warnings}};
    emit(report, o, "analysis.json", out);
    if (!bound.all_within) {
        throw ConfigError("attack dimension exceeds the number of outputs l = " + std::to_string(bound.l));
    }
    return kExitOk;
}

std::vector<std::uint64_t> seeds_for(const Options& o, const Scenario& sc) {
    if (o.runs < 1) throw ConfigError("--runs must be at least 1");
    const std::uint64_t first = o.seed.value_or(sc.seed);
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < o.runs; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
    return seeds;
}

SimulationOptions sim_options(const Setup& s, const Options& o, const Log& log) {
    SimulationOptions so;
    so.estimator = s.estimator;
    if (o.mitigate && !s.controller) {
        throw ConfigError("--mitigate needs a 'controller' section in the config");
    }
    if (s.controller) {
        ControllerDesign d = s.controller->design;
        d.reject_attacks = o.mitigate;
        std::vector<ControllerGains> gains;
        for (const ModeModel& m : s.modes) gains.push_back(design_controller(transform(m), d));
        so.controllers = gains;
        so.x_ref = s.controller->x_ref;
        log.info(std::string("closed loop with ") + (o.mitigate ? "attack rejection" : "plain state feedback"));
    }
    return so;
}

double regulation_rms(const Trace& t, const Vec& x_ref, int settle) {
    double sum = 0.0;
    int count = 0;
    for (const TraceRow& r : t.rows) {
        if (r.k < settle) continue;
        sum += (r.x - x_ref).squaredNorm();
        ++count;
    }
    return count ? std::sqrt(sum / count) : 0.0;
}

/// Writes traces and the summary; returns the combined exit code.
int finish_runs(const Setup& s, const Options& o, const std::vector<std::uint64_t>& seeds,
                const std::vector<Trace>& traces, const SimulationOptions& so, json extra, std::ostream& out,
                const Log& log) {
    const fs::path dir = o.out_dir.empty() ? fs::path("rse-out") : fs::path(o.out_dir);
    fs::create_directories(dir);
    json runs = json::array();
    int code = kExitOk;
    double reg_sum = 0.0;
    for (size_t i = 0; i < traces.size(); ++i) {
        const Trace& t = traces[i];
        const std::string name = traces.size() == 1 ? "trace.csv" : "trace_seed" + std::to_string(seeds[i]) + ".csv";
        std::ofstream f(dir / name);
        io::write_trace_csv(f, t, s.modes);
        json sj = io::summary_json(t, s.modes, s.settle_steps);
        sj["seed"] = seeds[i];
        sj["trace"] = name;
        if (so.controllers) {
            const double reg = regulation_rms(t, so.x_ref, s.settle_steps);
            sj["regulation_rms"] = reg;
            reg_sum += reg;
        }
        runs.push_back(sj);
        for (const std::string& w : t.warnings) log.warn("seed " + std::to_string(seeds[i]) + ": " + w);
        for (const std::string& d : t.diagnostics) log.warn("seed " + std::to_string(seeds[i]) + ": " + d);
        if (t.truncated) {
            code = kExitError;
        } else if (code != kExitError && t.report) {
            code = std::max(code, detection_code(*t.report));
        }
    }
    json summary = {{"runs", runs}, {"mitigate", o.mitigate}};
    if (so.controllers) summary["regulation_rms_mean"] = reg_sum / static_cast<double>(traces.size());
    for (auto it = extra.begin(); it != extra.end(); ++it) summary[it.key()] = it.value();
    std::ofstream f(dir / "summary.json");
    f << summary.dump(2) << '\n';
    out << "wrote " << (dir / "summary.json").string() << '\n';
    if (code == kExitError) log.warn("an estimator or controller step failed; partial trace kept");
    return code;
}

int cmd_simulate(const Options& o, std::ostream& out, const Log& log) {
    Setup s = load_setup(o.config);
    for (const std::string& w : s.warnings) log.warn(w);
    if (!s.scenario) throw ConfigError("simulate needs a 'scenario' section");
    const SimulationOptions so = sim_options(s, o, log);
    const auto seeds = seeds_for(o, *s.scenario);
    log.info("running " + std::to_string(seeds.size()) + " seed(s)");
    const std::vector<Trace> traces = simulate_batch(s.modes, *s.scenario, so, seeds);
    return finish_runs(s, o, seeds, traces, so, json::object(), out, log);
}

int cmd_redteam(const Options& o, std::ostream& out, const Log& log) {
    Setup s = load_setup(o.config);
    for (const std::string& w : s.warnings) log.warn(w);
    if (!s.scenario) throw ConfigError("redteam needs a 'scenario' section");
    if (!s.doc.contains("redteam")) throw ConfigError("redteam needs a 'redteam' section");
    const json& rt = s.doc["redteam"];
    const int q = io::parse_mode_ref(rt.at("masquerade"), s.modes, "redteam.masquerade");
    const int star = io::parse_mode_ref(rt.at("true_mode"), s.modes, "redteam.true_mode");
    const int moment_runs = rt.value("moment_runs", 100);

    Scenario nominal = *s.scenario;
    if (o.seed) nominal.seed = *o.seed;
    nominal.mode_schedule = {{0, star}};
    std::vector<TransformedMode> tms;
    for (const ModeModel& m : s.modes) tms.push_back(transform(m));
    const AttackerMoments mom = estimate_attacker_moments(s.modes, star, nominal, moment_runs);
    const UnidentifiablePlan plan = synth_unidentifiable(tms, q, star, mom);
    json pj = io::plan_to_json(plan, s.modes);
    if (!plan.feasible) {
        emit(pj, o, "plan.json", out);
        throw ConfigError("no unidentifiable attack exists: " + plan.reason);
    }

    SimulationOptions so = sim_options(s, o, log);
    so.redteam = plan;
    const auto seeds = seeds_for(o, *s.scenario);
    const std::vector<Trace> traces = simulate_batch(s.modes, *s.scenario, so, seeds);
    json ratios = json::array();
    for (const Trace& t : traces) {
        const auto r = window_ratios(t.log_likelihoods, q, star, s.estimator.window);
        ratios.push_back(fraction_within(r, s.estimator.rho));
    }
    return finish_runs(s, o, seeds, traces, so, {{"plan", pj}, {"fraction_windows_within_rho", ratios}}, out, log);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Resilient state estimation under switching and data-injection attacks"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&o](CLI::App* sub, bool sim) {
        sub->add_option("--config", o.config, "Run configuration (JSON)")->required();
        sub->add_option("--out", o.out_dir, "Output directory");
        if (sim) {
            sub->add_option("--seed", o.seed, "Seed of the first run");
            sub->add_option("--runs", o.runs, "Number of seeds, run in parallel");
            sub->add_flag("--mitigate", o.mitigate, "Use the attack-rejecting controller");
        }
    };
    auto* analyze = app.add_subcommand("analyze", "Detectability, attack bound and resilience report");
    auto* enumerate = app.add_subcommand("enumerate", "List the attack modes of a topology");
    auto* simulate = app.add_subcommand("simulate", "Run a scenario; write trace CSV and summary JSON");
    auto* redteam = app.add_subcommand("redteam", "Synthesize and run an unidentifiable attack");
    add_common(analyze, false);
    add_common(enumerate, false);
    add_common(simulate, true);
    add_common(redteam, true);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();  // program name
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    const Log log(err);
    try {
        if (*analyze) return cmd_analyze(o, out, log);
        if (*enumerate) return cmd_enumerate(o, out, log);
        if (*simulate) return cmd_simulate(o, out, log);
        if (*redteam) return cmd_redteam(o, out, log);
    } catch (const std::exception& e) {
        err << "rse: error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace rse::cli
