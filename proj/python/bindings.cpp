#include "rse/analysis.hpp"
#include "rse/controller.hpp"
#include "rse/errors.hpp"
#include "rse/filter.hpp"
#include "rse/mm_estimator.hpp"
#include "rse/model.hpp"
#include "rse/network.hpp"
#include "rse/sim.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <optional>

namespace py = pybind11;
using namespace rse;

namespace {

template <typename F>
Mat stack_rows(const Trace& t, F field) {
    if (t.rows.empty()) return Mat();
    const Eigen::Index cols = field(t.rows.front()).size();
    Mat out(static_cast<Eigen::Index>(t.rows.size()), cols);
    for (size_t k = 0; k < t.rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = field(t.rows[k]).transpose();
    return out;
}

py::dict trace_dict(const Trace& t) {
    py::dict d;
    std::vector<int> k, q_true, q_hat;
    for (const TraceRow& r : t.rows) {
        k.push_back(r.k);
        q_true.push_back(r.q_true);
        q_hat.push_back(r.q_hat);
    }
    d["k"] = k;
    d["q_true"] = q_true;
    d["q_hat"] = q_hat;
    d["x"] = stack_rows(t, [](const TraceRow& r) -> const Vec& { return r.x; });
    d["x_hat"] = stack_rows(t, [](const TraceRow& r) -> const Vec& { return r.x_hat; });
    d["y"] = stack_rows(t, [](const TraceRow& r) -> const Vec& { return r.y; });
    d["u"] = stack_rows(t, [](const TraceRow& r) -> const Vec& { return r.u; });
    d["d_true"] = stack_rows(t, [](const TraceRow& r) -> const Vec& { return r.d_true; });
    d["d_hat"] = stack_rows(t, [](const TraceRow& r) -> const Vec& { return r.d_hat; });
    d["mu"] = stack_rows(t, [](const TraceRow& r) -> const Vec& { return r.mu; });
    d["truncated"] = t.truncated;
    d["diagnostics"] = t.diagnostics;
    d["warnings"] = t.warnings;
    if (t.report) {
        d["attack_detected"] = t.report->attack_detected;
        d["identified_mode"] = t.report->identified_mode ? py::cast(*t.report->identified_mode) : py::none();
        d["indistinguishable_set"] = t.report->indistinguishable_set;
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Mode-matched input and state filtering for hidden-mode switched systems under attack";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<FilterError>(m, "FilterError", base.ptr());

    py::class_<OperationMode>(m, "OperationMode")
        .def(py::init<>())
        .def_readwrite("name", &OperationMode::name)
        .def_readwrite("A", &OperationMode::A)
        .def_readwrite("B", &OperationMode::B)
        .def_readwrite("C", &OperationMode::C)
        .def_readwrite("D", &OperationMode::D);

    py::class_<PlantTopology>(m, "PlantTopology")
        .def(py::init<>())
        .def_readwrite("n", &PlantTopology::n)
        .def_readwrite("m", &PlantTopology::m)
        .def_readwrite("l", &PlantTopology::l)
        .def_readwrite("operation_modes", &PlantTopology::operation_modes)
        .def_readwrite("actuator_matrix", &PlantTopology::actuator_matrix)
        .def_readwrite("sensor_matrix", &PlantTopology::sensor_matrix)
        .def_readwrite("Q", &PlantTopology::Q)
        .def_readwrite("R", &PlantTopology::R)
        .def_property_readonly("t_m", &PlantTopology::t_m)
        .def_property_readonly("t_a", &PlantTopology::t_a)
        .def_property_readonly("t_s", &PlantTopology::t_s)
        .def("validate", &PlantTopology::validate);

    py::class_<AttackSupport>(m, "AttackSupport")
        .def(py::init<>())
        .def_readwrite("operation_mode", &AttackSupport::operation_mode)
        .def_readwrite("I_G", &AttackSupport::I_G)
        .def_readwrite("I_H", &AttackSupport::I_H)
        .def_static("from_signals", &AttackSupport::from_signals, py::arg("topology"), py::arg("operation_mode"),
                    py::arg("signals"));

    py::class_<ModeModel>(m, "ModeModel")
        .def(py::init<>())
        .def_readwrite("label", &ModeModel::label)
        .def_readwrite("operation_mode", &ModeModel::operation_mode)
        .def_readwrite("signals", &ModeModel::signals)
        .def_readwrite("A", &ModeModel::A)
        .def_readwrite("B", &ModeModel::B)
        .def_readwrite("G", &ModeModel::G)
        .def_readwrite("C", &ModeModel::C)
        .def_readwrite("D", &ModeModel::D)
        .def_readwrite("H", &ModeModel::H)
        .def_readwrite("Q", &ModeModel::Q)
        .def_readwrite("R", &ModeModel::R)
        .def_property_readonly("p", &ModeModel::p)
        .def("validate", &ModeModel::validate)
        .def("__repr__", [](const ModeModel& md) { return "<ModeModel '" + md.label + "'>"; });

    m.def("build_mode", &build_mode, py::arg("topology"), py::arg("support"));
    m.def(
        "enumerate_modes",
        [](const PlantTopology& t, int p, std::optional<int> n_a, std::optional<int> n_s) {
            return enumerate_modes(t, p, EnumerationLimits{n_a, n_s});
        },
        py::arg("topology"), py::arg("p"), py::arg("max_actuator_attacks") = py::none(),
        py::arg("max_sensor_attacks") = py::none());
    m.def(
        "model_count",
        [](int t_m, int t_a, int t_s, int p, std::optional<int> n_a, std::optional<int> n_s) {
            return model_count(t_m, t_a, t_s, p, EnumerationLimits{n_a, n_s});
        },
        py::arg("t_m"), py::arg("t_a"), py::arg("t_s"), py::arg("p"), py::arg("max_actuator_attacks") = py::none(),
        py::arg("max_sensor_attacks") = py::none());

    py::class_<TransformedMode>(m, "TransformedMode")
        .def_readonly("mode", &TransformedMode::mode)
        .def_readonly("p_H", &TransformedMode::p_H)
        .def_readonly("sigma", &TransformedMode::sigma)
        .def_readonly("T1", &TransformedMode::T1)
        .def_readonly("T2", &TransformedMode::T2)
        .def_readonly("U1", &TransformedMode::U1)
        .def_readonly("V1", &TransformedMode::V1)
        .def_readonly("R1", &TransformedMode::R1)
        .def_readonly("R2", &TransformedMode::R2);
    m.def("transform", &transform, py::arg("mode"));

    py::class_<FilterState>(m, "FilterState")
        .def_readonly("k", &FilterState::k)
        .def_readonly("x", &FilterState::x)
        .def_readonly("Px", &FilterState::Px)
        .def_readonly("d1", &FilterState::d1)
        .def_readonly("d", &FilterState::d)
        .def_readonly("Pd", &FilterState::Pd)
        .def_readonly("innovation", &FilterState::innovation)
        .def_readonly("R2_star", &FilterState::R2_star);
    m.def("init_filter", &init_filter, py::arg("tm"), py::arg("x0_hat"), py::arg("P0"), py::arg("u0"), py::arg("y0"));
    m.def("filter_step", &filter_step, py::arg("tm"), py::arg("state"), py::arg("u_prev"), py::arg("u_now"),
          py::arg("y_now"));

    m.def("log_likelihood", &log_likelihood, py::arg("residual"), py::arg("R2_star"));
    m.def(
        "update_probabilities",
        [](const Vec& mu, const Vec& ll, double eps) { return update_probabilities(mu, ll, eps).mu; },
        py::arg("mu"), py::arg("log_likelihoods"), py::arg("epsilon") = 1e-6);

    py::class_<StaticMMEstimator>(m, "StaticMMEstimator")
        .def(py::init([](const ModeSet& modes, double epsilon, double rho, int window) {
                 return StaticMMEstimator(modes, EstimatorConfig{epsilon, rho, window, std::nullopt});
             }),
             py::arg("modes"), py::arg("epsilon") = 1e-6, py::arg("rho") = 1.05, py::arg("window") = 200)
        .def("initialize",
             py::overload_cast<const Vec&, const Mat&, const Vec&, const Vec&>(&StaticMMEstimator::initialize),
             py::arg("x0_hat"), py::arg("P0"), py::arg("u0"), py::arg("y0"))
        .def("step", &StaticMMEstimator::step, py::arg("u_prev"), py::arg("u_now"), py::arg("y_now"))
        .def_property_readonly("mu", &StaticMMEstimator::mu)
        .def_property_readonly("q_hat", [](const StaticMMEstimator& e) { return e.fused().q_hat; })
        .def_property_readonly("x_hat", [](const StaticMMEstimator& e) { return e.fused().x; })
        .def_property_readonly("d_hat", [](const StaticMMEstimator& e) { return e.fused().d; });

    py::class_<DetectabilityVerdict>(m, "DetectabilityVerdict")
        .def_readonly("strongly_detectable", &DetectabilityVerdict::strongly_detectable)
        .def_readonly("normal_rank", &DetectabilityVerdict::normal_rank)
        .def_readonly("invariant_zeros", &DetectabilityVerdict::invariant_zeros)
        .def_readonly("max_zero_modulus", &DetectabilityVerdict::max_zero_modulus)
        .def_readonly("reason", &DetectabilityVerdict::reason);
    m.def("strong_detectability", &strong_detectability, py::arg("mode"), py::arg("seed") = 0x5eedULL);
    m.def(
        "max_correctable", [](const ModeSet& modes) { return max_correctable(modes).all_within; }, py::arg("modes"),
        "True when every mode's attack count is within the number of outputs.");
    m.def(
        "resilience_guarantee", [](const ModeSet& modes) { return resilience_guarantee(modes).guaranteed; },
        py::arg("modes"));

    m.def(
        "lqr",
        [](const Mat& A, const Mat& B, const Mat& Q, const Mat& R) {
            const LqrResult r = lqr(A, B, {Q, R});
            return py::make_tuple(r.K, r.P);
        },
        py::arg("A"), py::arg("B"), py::arg("Q") = Mat(), py::arg("R") = Mat(), "Returns (K, P).");
    m.def(
        "design_rejection",
        [](const Mat& B, const Mat& G1) {
            const RejectionGains g = design_rejection(B, G1, Mat::Zero(B.rows(), 0), 1.0, 0.0);
            return py::make_tuple(g.J1, g.gamma1);
        },
        py::arg("B"), py::arg("G1"), "Returns (J1, gamma1) minimizing ||G1 - B J1||_2.");

    py::class_<SignalProfile>(m, "SignalProfile")
        .def(py::init<>())
        .def_static("constant", &SignalProfile::constant, py::arg("level"),
                    py::arg("start") = -std::numeric_limits<double>::infinity(),
                    py::arg("stop") = std::numeric_limits<double>::infinity())
        .def_static("sine", &SignalProfile::sine, py::arg("amplitude"), py::arg("period"), py::arg("phase") = 0.0)
        .def_static("ramp", &SignalProfile::ramp, py::arg("slope"), py::arg("start"), py::arg("initial") = 0.0)
        .def("value", &SignalProfile::value);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("horizon", &Scenario::horizon)
        .def_readwrite("dt", &Scenario::dt)
        .def_readwrite("seed", &Scenario::seed)
        .def_readwrite("noise", &Scenario::noise)
        .def_readwrite("attack_profiles", &Scenario::attack_profiles)
        .def_readwrite("x0", &Scenario::x0)
        .def_readwrite("x0_hat", &Scenario::x0_hat)
        .def_readwrite("P0", &Scenario::P0)
        .def_property(
            "mode_schedule",
            [](const Scenario& s) {
                std::vector<std::pair<int, int>> out;
                for (const ModeSwitch& w : s.mode_schedule) out.emplace_back(w.step, w.mode);
                return out;
            },
            [](Scenario& s, const std::vector<std::pair<int, int>>& v) {
                s.mode_schedule.clear();
                for (const auto& [k, q] : v) s.mode_schedule.push_back({k, q});
            });

    m.def(
        "build_benchmark",
        []() {
            Benchmark b = build_benchmark();
            return py::make_tuple(b.topology, b.modes, b.scenario);
        },
        "Returns (topology, modes, scenario) of the switching benchmark.");
    m.def(
        "three_area_network",
        []() {
            const ThreeArea ta = three_area_network();
            return py::make_tuple(ta.model.modes, three_area_scenario(ta));
        },
        "Returns (modes, scenario) of the three-area breaker example.");
    m.def(
        "simulate",
        [](const ModeSet& modes, const Scenario& sc, std::optional<int> nominal_mode) {
            SimulationOptions so;
            so.estimator.nominal_mode = nominal_mode;
            Trace t;
            {
                py::gil_scoped_release release;
                t = simulate(modes, sc, so);
            }
            return trace_dict(t);
        },
        py::arg("modes"), py::arg("scenario"), py::arg("nominal_mode") = py::none(),
        "Runs the scenario and returns the trace as a dict of arrays.");
}
