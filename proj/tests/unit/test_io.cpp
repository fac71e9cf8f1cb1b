#include "rse/errors.hpp"
#include "rse/io.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <sstream>

using namespace rse;
using io::json;

namespace {

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

json unstable_doc() {
    return io::read_json_file(std::string(RSE_CONFIG_DIR) + "/unstable_zero.json")["system"]["topology"];
}

}  // namespace

TEST(Io, MatrixParsing) {
    const Mat m = io::matrix_from_json(json::parse("[[1, 2], [3, 4]]"), "A");
    EXPECT_EQ(m, (Mat(2, 2) << 1, 2, 3, 4).finished());
    EXPECT_EQ(io::matrix_from_json(json(0.5), "Q", 3), 0.5 * Mat::Identity(3, 3));
    EXPECT_EQ(io::matrix_from_json(json::array(), "G", 4).rows(), 4);
}

TEST(Io, MatrixErrorsNameTheField) {
    EXPECT_NE(error_of([] { io::matrix_from_json(json::parse("[[1, 2], [3]]"), "system.A"); }).find("system.A"),
              std::string::npos);
    EXPECT_NE(error_of([] { io::matrix_from_json(json("x"), "R"); }).find("R:"), std::string::npos);
}

TEST(Io, SignalNames) {
    EXPECT_EQ(io::parse_signal(json("a2"), 2, 5, "s"), 1);
    EXPECT_EQ(io::parse_signal(json("s1"), 2, 5, "s"), 2);
    EXPECT_EQ(io::parse_signal(json(4), 2, 5, "s"), 4);
    EXPECT_THROW(io::parse_signal(json("s9"), 2, 5, "s"), ConfigError);
    EXPECT_THROW(io::parse_signal(json("x1"), 2, 5, "s"), ConfigError);
}

TEST(Io, TopologyRoundTrip) {
    const PlantTopology t = io::topology_from_json(unstable_doc());
    const PlantTopology back = io::topology_from_json(io::topology_to_json(t));
    EXPECT_EQ(back.operation_modes[0].A, t.operation_modes[0].A);
    EXPECT_EQ(back.R, t.R);
    EXPECT_EQ(back.t_a(), 1);
    EXPECT_EQ(back.t_s(), 1);
}

TEST(Io, SupportsAndScenario) {
    const json doc = unstable_doc();
    const PlantTopology t = io::topology_from_json(doc);
    const ModeSet modes = io::modes_from_json(doc, t, nullptr);
    ASSERT_EQ(modes.size(), 1u);
    EXPECT_EQ(modes[0].label, "plant:a1,s1");
    EXPECT_EQ(io::parse_mode_ref(json(1), modes, "m"), 0);
    EXPECT_EQ(io::parse_mode_ref(json("plant:a1,s1"), modes, "m"), 0);
    EXPECT_THROW(io::parse_mode_ref(json(0), modes, "m"), ConfigError);

    const json sc = json::parse(R"({"horizon": 20, "seed": 3, "mode_schedule": [{"step": 0, "mode": 1}],
        "attacks": {"s1": {"type": "constant", "value": 0.5}}, "P0": 0.1})");
    const Scenario s = io::scenario_from_json(sc, modes, t.t_a());
    EXPECT_EQ(s.horizon, 20);
    EXPECT_EQ(s.P0, 0.1 * Mat::Identity(2, 2));
    EXPECT_DOUBLE_EQ(s.attack_profiles.at(1).value(3.0), 0.5);
}

TEST(Io, ScenarioErrorsNameTheField) {
    const json doc = unstable_doc();
    const PlantTopology t = io::topology_from_json(doc);
    const ModeSet modes = io::modes_from_json(doc, t, nullptr);
    const std::string msg =
        error_of([&] { io::scenario_from_json(json::parse(R"({"horizon": "long"})"), modes, t.t_a()); });
    EXPECT_NE(msg.find("scenario.horizon"), std::string::npos) << msg;
}

TEST(Io, EdgeList) {
    std::istringstream in("from,to,susceptance\n# comment\n1,2,1.5\n2,3,0.7\n");
    const std::vector<Line> lines = io::read_edge_list(in);
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[1].from, 1);
    EXPECT_EQ(lines[1].to, 2);
    EXPECT_DOUBLE_EQ(lines[1].susceptance, 0.7);
    std::istringstream zero("0,1,1.5\n");
    EXPECT_THROW(io::read_edge_list(zero), ConfigError);
}

TEST(Io, TraceHeaderMatchesGolden) {
    Benchmark b = build_benchmark();
    b.scenario.horizon = 3;
    b.scenario.mode_schedule = {{0, 2}};
    const Trace tr = simulate(b.modes, b.scenario);
    std::ostringstream os;
    io::write_trace_csv(os, tr, b.modes);
    std::istringstream lines(os.str());
    std::string schema, header;
    std::getline(lines, schema);
    std::getline(lines, header);
    std::ifstream golden(std::string(RSE_GOLDEN_DIR) + "/benchmark_trace_header.csv");
    ASSERT_TRUE(golden.good());
    std::string g_schema, g_header;
    std::getline(golden, g_schema);
    std::getline(golden, g_header);
    EXPECT_EQ(schema, g_schema);
    EXPECT_EQ(header, g_header);
    int rows = 0;
    for (std::string l; std::getline(lines, l);) ++rows;
    EXPECT_EQ(rows, 3);
}
