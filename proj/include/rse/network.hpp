#pragma once

#include "rse/model.hpp"
#include "rse/sim.hpp"

#include <string>
#include <utility>
#include <vector>

namespace rse {

struct Bus {
    bool generator = false;
    double inertia = 100.0;  // m_i
    double damping = 1.0;    // D_i
};

struct Line {
    int from = 0;  // zero-based bus index
    int to = 0;
    double susceptance = 1.5;
};

/// Swing-equation network. State per bus is (theta_i, omega_i), interleaved;
/// inputs are the generators' mechanical power followed by every bus load;
/// each bus measures (P_elec, theta, omega).
struct PowerNetwork {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    double dt = 0.01;
    double process_noise = 0.01;            // per-bus continuous disturbance variance
    double measurement_noise = 1e-8;        // 0.01^4 per measured channel

    int size() const { return static_cast<int>(buses.size()); }
    std::vector<int> generators() const;
    int n() const { return 2 * size(); }
    int m() const { return static_cast<int>(generators().size()) + size(); }
    int l() const { return 3 * size(); }

    void validate() const;
};

/// Defaults: generators m = 10, loads m = 100, D = 1, all lines 1.5.
PowerNetwork make_network(int bus_count, const std::vector<int>& generator_buses, const std::vector<Line>& lines);

using LineSet = std::vector<std::pair<int, int>>;

/// Forward-Euler model of the network with the given lines removed.
OperationMode discretize(const PowerNetwork& net, const LineSet& removed, const std::string& name);

/// Number of connected components after removing lines.
int component_count(const PowerNetwork& net, const LineSet& removed);

/// Topology whose operation modes are the given line-cut sets and whose
/// vulnerable actuators are the generators (in bus order).
PlantTopology power_topology(const PowerNetwork& net, const std::vector<std::pair<std::string, LineSet>>& operation_modes,
                             std::vector<std::string>* warnings = nullptr);

struct PowerAttackMode {
    std::string name;
    LineSet removed_lines;
    std::vector<int> attacked_generators;  // zero-based positions in generators()
};

struct PowerModel {
    PlantTopology topology;
    ModeSet modes;
    std::vector<std::string> warnings;
};

/// One mode per listed attack (line cuts plus attacked generators).
PowerModel build_power_network(const PowerNetwork& net, const std::vector<PowerAttackMode>& attacks);

/// Three generator areas tied radially to a load hub through breakers; the
/// operation modes are all breakers closed plus each single breaker open, and
/// the attacker may also corrupt one generator's mechanical power (12 modes).
struct ThreeArea {
    PowerNetwork network;
    PowerModel model;
};
ThreeArea three_area_network();

/// Constant attack on generator 1 with all breakers closed, then generator 1
/// with breaker 2 open from step 1500. Zero loads, 3000 steps.
Scenario three_area_scenario(const ThreeArea& ta, double attack = 1.0);

/// Regulation toward a uniform angle of 0.1 rad with the generators as the
/// control inputs.
ControllerDesign three_area_controller();
Vec three_area_reference(const ThreeArea& ta);

/// Attack modes listed for the 68-bus system (bus numbers one-based as in the
/// standard data; generators G1..G8).
std::vector<PowerAttackMode> ieee68_attack_modes();

/// Ramp-up, ramp-down, negative ramp actuator attack over [0, 5) seconds.
SignalProfile ieee68_attack_profile();

}  // namespace rse
