#pragma once

#include "rse/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rse {

/// Base matrices of one physical operating condition (topology, breaker state).
struct OperationMode {
    std::string name;
    Mat A, B, C, D;
};

/// Everything the defender knows about the plant before choosing attack supports.
///
/// Vulnerable signals are numbered in one list: actuators 0..t_a-1 first, then
/// sensors t_a..t_a+t_s-1. Labels print them as a1.. and s1.. (one-based).
struct PlantTopology {
    int n = 0;
    int m = 0;
    int l = 0;
    std::vector<OperationMode> operation_modes;
    Mat actuator_matrix;  // n x t_a
    Mat sensor_matrix;    // l x t_s
    Mat Q;
    Mat R;

    int t_m() const { return static_cast<int>(operation_modes.size()); }
    int t_a() const { return static_cast<int>(actuator_matrix.cols()); }
    int t_s() const { return static_cast<int>(sensor_matrix.cols()); }
    int signal_count() const { return t_a() + t_s(); }

    /// Throws DimensionError / ConfigError naming the offending matrix.
    void validate() const;
};

struct AttackSupport {
    int operation_mode = 0;  // zero-based
    Mat I_G;                 // t_a x p, 0/1
    Mat I_H;                 // t_s x p, 0/1

    int p() const { return static_cast<int>(I_G.cols()); }

    /// One attack channel per listed signal (unified numbering, any order;
    /// stored sorted).
    static AttackSupport from_signals(const PlantTopology& topo, int operation_mode,
                                      std::vector<int> signals);

    /// For each column, the unified signals it drives (two for a mixed channel).
    std::vector<std::vector<int>> channel_signals() const;

    /// Sorted unique signals touched by any channel.
    std::vector<int> signals() const;

    void validate(const PlantTopology& topo) const;
};

struct ModeModel {
    std::string label;
    int operation_mode = 0;
    std::vector<int> signals;                     // sorted unified ids
    std::vector<std::vector<int>> channel_signals;  // per column of G/H
    Mat A, B, G, C, D, H, Q, R;

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(G.cols()); }
    int l() const { return static_cast<int>(C.rows()); }

    void validate() const;
};

using ModeSet = std::vector<ModeModel>;

/// Throws unless the set is nonempty and every member shares n, m and l.
void validate_mode_set(const ModeSet& modes);

/// Builds the label "name:a1,s2" (or "name:-" for the attack-free support).
std::string support_label(const PlantTopology& topo, int operation_mode,
                          const std::vector<int>& signals);

ModeModel build_mode(const PlantTopology& topo, const AttackSupport& support);

/// Optional caps on how many actuators / sensors an attacker can reach at once.
struct EnumerationLimits {
    std::optional<int> max_actuator_attacks;  // n_a
    std::optional<int> max_sensor_attacks;    // n_s
};

/// Ordered by (operation mode, sorted support). Throws ConfigError when p > l.
/// Non-fatal diagnostics are appended to `warnings` when given.
ModeSet enumerate_modes(const PlantTopology& topo, int p, const EnumerationLimits& limits = {},
                        std::vector<std::string>* warnings = nullptr);

/// Closed-form size of the set enumerate_modes would return.
std::uint64_t model_count(int t_m, int t_a, int t_s, int p, const EnumerationLimits& limits = {});

std::uint64_t binomial(int n, int k);

/// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<int>> combinations(int n, int k);

}  // namespace rse
