#pragma once

#include "rse/linalg.hpp"

#include <cstdint>
#include <random>

namespace rse {

/// Seeded Gaussian source. All randomness in the library flows through this.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return dist_(engine_); }

    Vec normal_vector(Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = dist_(engine_);
        return v;
    }

    /// Draw from N(0, F F^T) given a factor F.
    Vec correlated(const Mat& factor) { return factor * normal_vector(factor.cols()); }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace rse
