// statistics.hpp — Phonon-field observables from a solved steady state

#pragma once

#include <optional>
#include <vector>

#include "qdcool/reduced.hpp"

namespace qdcool {

// Below this mean occupation g2 is reported as undefined rather than divided
// into meaninglessness.
inline constexpr double kG2UndefinedThreshold = 1e-12;

struct PhononStats {
    double mean_n = 0.0;
    std::optional<double> g2;  // empty when mean_n < kG2UndefinedThreshold
    double tail_mass = 0.0;
    std::vector<double> distribution;  // P_n(1), the source of both moments
};

// <n> = sum n P_n and g2 = sum n(n-1) P_n / <n>^2, both finite sums over the
// same distribution. Throws std::invalid_argument if the state is not
// normalized to 1e-8.
PhononStats observables(const SteadyState& ss);

}  // namespace qdcool
