#include "qdcool/statistics.hpp"

#include <cmath>
#include <stdexcept>

namespace qdcool {

PhononStats observables(const SteadyState& ss) {
    PhononStats stats;
    stats.distribution = ss.populations();

    double norm = 0.0;
    for (double p : stats.distribution) norm += p;
    if (std::abs(norm - 1.0) > 1e-8)
        throw std::invalid_argument("observables: steady state is not normalized");

    double m1 = 0.0, m2 = 0.0;
    for (int n = 0; n < int(stats.distribution.size()); ++n) {
        m1 += double(n) * stats.distribution[n];
        m2 += double(n) * double(n - 1) * stats.distribution[n];
    }
    stats.mean_n = m1;
    if (m1 >= kG2UndefinedThreshold) stats.g2 = m2 / (m1 * m1);
    stats.tail_mass = ss.tail_mass;
    return stats;
}

}  // namespace qdcool
