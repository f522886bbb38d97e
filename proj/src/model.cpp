#include "qdcool/model.hpp"

#include <cmath>
#include <stdexcept>

namespace qdcool {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void ModelParams::validate() const {
    require(std::isfinite(omega_ph) && omega_ph > 0.0, "ModelParams: omega_ph must be > 0");
    require(std::isfinite(delta), "ModelParams: delta must be finite");
    require(std::isfinite(rabi) && rabi >= 0.0, "ModelParams: rabi must be >= 0");
    require(std::isfinite(g) && g >= 0.0, "ModelParams: g must be >= 0");
    require(std::isfinite(gamma) && gamma >= 0.0, "ModelParams: gamma must be >= 0");
    require(std::isfinite(gamma_c) && gamma_c >= 0.0, "ModelParams: gamma_c must be >= 0");
    require(std::isfinite(kappa) && kappa > 0.0, "ModelParams: kappa must be > 0");
    require(std::isfinite(nbar) && nbar >= 0.0, "ModelParams: nbar must be >= 0");
}

double thermal_occupation(double omega_ph, double temperature, double hbar_over_kB) {
    if (!(omega_ph > 0.0)) throw std::invalid_argument("thermal_occupation: omega_ph must be > 0");
    if (!(temperature >= 0.0)) throw std::invalid_argument("thermal_occupation: temperature must be >= 0");
    if (!(hbar_over_kB > 0.0)) throw std::invalid_argument("thermal_occupation: hbar_over_kB must be > 0");
    if (temperature == 0.0) return 0.0;
    const double x = hbar_over_kB * omega_ph / temperature;
    // expm1 keeps the high-temperature (small x) limit accurate
    return 1.0 / std::expm1(x);
}

DressedParams dress(const ModelParams& params, bool secular) {
    params.validate();
    if (params.rabi == 0.0 && params.delta == 0.0)
        throw std::invalid_argument("dress: mixing angle undefined for rabi = 0 and delta = 0");

    DressedParams d;
    d.secular = secular;
    // atan2 continues the arctan(2*rabi/delta)/2 branch through delta = 0,
    // so |-> -> |g> for large positive detuning.
    d.theta = 0.5 * std::atan2(2.0 * params.rabi, params.delta);
    d.omega_bar = std::hypot(params.rabi, 0.5 * params.delta);
    d.effective_detuning = params.omega_ph - 2.0 * d.omega_bar;

    const double c = std::cos(d.theta);
    const double s = std::sin(d.theta);
    const double sin2t = std::sin(2.0 * d.theta);
    const double cos2t = std::cos(2.0 * d.theta);

    d.gamma_plus = params.gamma * c * c * c * c + 0.25 * params.gamma_c * sin2t * sin2t;
    d.gamma_minus = params.gamma * s * s * s * s + 0.25 * params.gamma_c * sin2t * sin2t;
    d.gamma_0 = 0.25 * (params.gamma * sin2t * sin2t + params.gamma_c * cos2t * cos2t);

    if (secular) {
        d.delta_bar = 0.0;
        d.beta = 0.0;
    } else {
        const double g2 = params.g * params.g;
        const double denom = 4.0 * (params.omega_ph + 2.0 * d.omega_bar);
        d.delta_bar = 0.5 * g2 * (cos2t / params.omega_ph - sin2t * sin2t / denom);
        d.beta = g2 * sin2t * sin2t / denom;
    }

    // Regime checks. The thresholds (10x for 2*omega_bar vs gamma, 2x for
    // omega_bar vs g) are deliberately conservative; see README.
    if (2.0 * d.omega_bar <= 10.0 * params.gamma)
        d.warnings.push_back("secular-validity: 2*omega_bar <= 10*gamma");
    if (params.g >= 0.5 * d.omega_bar)
        d.warnings.push_back("perturbative-regime: g >= omega_bar/2");

    return d;
}

}  // namespace qdcool
