// model.hpp — Physical parameters and the dressed-state transformation

#pragma once

#include <string>
#include <vector>

namespace qdcool {

// Raw inputs for the laser-driven quantum dot coupled to one phonon cavity
// mode. All frequencies and rates are dimensionless, normalized to a single
// reference scale chosen by the user (recorded as `unit_scale` in run
// configurations; it never enters the math).
struct ModelParams {
    double omega_ph = 2.0;  // phonon cavity frequency
    double delta = 0.0;     // laser-QD detuning, omega_qd - omega_L
    double rabi = 1.0;      // Rabi frequency of the drive
    double g = 0.1;         // QD-phonon coupling
    double gamma = 0.05;    // QD spontaneous decay
    double gamma_c = 0.0;   // QD dephasing
    double kappa = 0.5;     // cavity damping
    double nbar = 0.0;      // bath mean phonon number

    // Throws std::invalid_argument when a value is out of range or non-finite.
    // rabi = 0 is accepted here (the undressed lab-frame solver allows it);
    // dress() rejects the degenerate rabi = 0, delta = 0 combination.
    void validate() const;
};

// Derived quantities of the dressed-state picture. delta_bar and beta are the
// second-order level shift and dispersive coupling produced by the fast
// oscillating interaction terms; both are held at zero when `secular` is set.
struct DressedParams {
    double theta = 0.0;        // mixing angle, in [0, pi/2]
    double omega_bar = 0.0;    // generalized Rabi frequency sqrt(rabi^2 + (delta/2)^2)
    double delta_bar = 0.0;    // fast-term level shift
    double beta = 0.0;         // fast-term dispersive coupling, >= 0
    double gamma_plus = 0.0;   // dressed decay |+> -> |->
    double gamma_minus = 0.0;  // dressed decay |-> -> |+>
    double gamma_0 = 0.0;      // dressed dephasing
    double effective_detuning = 0.0;  // omega_ph - 2*omega_bar (rotating-frame cavity detuning)
    bool secular = true;

    // Validity notes (never errors): populated when the parameters strain the
    // regime the dressed equation assumes. Messages contain no commas so they
    // embed directly in CSV output.
    std::vector<std::string> warnings;
};

// Bose-Einstein occupation 1/(exp(hbar*omega_ph/(kB*T)) - 1), with the T = 0
// limit returning 0. hbar_over_kB bridges the chosen frequency unit to kelvin
// so the library itself stays unit-agnostic.
double thermal_occupation(double omega_ph, double temperature, double hbar_over_kB);

// Dressed-state transformation. Computes the mixing angle (continuous through
// resonance, theta in (pi/4, pi/2) for delta < 0), the dressed decay rates and
// the fast-term corrections. Pure: identical inputs give identical outputs.
// Throws std::invalid_argument for invalid params or rabi = 0 with delta = 0.
DressedParams dress(const ModelParams& params, bool secular);

}  // namespace qdcool
