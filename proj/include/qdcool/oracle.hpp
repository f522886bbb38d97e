// oracle.hpp — Brute-force Liouvillian reference solvers
//
// Builds the full superoperator on the truncated tensor basis {|a> x |n>} and
// solves it directly, both for the dressed master equation (to cross-check
// the reduced solver) and for the undressed lab-frame model in the frame
// rotating at the laser frequency (to quantify the dressed and secular
// approximations). Desk-scale by design: the dense path refuses n_max > 64.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "qdcool/model.hpp"

namespace qdcool::oracle {

using SparseCd = Eigen::SparseMatrix<std::complex<double>>;

// Superoperator for d(rho)/dt. Basis index convention: the two-level index is
// minor, s = 2*n + a; in the dressed basis a = 0 is |+> and a = 1 is |->, in
// the lab frame a = 0 is |g> and a = 1 is |e>. vec(rho) stacks columns.
struct DenseLiouvillian {
    int n_max = 0;
    int hilbert_dim = 0;  // 2 * (n_max + 1)
    SparseCd matrix;      // hilbert_dim^2 square
    bool dressed_basis = true;
};

inline constexpr int kDenseOracleCap = 64;

// Hamiltonian commutator plus the five dissipators of the dressed master
// equation, with the same reflecting Fock truncation as the reduced solver.
DenseLiouvillian build_dressed_liouvillian(const DressedParams& dressed,
                                           const ModelParams& params, int n_max);

// The undressed model in the frame rotating at the laser frequency:
// delta*Sz + omega_ph*b'b + rabi*(S+ + S-) + g*S+S-*(b' + b) with the bare
// dissipators. The phonon operators are frame-invariant here (only the QD is
// driven), so <n> and g2 compare directly with the dressed results.
DenseLiouvillian build_labframe_rotating_liouvillian(const ModelParams& params, int n_max);

// d(rho)/dt for a given density matrix.
Eigen::MatrixXcd apply(const DenseLiouvillian& liouv, const Eigen::MatrixXcd& rho);

struct NullSpaceResult {
    Eigen::MatrixXcd rho;        // unit-trace Hermitian steady state
    double residual = 0.0;       // max |L(rho)| entry
    double gap = 0.0;            // smallest singular value of the trace-constrained operator
    double min_eigenvalue = 0.0; // most negative eigenvalue of rho (PSD check)
};

// Null space by direct sparse solve with one row traded for the trace
// constraint. `gap` certifies the constrained system is far from a second
// steady state; a gap below 1e-10 (relative to the matrix scale) throws.
NullSpaceResult steady_state_null(const DenseLiouvillian& liouv);

struct PropagationResult {
    Eigen::MatrixXcd rho;
    double trace_drift = 0.0;
    long steps = 0;
    std::vector<std::pair<double, double>> mean_n_samples;  // (t, <n>)
};

// Fixed-step classical RK4 on vec(rho). Requires dt <= 0.1 / max rate (taken
// from the largest diagonal of the superoperator); aborts with step-size
// guidance if the trace drifts by more than 1e-6.
PropagationResult propagate(const DenseLiouvillian& liouv, const Eigen::MatrixXcd& rho0,
                            double t_final, double dt);

double mean_phonon(const Eigen::MatrixXcd& rho);
double g2_phonon(const Eigen::MatrixXcd& rho);
std::vector<double> phonon_populations(const Eigen::MatrixXcd& rho);

// The six projected variables of rho in the reduced solver's real layout
// (families 3 and 5 stored as imaginary parts). Dressed-basis rho only.
Eigen::VectorXd project_six_variables(const Eigen::MatrixXcd& rho);

// Seeded random unit-trace Hermitian state supported on the sector the six
// variables capture: Fock-diagonal populations plus the (n-1, n) off-diagonal
// of rho_+-. Used by the closure self-checks.
Eigen::MatrixXcd random_sector_state(int n_max, std::uint64_t seed);

}  // namespace qdcool::oracle
