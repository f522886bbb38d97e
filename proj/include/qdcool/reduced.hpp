// reduced.hpp — Closed linear system for the Fock-projected dressed master equation
//
// The master equation in the dressed basis closes on six operator-valued
// variables built from the blocks rho_ij = <i|rho|j>, i,j in {+,-}:
//
//   rho1 = rho_++ + rho_--        rho2 = rho_++ - rho_--
//   rho3 = b'rho_+- - rho_-+ b    rho4 = b'rho_+- + rho_-+ b
//   rho5 = rho_+- b' - b rho_-+   rho6 = rho_+- b' + b rho_-+
//
// Projecting onto the Fock diagonal, P_n(i) = <n|rho_i|n>, gives a real,
// block-tridiagonal linear system in n. Families 3 and 5 are anti-Hermitian
// combinations, so the stored value is the imaginary part (P = i * stored);
// families 1, 2, 4, 6 are stored directly. Operators are truncated at n_max
// with a reflecting top level (the b'|n_max> = 0 convention), matching the
// brute-force Liouvillian built on the same truncated space element for
// element.

#pragma once

#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "qdcool/model.hpp"

namespace qdcool {

// Flat indexing of the projected variables, n-major so the matrix is
// block-tridiagonal with 6x6 blocks: index(i, n) = 6*n + (i - 1).
struct ReducedLayout {
    int n_max = 0;
    int dim() const { return 6 * (n_max + 1); }
    int index(int family, int n) const { return 6 * n + (family - 1); }
};

struct ReducedGenerator {
    ReducedLayout layout;
    Eigen::SparseMatrix<double> matrix;  // d/dt of the stacked variables
    int n_max = 0;
    DressedParams dressed;  // the parameters this generator was assembled from
    ModelParams params;
    int dim() const { return layout.dim(); }
};

struct SteadyState {
    Eigen::VectorXd p;  // stacked variables in layout order
    double residual = 0.0;   // max-norm of generator * p
    double tail_mass = 0.0;  // P_{n_max}(1)
    DressedParams dressed;
    int n_max = 0;
    std::vector<std::string> warnings;

    double value(int family, int n) const { return p[6 * n + (family - 1)]; }
    // The phonon number distribution P_n(1).
    std::vector<double> populations() const;
    double mean_n() const;
};

// Assembles the generator of the projected equations of motion. The structure
// is checked on exit (trace conservation of the population rows to 1e-12 and
// nearest-neighbour Fock bandwidth); the full closure check against the
// Liouvillian oracle lives in the test suite. Throws for n_max < 2 or when
// `dressed` was not derived from `params`.
ReducedGenerator assemble(const DressedParams& dressed, const ModelParams& params, int n_max);

// Steady state by direct sparse LU after replacing the population row at Fock
// index `constraint_row_n` with the normalization sum_n P_n(1) = 1. Throws
// when the factorization fails or the solution is inconsistent (generator
// singular beyond rank 1), with a condition estimate in the message.
// tail_warn_threshold controls the truncation warning only.
SteadyState solve_steady(const ReducedGenerator& gen, int constraint_row_n = 0,
                         double tail_warn_threshold = 1e-6);

// Doubles n_max from n_start until the tail mass is below tail_tol and <n>
// has stabilized: |<n>(n) - <n>(n/2)| < tail_tol * (1 + <n>). Throws when
// n_cap is exceeded without convergence (heating/divergent regime).
SteadyState solve_adaptive(const DressedParams& dressed, const ModelParams& params,
                           double tail_tol, int n_start, int n_cap = 4096);

}  // namespace qdcool
