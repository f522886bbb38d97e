#include "qdcool/reduced.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qdcool {

namespace {

using Triplet = Eigen::Triplet<double>;

// Upper bound on |entries| used to scale tolerances.
double matrix_scale(const Eigen::SparseMatrix<double>& m) {
    double s = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            s = std::max(s, std::abs(it.value()));
    return s;
}

// Cheap estimate of ||A^-1||_1 from a few solves; used only for error reports.
double inverse_norm_estimate(const Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu, int dim) {
    std::mt19937_64 rng(0x5eedu);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double best = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        Eigen::VectorXd b(dim);
        for (int i = 0; i < dim; ++i) b[i] = u(rng);
        b /= b.lpNorm<1>();
        Eigen::VectorXd x = lu.solve(b);
        if (x.allFinite()) best = std::max(best, x.lpNorm<1>());
    }
    return best;
}

void check_structure(const ReducedGenerator& gen) {
    const auto& m = gen.matrix;
    const double tol = 1e-12 * std::max(1.0, matrix_scale(m));

    // Trace conservation: the population rows (family 1) must sum to zero in
    // every column.
    Eigen::VectorXd colsum = Eigen::VectorXd::Zero(gen.dim());
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            if (it.row() % 6 == 0) colsum[it.col()] += it.value();
    if (colsum.lpNorm<Eigen::Infinity>() > tol)
        throw std::logic_error("assemble: generator does not conserve trace; derivation self-check failed");

    // Nearest-neighbour Fock coupling only.
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            if (std::abs(int(it.row()) / 6 - int(it.col()) / 6) > 1)
                throw std::logic_error("assemble: entry couples Fock indices further than +-1");
}

}  // namespace

std::vector<double> SteadyState::populations() const {
    std::vector<double> out(n_max + 1);
    for (int n = 0; n <= n_max; ++n) out[n] = value(1, n);
    return out;
}

double SteadyState::mean_n() const {
    double m = 0.0;
    for (int n = 1; n <= n_max; ++n) m += n * value(1, n);
    return m;
}

ReducedGenerator assemble(const DressedParams& dressed, const ModelParams& params, int n_max) {
    params.validate();
    if (n_max < 2) throw std::invalid_argument("assemble: n_max must be >= 2");
    const double omega_bar_check = std::hypot(params.rabi, 0.5 * params.delta);
    if (std::abs(dressed.omega_bar - omega_bar_check) > 1e-9 * (1.0 + omega_bar_check))
        throw std::invalid_argument("assemble: dressed parameters inconsistent with model parameters");

    const double eta = 0.5 * params.g * std::sin(2.0 * dressed.theta);
    const double kup = params.kappa * params.nbar;          // thermal pumping
    const double kdn = params.kappa * (1.0 + params.nbar);  // damped emission
    const double gp = dressed.gamma_plus;
    const double gm = dressed.gamma_minus;
    const double big_gamma = gp + gm + 4.0 * dressed.gamma_0;  // coherence decay

    ReducedGenerator gen;
    gen.n_max = n_max;
    gen.layout = ReducedLayout{n_max};
    gen.dressed = dressed;
    gen.params = params;

    std::vector<Triplet> trip;
    trip.reserve(22 * (n_max + 1));
    const auto& lay = gen.layout;
    auto add = [&](int fi, int ni, int fj, int nj, double v) {
        if (v != 0.0) trip.emplace_back(lay.index(fi, ni), lay.index(fj, nj), v);
    };

    // Population families 1 (total) and 2 (inversion-weighted).
    for (int n = 0; n <= n_max; ++n) {
        const double up_out = (n < n_max) ? 2.0 * kup * (n + 1) : 0.0;  // reflecting top level
        const double dn_out = 2.0 * kdn * n;
        add(1, n, 1, n, -(up_out + dn_out));
        add(2, n, 2, n, -(up_out + dn_out));
        if (n < n_max) {
            add(1, n, 1, n + 1, 2.0 * kdn * (n + 1));
            add(2, n, 2, n + 1, 2.0 * kdn * (n + 1));
        }
        if (n > 0) {
            add(1, n, 1, n - 1, 2.0 * kup * n);
            add(2, n, 2, n - 1, 2.0 * kup * n);
        }
        // Dressed-state relaxation cancels in the trace, so it acts on family 2 only.
        add(2, n, 1, n, -2.0 * (gp - gm));
        add(2, n, 2, n, -2.0 * (gp + gm));
        // Interaction flux through the n-1/n and n/n+1 interfaces, written via
        // family 3 so the population rows stay trace-conserving column by column.
        if (n < n_max) {
            add(1, n, 3, n + 1, eta);
            add(2, n, 3, n + 1, eta);
        }
        if (n > 0) {
            add(1, n, 3, n, -eta);
            add(2, n, 3, n, eta);
        }
    }

    // Coherence families. m indexes the (m-1, m) Fock off-diagonal of rho_+-;
    // its equation is carried twice, by the (3,4) rows at n = m and the (5,6)
    // rows at n = m-1. Cross couplings use the same columns in both copies so
    // the consistency defects relax autonomously.
    for (int m = 1; m <= n_max; ++m) {
        const double phi = dressed.effective_detuning + 2.0 * dressed.delta_bar -
                           dressed.beta * (2.0 * m - 1.0);
        // Truncated b b' diagonal: (bb')_j = j+1 below the top level, 0 at it.
        const double bbdag_sum = (m < n_max) ? (2.0 * m + 1.0) : double(m);
        const double decay = kdn * (2.0 * m - 1.0) + kup * bbdag_sum + big_gamma;
        const double pump = eta * m;
        const double up_gain = (m < n_max) ? 2.0 * kdn * m : 0.0;
        const double dn_gain = (m >= 2) ? 2.0 * kup * m : 0.0;

        add(3, m, 3, m, -decay);
        add(3, m, 4, m, phi);
        add(4, m, 4, m, -decay);
        add(4, m, 3, m, -phi);
        add(3, m, 1, m, pump);
        add(3, m, 2, m, -pump);
        add(3, m, 1, m - 1, -pump);
        add(3, m, 2, m - 1, -pump);
        if (m < n_max) {
            add(3, m, 5, m, up_gain);
            add(4, m, 6, m, up_gain);
        }
        if (m >= 2) {
            add(3, m, 3, m - 1, dn_gain);
            add(4, m, 4, m - 1, dn_gain);
        }

        add(5, m - 1, 5, m - 1, -decay);
        add(5, m - 1, 6, m - 1, phi);
        add(6, m - 1, 6, m - 1, -decay);
        add(6, m - 1, 5, m - 1, -phi);
        add(5, m - 1, 1, m, pump);
        add(5, m - 1, 2, m, -pump);
        add(5, m - 1, 1, m - 1, -pump);
        add(5, m - 1, 2, m - 1, -pump);
        if (m < n_max) {
            add(5, m - 1, 5, m, up_gain);
            add(6, m - 1, 6, m, up_gain);
        }
        if (m >= 2) {
            add(5, m - 1, 3, m - 1, dn_gain);
            add(6, m - 1, 4, m - 1, dn_gain);
        }
    }

    // P_0(3), P_0(4), P_{n_max}(5) and P_{n_max}(6) are identically zero on
    // realizable states. A decaying diagonal keeps the kernel one-dimensional
    // without changing the generator's action on those states.
    const double reg = big_gamma + params.kappa * (1.0 + 2.0 * params.nbar);
    add(3, 0, 3, 0, -reg);
    add(4, 0, 4, 0, -reg);
    add(5, n_max, 5, n_max, -reg);
    add(6, n_max, 6, n_max, -reg);

    gen.matrix.resize(gen.dim(), gen.dim());
    gen.matrix.setFromTriplets(trip.begin(), trip.end());
    check_structure(gen);
    return gen;
}

SteadyState solve_steady(const ReducedGenerator& gen, int constraint_row_n,
                         double tail_warn_threshold) {
    if (constraint_row_n < 0 || constraint_row_n > gen.n_max)
        throw std::invalid_argument("solve_steady: constraint_row_n out of range");
    const int dim = gen.dim();
    const auto& lay = gen.layout;
    const int replaced = lay.index(1, constraint_row_n);

    std::vector<Triplet> trip;
    trip.reserve(gen.matrix.nonZeros() + gen.n_max + 1);
    for (int k = 0; k < gen.matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(gen.matrix, k); it; ++it)
            if (it.row() != replaced) trip.emplace_back(it.row(), it.col(), it.value());
    for (int n = 0; n <= gen.n_max; ++n) trip.emplace_back(replaced, lay.index(1, n), 1.0);

    Eigen::SparseMatrix<double> constrained(dim, dim);
    constrained.setFromTriplets(trip.begin(), trip.end());
    constrained.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(constrained);
    lu.factorize(constrained);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("solve_steady: factorization failed; generator singular beyond rank 1");

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    rhs[replaced] = 1.0;
    Eigen::VectorXd x = lu.solve(rhs);

    const double scale = std::max(1.0, matrix_scale(gen.matrix));
    const double residual = (gen.matrix * x).lpNorm<Eigen::Infinity>();
    if (!x.allFinite() || residual > 1e-6 * scale) {
        std::ostringstream msg;
        msg << "solve_steady: generator singular beyond rank 1 (residual " << residual
            << ", ||A^-1||_1 estimate " << inverse_norm_estimate(lu, dim) << ")";
        throw std::runtime_error(msg.str());
    }

    SteadyState ss;
    ss.p = std::move(x);
    ss.n_max = gen.n_max;
    ss.dressed = gen.dressed;
    ss.residual = residual;
    ss.tail_mass = ss.value(1, gen.n_max);
    if (ss.tail_mass > tail_warn_threshold)
        ss.warnings.push_back("truncation: tail mass above threshold; increase n_max");
    return ss;
}

SteadyState solve_adaptive(const DressedParams& dressed, const ModelParams& params,
                           double tail_tol, int n_start, int n_cap) {
    if (!(tail_tol > 0.0 && tail_tol < 1.0))
        throw std::invalid_argument("solve_adaptive: tail_tol must be in (0, 1)");
    if (n_start < 2) throw std::invalid_argument("solve_adaptive: n_start must be >= 2");
    if (n_cap < n_start) throw std::invalid_argument("solve_adaptive: n_cap must be >= n_start");

    double prev_mean = std::numeric_limits<double>::quiet_NaN();
    for (int n = n_start; n <= n_cap; n *= 2) {
        SteadyState ss = solve_steady(assemble(dressed, params, n));
        const double mean = ss.mean_n();
        if (std::isfinite(prev_mean) && ss.tail_mass < tail_tol &&
            std::abs(mean - prev_mean) < tail_tol * (1.0 + mean)) {
            ss.warnings.clear();
            return ss;
        }
        prev_mean = mean;
    }
    std::ostringstream msg;
    msg << "solve_adaptive: no convergence up to n_max = " << n_cap
        << "; the phonon field appears to be heating without bound in this regime";
    throw std::runtime_error(msg.str());
}

}  // namespace qdcool
