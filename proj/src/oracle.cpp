#include "qdcool/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qdcool::oracle {

namespace {

using Cd = std::complex<double>;
constexpr Cd kI{0.0, 1.0};

SparseCd spkron(const SparseCd& a, const SparseCd& b) {
    SparseCd out(a.rows() * b.rows(), a.cols() * b.cols());
    out = Eigen::kroneckerProduct(a, b);
    return out;
}

SparseCd identity(int n) {
    SparseCd id(n, n);
    id.setIdentity();
    return id;
}

// Truncated annihilation operator on the phonon space.
SparseCd phonon_lowering(int n_max) {
    SparseCd b(n_max + 1, n_max + 1);
    std::vector<Eigen::Triplet<Cd>> t;
    for (int n = 0; n < n_max; ++n) t.emplace_back(n, n + 1, std::sqrt(double(n + 1)));
    b.setFromTriplets(t.begin(), t.end());
    return b;
}

SparseCd two_level(Cd v00, Cd v01, Cd v10, Cd v11) {
    SparseCd m(2, 2);
    std::vector<Eigen::Triplet<Cd>> t;
    if (v00 != Cd{}) t.emplace_back(0, 0, v00);
    if (v01 != Cd{}) t.emplace_back(0, 1, v01);
    if (v10 != Cd{}) t.emplace_back(1, 0, v10);
    if (v11 != Cd{}) t.emplace_back(1, 1, v11);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

// kappa * (2 O rho O' - O'O rho - rho O'O) as a superoperator on vec(rho).
SparseCd dissipator(const SparseCd& op, double rate, const SparseCd& id) {
    SparseCd opd = SparseCd(op.adjoint());
    SparseCd opdop = SparseCd(opd * op);
    SparseCd out = SparseCd(2.0 * rate * spkron(SparseCd(op.conjugate()), op));
    out -= SparseCd(rate * spkron(id, opdop));
    out -= SparseCd(rate * spkron(SparseCd(opdop.transpose()), id));
    return out;
}

SparseCd commutator_superop(const SparseCd& h, const SparseCd& id) {
    SparseCd out = SparseCd(-kI * spkron(id, h));
    out += SparseCd(kI * spkron(SparseCd(h.transpose()), id));
    return out;
}

void check_n_max(int n_max) {
    if (n_max < 2) throw std::invalid_argument("oracle: n_max must be >= 2");
    if (n_max > kDenseOracleCap)
        throw std::invalid_argument("oracle: n_max exceeds the dense-path cap of 64");
}

double superop_scale(const SparseCd& m) {
    double s = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseCd::InnerIterator it(m, k); it; ++it) s = std::max(s, std::abs(it.value()));
    return s;
}

}  // namespace

DenseLiouvillian build_dressed_liouvillian(const DressedParams& dressed,
                                           const ModelParams& params, int n_max) {
    params.validate();
    check_n_max(n_max);

    const SparseCd b_ph = phonon_lowering(n_max);
    const SparseCd bd_ph = SparseCd(b_ph.adjoint());
    const SparseCd n_ph = SparseCd(bd_ph * b_ph);
    const SparseCd id_ph = identity(n_max + 1);
    const SparseCd id_qd = identity(2);

    // a = 0 -> |+>, a = 1 -> |->
    const SparseCd rz = two_level(1.0, 0.0, 0.0, -1.0);
    const SparseCd rm = two_level(0.0, 0.0, 1.0, 0.0);  // |-><+|
    const SparseCd rp = two_level(0.0, 1.0, 0.0, 0.0);  // |+><-|

    const double eta = 0.5 * params.g * std::sin(2.0 * dressed.theta);

    SparseCd h = SparseCd(dressed.effective_detuning * spkron(n_ph, id_qd));
    h -= SparseCd(dressed.delta_bar * spkron(id_ph, rz));
    h += SparseCd(dressed.beta * spkron(n_ph, rz));
    h -= SparseCd(eta * spkron(bd_ph, rm));
    h -= SparseCd(eta * spkron(b_ph, rp));

    const SparseCd id = identity(2 * (n_max + 1));
    SparseCd liouv = commutator_superop(h, id);
    liouv += dissipator(spkron(b_ph, id_qd), params.kappa * (1.0 + params.nbar), id);
    liouv += dissipator(spkron(bd_ph, id_qd), params.kappa * params.nbar, id);
    liouv += dissipator(spkron(id_ph, rm), dressed.gamma_plus, id);
    liouv += dissipator(spkron(id_ph, rp), dressed.gamma_minus, id);
    liouv += dissipator(spkron(id_ph, rz), dressed.gamma_0, id);

    DenseLiouvillian out;
    out.n_max = n_max;
    out.hilbert_dim = 2 * (n_max + 1);
    out.matrix = std::move(liouv);
    out.matrix.makeCompressed();
    out.dressed_basis = true;
    return out;
}

DenseLiouvillian build_labframe_rotating_liouvillian(const ModelParams& params, int n_max) {
    params.validate();
    check_n_max(n_max);

    const SparseCd b_ph = phonon_lowering(n_max);
    const SparseCd bd_ph = SparseCd(b_ph.adjoint());
    const SparseCd n_ph = SparseCd(bd_ph * b_ph);
    const SparseCd id_ph = identity(n_max + 1);
    const SparseCd id_qd = identity(2);

    // a = 0 -> |g>, a = 1 -> |e>
    const SparseCd sz = two_level(-0.5, 0.0, 0.0, 0.5);
    const SparseCd sm = two_level(0.0, 1.0, 0.0, 0.0);  // |g><e|
    const SparseCd sp = two_level(0.0, 0.0, 1.0, 0.0);
    const SparseCd proj_e = two_level(0.0, 0.0, 0.0, 1.0);  // S+S-

    SparseCd h = SparseCd(params.delta * spkron(id_ph, sz));
    h += SparseCd(params.omega_ph * spkron(n_ph, id_qd));
    h += SparseCd(params.rabi * spkron(id_ph, SparseCd(sp + sm)));
    h += SparseCd(params.g * spkron(SparseCd(b_ph + bd_ph), proj_e));

    const SparseCd id = identity(2 * (n_max + 1));
    SparseCd liouv = commutator_superop(h, id);
    liouv += dissipator(spkron(b_ph, id_qd), params.kappa * (1.0 + params.nbar), id);
    liouv += dissipator(spkron(bd_ph, id_qd), params.kappa * params.nbar, id);
    liouv += dissipator(spkron(id_ph, sm), params.gamma, id);
    liouv += dissipator(spkron(id_ph, sz), params.gamma_c, id);

    DenseLiouvillian out;
    out.n_max = n_max;
    out.hilbert_dim = 2 * (n_max + 1);
    out.matrix = std::move(liouv);
    out.matrix.makeCompressed();
    out.dressed_basis = false;
    return out;
}

Eigen::MatrixXcd apply(const DenseLiouvillian& liouv, const Eigen::MatrixXcd& rho) {
    const int d = liouv.hilbert_dim;
    if (rho.rows() != d || rho.cols() != d)
        throw std::invalid_argument("oracle::apply: dimension mismatch");
    Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho.data(), d * d);
    Eigen::VectorXcd w = liouv.matrix * v;
    return Eigen::Map<Eigen::MatrixXcd>(w.data(), d, d);
}

NullSpaceResult steady_state_null(const DenseLiouvillian& liouv) {
    const int d = liouv.hilbert_dim;
    const int dim2 = d * d;

    // Trade the d(rho_00)/dt row for tr(rho) = 1.
    std::vector<Eigen::Triplet<Cd>> trip;
    trip.reserve(liouv.matrix.nonZeros() + d);
    for (int k = 0; k < liouv.matrix.outerSize(); ++k)
        for (SparseCd::InnerIterator it(liouv.matrix, k); it; ++it)
            if (it.row() != 0) trip.emplace_back(it.row(), it.col(), it.value());
    for (int s = 0; s < d; ++s) trip.emplace_back(0, s * d + s, Cd{1.0, 0.0});
    SparseCd constrained(dim2, dim2);
    constrained.setFromTriplets(trip.begin(), trip.end());
    constrained.makeCompressed();

    Eigen::SparseLU<SparseCd> lu;
    lu.analyzePattern(constrained);
    lu.factorize(constrained);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("steady_state_null: factorization failed; null space degenerate?");

    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dim2);
    rhs[0] = 1.0;
    Eigen::VectorXcd x = lu.solve(rhs);
    if (!x.allFinite()) throw std::runtime_error("steady_state_null: solve produced non-finite values");

    NullSpaceResult out;
    out.rho = Eigen::Map<Eigen::MatrixXcd>(x.data(), d, d);
    out.rho = 0.5 * (out.rho + out.rho.adjoint().eval());
    out.rho /= out.rho.trace().real();

    Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(out.rho.data(), dim2);
    out.residual = (liouv.matrix * v).lpNorm<Eigen::Infinity>();

    // Smallest singular value of the constrained operator by inverse power
    // iteration; a second (traceless) null vector of L would drive it to zero.
    const double scale = std::max(1.0, superop_scale(liouv.matrix));
    Eigen::VectorXcd y = Eigen::VectorXcd::Ones(dim2).normalized();
    double sigma = 0.0;
    for (int it = 0; it < 10; ++it) {
        Eigen::VectorXcd z = lu.solve(y);
        Eigen::VectorXcd w = lu.adjoint().solve(z);
        const double nrm = w.norm();
        if (!(nrm > 0.0) || !w.allFinite()) break;
        sigma = z.norm() / nrm;  // converges to sigma_min of the constrained matrix
        y = w / nrm;
    }
    out.gap = sigma;
    if (out.gap < 1e-10 * scale)
        throw std::runtime_error("steady_state_null: degenerate null space (gap below 1e-10)");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(out.rho, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = es.eigenvalues().minCoeff();
    return out;
}

PropagationResult propagate(const DenseLiouvillian& liouv, const Eigen::MatrixXcd& rho0,
                            double t_final, double dt) {
    const int d = liouv.hilbert_dim;
    if (rho0.rows() != d || rho0.cols() != d)
        throw std::invalid_argument("propagate: rho0 dimension mismatch");
    if (!(t_final > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("propagate: t_final and dt must be > 0");
    if ((rho0 - rho0.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("propagate: rho0 must be Hermitian");
    if (std::abs(rho0.trace().real() - 1.0) > 1e-10)
        throw std::invalid_argument("propagate: rho0 must have unit trace");
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho0, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw std::invalid_argument("propagate: rho0 must be positive semidefinite");
    }

    double max_rate = 0.0;
    for (int s = 0; s < d * d; ++s) max_rate = std::max(max_rate, std::abs(liouv.matrix.coeff(s, s)));
    if (max_rate > 0.0 && dt > 0.1 / max_rate) {
        std::ostringstream msg;
        msg << "propagate: dt = " << dt << " does not resolve the fastest scale; use dt <= "
            << 0.1 / max_rate;
        throw std::invalid_argument(msg.str());
    }

    const long steps = long(std::ceil(t_final / dt));
    const double h = t_final / double(steps);
    const long sample_stride = std::max<long>(1, steps / 256);

    Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), d * d);
    auto trace_of = [d](const Eigen::VectorXcd& u) {
        Cd tr{};
        for (int s = 0; s < d; ++s) tr += u[s * d + s];
        return tr;
    };

    PropagationResult out;
    for (long k = 0; k < steps; ++k) {
        const Eigen::VectorXcd k1 = liouv.matrix * v;
        const Eigen::VectorXcd k2 = liouv.matrix * (v + 0.5 * h * k1);
        const Eigen::VectorXcd k3 = liouv.matrix * (v + 0.5 * h * k2);
        const Eigen::VectorXcd k4 = liouv.matrix * (v + h * k3);
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        const double drift = std::abs(trace_of(v) - Cd{1.0, 0.0});
        if (drift > 1e-6) {
            std::ostringstream msg;
            msg << "propagate: trace drift " << drift << " after step " << k + 1
                << "; halve dt (current " << h << ") and retry";
            throw std::runtime_error(msg.str());
        }
        if ((k + 1) % sample_stride == 0 || k + 1 == steps) {
            Eigen::MatrixXcd rho = Eigen::Map<Eigen::MatrixXcd>(v.data(), d, d);
            out.mean_n_samples.emplace_back((k + 1) * h, mean_phonon(rho));
        }
    }
    out.rho = Eigen::Map<Eigen::MatrixXcd>(v.data(), d, d);
    out.trace_drift = std::abs(trace_of(v) - Cd{1.0, 0.0});
    out.steps = steps;
    return out;
}

double mean_phonon(const Eigen::MatrixXcd& rho) {
    double m = 0.0;
    for (int s = 0; s < rho.rows(); ++s) m += (s / 2) * rho(s, s).real();
    return m;
}

double g2_phonon(const Eigen::MatrixXcd& rho) {
    double m = 0.0, m2 = 0.0;
    for (int s = 0; s < rho.rows(); ++s) {
        const double n = s / 2;
        m += n * rho(s, s).real();
        m2 += n * (n - 1.0) * rho(s, s).real();
    }
    return m2 / (m * m);
}

std::vector<double> phonon_populations(const Eigen::MatrixXcd& rho) {
    std::vector<double> out(rho.rows() / 2, 0.0);
    for (int s = 0; s < rho.rows(); ++s) out[s / 2] += rho(s, s).real();
    return out;
}

Eigen::MatrixXcd random_sector_state(int n_max, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int d = 2 * (n_max + 1);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);

    std::vector<double> p(n_max + 1), q(n_max + 1);
    double norm = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        p[n] = u(rng);
        q[n] = u(rng);
        norm += p[n] + q[n];
    }
    for (int n = 0; n <= n_max; ++n) {
        rho(2 * n, 2 * n) = p[n] / norm;
        rho(2 * n + 1, 2 * n + 1) = q[n] / norm;
    }
    for (int n = 1; n <= n_max; ++n) {
        const double amp = 0.9 * std::sqrt(p[n - 1] * q[n] / (norm * norm)) * u(rng);
        const double phase = 2.0 * M_PI * u(rng);
        const Cd val = amp * std::exp(kI * phase);
        rho(2 * (n - 1), 2 * n + 1) = val;          // <+, n-1| rho |-, n>
        rho(2 * n + 1, 2 * (n - 1)) = std::conj(val);
    }
    return rho;
}

Eigen::VectorXd project_six_variables(const Eigen::MatrixXcd& rho) {
    const int d = int(rho.rows());
    const int n_max = d / 2 - 1;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(6 * (n_max + 1));
    auto pm = [&](int i, int j) { return rho(2 * i, 2 * j + 1); };  // <+,i|rho|-,j>
    for (int n = 0; n <= n_max; ++n) {
        const double p = rho(2 * n, 2 * n).real();
        const double q = rho(2 * n + 1, 2 * n + 1).real();
        w[6 * n + 0] = p + q;
        w[6 * n + 1] = p - q;
        if (n >= 1) {
            const Cd u = pm(n - 1, n);
            w[6 * n + 2] = 2.0 * std::sqrt(double(n)) * u.imag();
            w[6 * n + 3] = 2.0 * std::sqrt(double(n)) * u.real();
        }
        if (n < n_max) {
            const Cd u = pm(n, n + 1);
            w[6 * n + 4] = 2.0 * std::sqrt(double(n + 1)) * u.imag();
            w[6 * n + 5] = 2.0 * std::sqrt(double(n + 1)) * u.real();
        }
    }
    return w;
}

}  // namespace qdcool::oracle
