#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qdcool/model.hpp"
#include "qdcool/oracle.hpp"
#include "qdcool/reduced.hpp"
#include "qdcool/statistics.hpp"
#include "qdcool/sweep.hpp"

namespace py = pybind11;
using namespace qdcool;

namespace {

py::dict row_to_dict(const SweepRow& row) {
    py::dict d;
    d["sweep_value"] = row.sweep_value;
    d["mode"] = mode_name(row.mode);
    d["mean_n"] = row.mean_n;
    if (row.g2)
        d["g2"] = *row.g2;
    else
        d["g2"] = py::none();
    d["n_max_used"] = row.n_max_used;
    d["tail_mass"] = row.tail_mass;
    d["residual"] = row.residual;
    d["warnings"] = row.warnings;
    d["failed"] = row.failed;
    return d;
}

}  // namespace

PYBIND11_MODULE(qdcool, m) {
    m.doc() = "Steady-state phonon statistics for a laser-driven quantum dot in an acoustic cavity";

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](double omega_ph, double delta, double rabi, double g, double gamma,
                         double gamma_c, double kappa, double nbar) {
                 ModelParams p;
                 p.omega_ph = omega_ph;
                 p.delta = delta;
                 p.rabi = rabi;
                 p.g = g;
                 p.gamma = gamma;
                 p.gamma_c = gamma_c;
                 p.kappa = kappa;
                 p.nbar = nbar;
                 p.validate();
                 return p;
             }),
             py::kw_only(), py::arg("omega_ph"), py::arg("delta"), py::arg("rabi"), py::arg("g"),
             py::arg("gamma"), py::arg("gamma_c") = 0.0, py::arg("kappa"), py::arg("nbar") = 0.0)
        .def_readwrite("omega_ph", &ModelParams::omega_ph)
        .def_readwrite("delta", &ModelParams::delta)
        .def_readwrite("rabi", &ModelParams::rabi)
        .def_readwrite("g", &ModelParams::g)
        .def_readwrite("gamma", &ModelParams::gamma)
        .def_readwrite("gamma_c", &ModelParams::gamma_c)
        .def_readwrite("kappa", &ModelParams::kappa)
        .def_readwrite("nbar", &ModelParams::nbar)
        .def("validate", &ModelParams::validate);

    py::class_<DressedParams>(m, "DressedParams")
        .def_readonly("theta", &DressedParams::theta)
        .def_readonly("omega_bar", &DressedParams::omega_bar)
        .def_readonly("delta_bar", &DressedParams::delta_bar)
        .def_readonly("beta", &DressedParams::beta)
        .def_readonly("gamma_plus", &DressedParams::gamma_plus)
        .def_readonly("gamma_minus", &DressedParams::gamma_minus)
        .def_readonly("gamma_0", &DressedParams::gamma_0)
        .def_readonly("effective_detuning", &DressedParams::effective_detuning)
        .def_readonly("secular", &DressedParams::secular)
        .def_readonly("warnings", &DressedParams::warnings);

    py::class_<SteadyState>(m, "SteadyState")
        .def_readonly("residual", &SteadyState::residual)
        .def_readonly("tail_mass", &SteadyState::tail_mass)
        .def_readonly("n_max", &SteadyState::n_max)
        .def_readonly("warnings", &SteadyState::warnings)
        .def("populations", &SteadyState::populations)
        .def("mean_n", &SteadyState::mean_n)
        .def("value", &SteadyState::value, py::arg("family"), py::arg("n"));

    py::class_<PhononStats>(m, "PhononStats")
        .def_readonly("mean_n", &PhononStats::mean_n)
        .def_property_readonly("g2",
                               [](const PhononStats& s) -> py::object {
                                   if (s.g2) return py::float_(*s.g2);
                                   return py::none();
                               })
        .def_readonly("tail_mass", &PhononStats::tail_mass)
        .def_readonly("distribution", &PhononStats::distribution);

    m.def("thermal_occupation", &thermal_occupation, py::arg("omega_ph"), py::arg("temperature"),
          py::arg("hbar_over_kB"));
    m.def("dress", &dress, py::arg("params"), py::arg("secular"));
    m.def(
        "solve_steady",
        [](const DressedParams& dp, const ModelParams& p, int n_max) {
            return solve_steady(assemble(dp, p, n_max));
        },
        py::arg("dressed"), py::arg("params"), py::arg("n_max"));
    m.def("solve_adaptive", &solve_adaptive, py::arg("dressed"), py::arg("params"),
          py::arg("tail_tol") = 1e-10, py::arg("n_start") = 8, py::arg("n_cap") = 4096);
    m.def("observables", &observables, py::arg("steady_state"));

    m.def(
        "oracle_steady",
        [](const ModelParams& p, const std::string& which, int n_max) {
            if (which != "labframe" && which != "dressed" && which != "dressed_secular")
                throw std::invalid_argument("oracle_steady: which must be dressed, dressed_secular or labframe");
            const auto liouv = which == "labframe"
                                   ? oracle::build_labframe_rotating_liouvillian(p, n_max)
                                   : oracle::build_dressed_liouvillian(dress(p, which == "dressed_secular"), p, n_max);
            const auto ns = oracle::steady_state_null(liouv);
            py::dict d;
            d["mean_n"] = oracle::mean_phonon(ns.rho);
            d["g2"] = oracle::g2_phonon(ns.rho);
            d["residual"] = ns.residual;
            d["gap"] = ns.gap;
            d["populations"] = oracle::phonon_populations(ns.rho);
            return d;
        },
        py::arg("params"), py::arg("which") = "dressed", py::arg("n_max") = 20,
        "Brute-force steady state; `which` is 'dressed', 'dressed_secular' or 'labframe'");

    py::class_<RunConfig>(m, "RunConfig")
        .def_static("from_file", &RunConfig::from_file, py::arg("path"))
        .def_readwrite("sweep_axis", &RunConfig::sweep_axis)
        .def_readwrite("sweep_lo", &RunConfig::sweep_lo)
        .def_readwrite("sweep_hi", &RunConfig::sweep_hi)
        .def_readwrite("sweep_points", &RunConfig::sweep_points)
        .def_readwrite("params", &RunConfig::params)
        .def_readwrite("tail_tol", &RunConfig::tail_tol)
        .def_readwrite("n_start", &RunConfig::n_start)
        .def_readwrite("n_cap", &RunConfig::n_cap)
        .def_readwrite("seed", &RunConfig::seed);

    m.def(
        "run_sweep",
        [](const RunConfig& cfg, int threads) {
            py::list rows;
            for (const SweepRow& row : run(cfg, threads).rows) rows.append(row_to_dict(row));
            return rows;
        },
        py::arg("config"), py::arg("threads") = 1);

    m.def(
        "selftest",
        [](std::uint64_t seed) {
            std::ostringstream out;
            const bool ok = selftest(seed, out);
            return py::make_tuple(ok, out.str());
        },
        py::arg("seed") = 20240917u);
}
