#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fracmfg/cli.hpp"
#include "fracmfg/errors.hpp"
#include "fracmfg/fpsolver.hpp"
#include "fracmfg/fracops.hpp"
#include "fracmfg/hjbsolver.hpp"
#include "fracmfg/mfg.hpp"
#include "fracmfg/subdiffusion.hpp"

namespace py = pybind11;
using namespace fracmfg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
    if (a.ndim() != 1) throw ParameterError("expected a 1-d array");
    return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) {
    Array a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

Array to_array(const GridField& f) {
    Array a({static_cast<py::ssize_t>(f.n_time()), static_cast<py::ssize_t>(f.n_cells())});
    std::copy(f.data().begin(), f.data().end(), a.mutable_data());
    return a;
}

// rows are time nodes; a scalar broadcasts
GridField to_field(const py::object& o, const TimeGrid& tg, const SpaceGrid& sg) {
    if (py::isinstance<py::float_>(o) || py::isinstance<py::int_>(o)) return GridField(tg, sg, o.cast<double>());
    auto a = o.cast<Array>();
    if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(0)) != tg.n_nodes() ||
        static_cast<std::size_t>(a.shape(1)) != sg.n_cells)
        throw ParameterError("field must have shape (n_steps + 1, n_cells)");
    GridField f(tg, sg);
    std::copy(a.data(), a.data() + a.size(), f.data().begin());
    return f;
}

StencilKind parse_kind(const std::string& s) {
    if (s == "rl_derivative") return StencilKind::rl_derivative;
    if (s == "rl_integral") return StencilKind::rl_integral;
    if (s == "caputo_derivative") return StencilKind::caputo_derivative;
    throw ParameterError("unknown stencil kind '" + s + "'");
}

HamiltonianSpec parse_ham(const std::string& s, double u_max) {
    if (s == "truncated_quadratic") return HamiltonianSpec::truncated_quadratic(u_max);
    if (s == "zero") return HamiltonianSpec::zero();
    throw ParameterError("unknown Hamiltonian '" + s + "'");
}

py::dict trace_dict(const std::vector<TraceRow>& trace) {
    std::vector<double> gap, dual, mass, mn;
    for (const auto& r : trace) {
        gap.push_back(r.gap);
        dual.push_back(r.duality_residual);
        mass.push_back(r.mass_error);
        mn.push_back(r.min_m);
    }
    py::dict d;
    d["gap"] = to_array(gap);
    d["duality_residual"] = to_array(dual);
    d["mass_error"] = to_array(mass);
    d["min_m"] = to_array(mn);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Time-fractional mean field games: operators, subdiffusion, FP/HJB solvers";

    auto base = py::register_exception<Error>(m, "FracMfgError", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    m.def("version", &cli::version);

    m.def("mittag_leffler", py::overload_cast<double, double, double>(&mittag_leffler), py::arg("alpha"),
          py::arg("gamma"), py::arg("z"));

    m.def(
        "fractional_apply",
        [](const Array& f, double order, const std::string& kind, double dt, bool backward,
           const std::string& scheme) {
            auto v = to_vector(f);
            Scheme sc = scheme == "product_rectangle" ? Scheme::product_rectangle : Scheme::grunwald_letnikov;
            if (scheme != "product_rectangle" && scheme != "grunwald_letnikov")
                throw ParameterError("unknown scheme '" + scheme + "'");
            auto s = build_stencil(order, parse_kind(kind), backward ? Direction::backward : Direction::forward,
                                   v.size(), dt, sc);
            return to_array(fracmfg::apply(s, v));
        },
        py::arg("f"), py::arg("order"), py::arg("kind"), py::arg("dt"), py::arg("backward") = false,
        py::arg("scheme") = "grunwald_letnikov",
        "Apply a fractional stencil to samples on a uniform grid starting at t = 0.");

    m.def(
        "simulate",
        [](double beta, double nu, double x0, double T, std::size_t n_steps, std::size_t n_paths,
           std::uint64_t seed, double drift, unsigned threads) {
            SimOptions opt;
            opt.threads = threads;
            auto e = simulate_time_changed_sde(constant_coefficients(drift, std::sqrt(2.0 * nu)), x0, beta,
                                               TimeGrid(T, n_steps), n_paths, seed, opt);
            py::dict d;
            d["t"] = to_array(e.t_grid);
            Array x({static_cast<py::ssize_t>(e.n_paths), static_cast<py::ssize_t>(e.n_time())});
            Array c({static_cast<py::ssize_t>(e.n_paths), static_cast<py::ssize_t>(e.n_time())});
            std::copy(e.x_paths.begin(), e.x_paths.end(), x.mutable_data());
            std::copy(e.e_paths.begin(), e.e_paths.end(), c.mutable_data());
            d["x"] = x;
            d["e"] = c;
            return d;
        },
        py::arg("beta"), py::arg("nu"), py::arg("x0"), py::arg("T"), py::arg("n_steps"), py::arg("n_paths"),
        py::arg("seed"), py::arg("drift") = 0.0, py::arg("threads") = 1,
        "Time-changed Brownian motion with constant drift; returns t, x and the clock e.");

    m.def(
        "wasserstein1",
        [](const Array& a, const Array& b, double dx) { return wasserstein1(to_vector(a), to_vector(b), dx); },
        py::arg("a"), py::arg("b"), py::arg("dx"));

    m.def(
        "gaussian_density",
        [](double x_min, double x_max, std::size_t n_cells, double center, double width) {
            return to_array(gaussian_density(SpaceGrid(x_min, x_max, n_cells), center, width));
        },
        py::arg("x_min"), py::arg("x_max"), py::arg("n_cells"), py::arg("center"), py::arg("width"));

    m.def(
        "solve_fp",
        [](const Array& m0, const py::object& drift, double nu, double beta, double T, std::size_t n_steps,
           double x_min, double x_max) {
            auto v = to_vector(m0);
            TimeGrid tg(T, n_steps);
            SpaceGrid sg(x_min, x_max, v.size());
            return to_array(solve_fp(v, to_field(drift, tg, sg), nu, beta).m);
        },
        py::arg("m0"), py::arg("drift"), py::arg("nu"), py::arg("beta"), py::arg("T"), py::arg("n_steps"),
        py::arg("x_min") = 0.0, py::arg("x_max") = 1.0,
        "Density on the grid, shape (n_steps + 1, n_cells); drift is a scalar or a field of that shape.");

    m.def(
        "solve_hjb",
        [](const Array& g, const py::object& source, double nu, double beta, double T, std::size_t n_steps,
           double x_min, double x_max, const std::string& hamiltonian, double u_max) {
            auto gv = to_vector(g);
            TimeGrid tg(T, n_steps);
            SpaceGrid sg(x_min, x_max, gv.size());
            auto vf = solve_hjb(gv, to_field(source, tg, sg), nu, beta, parse_ham(hamiltonian, u_max));
            py::dict d;
            d["v"] = to_array(vf.v);
            d["feedback"] = to_array(vf.feedback);
            return d;
        },
        py::arg("g"), py::arg("source"), py::arg("nu"), py::arg("beta"), py::arg("T"), py::arg("n_steps"),
        py::arg("x_min") = 0.0, py::arg("x_max") = 1.0, py::arg("hamiltonian") = "truncated_quadratic",
        py::arg("u_max") = 5.0);

    m.def(
        "solve_mfg",
        [](double beta, double nu, double T, std::size_t n_steps, std::size_t n_cells, double kappa,
           double damping, double tolerance, std::size_t max_iters) {
            auto p = default_desk_problem();
            p.beta = beta;
            p.nu = nu;
            p.time = TimeGrid(T, n_steps);
            p.space = SpaceGrid(0.0, 1.0, n_cells);
            p.coupling.kappa = kappa;
            p.damping = damping;
            p.tolerance = tolerance;
            p.max_iters = max_iters;
            p.m0 = gaussian_density(p.space, 0.3, 0.08);
            p.g.resize(n_cells);
            for (std::size_t i = 0; i < n_cells; ++i)
                p.g[i] = 0.2 * std::cos(2.0 * 3.14159265358979323846 * p.space.center(i));
            auto s = solve_mfg(p);
            py::dict d;
            d["v"] = to_array(s.v.v);
            d["m"] = to_array(s.m.m);
            d["converged"] = s.converged;
            d["trace"] = trace_dict(s.trace);
            return d;
        },
        py::arg("beta") = 0.7, py::arg("nu") = 0.05, py::arg("T") = 1.0, py::arg("n_steps") = 100,
        py::arg("n_cells") = 128, py::arg("kappa") = 0.5, py::arg("damping") = 0.5, py::arg("tolerance") = 1e-6,
        py::arg("max_iters") = 60, "Desk problem on [0,1) with g = 0.2 cos(2 pi x) and a Gaussian m0 at 0.3.");

    m.def(
        "run",
        [](const std::string& config_text, const std::vector<std::string>& overrides) {
            auto cfg = cli::parse_config_text(config_text);
            for (const auto& o : overrides) {
                auto eq = o.find('=');
                if (eq == std::string::npos) throw ParameterError("override must be key=value: " + o);
                cli::set_value(cfg, o.substr(0, eq), o.substr(eq + 1));
            }
            std::ostringstream out, err;
            int code = cli::run(cfg, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("config_text"), py::arg("overrides") = std::vector<std::string>{},
        "Run a CLI command from INI text; returns (exit code, stdout, stderr).");

    m.def("validation_battery", [](bool fracops_only) {
        py::list rows;
        for (const auto& r : cli::validation_battery(fracops_only)) {
            py::dict d;
            d["check"] = r.check;
            d["params"] = r.params;
            d["measured"] = r.measured;
            d["tolerance"] = r.tolerance;
            d["pass"] = r.pass;
            rows.append(d);
        }
        return rows;
    }, py::arg("fracops_only") = true);
}
