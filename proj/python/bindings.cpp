// Python bindings: grids and operators, low-rank fields, and the run drivers.

#include "lrcov/errors.hpp"
#include "lrcov/run.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace lrcov;

namespace {

RunConfig config_from(const py::dict& d)
{
    RunConfig cfg;
    for (const auto& item : d) {
        const std::string key = py::str(item.first);
        py::object v = py::reinterpret_borrow<py::object>(item.second);
        std::string text;
        if (py::isinstance<py::bool_>(v))
            text = v.cast<bool>() ? "true" : "false";
        else if (py::isinstance<py::float_>(v))
            text = format_double(v.cast<double>());
        else if (py::isinstance<py::tuple>(v) || py::isinstance<py::list>(v)) {
            const auto seq = v.cast<std::vector<double>>();
            if (seq.size() != 2) throw ConfigError(key + " expects two numbers");
            text = format_double(seq[0]) + "," + format_double(seq[1]);
        } else
            text = py::str(v);
        cfg.set(key, text);
    }
    cfg.validate();
    return cfg;
}

py::dict config_dict(const RunConfig& cfg)
{
    py::dict d;
    for (const auto& key : RunConfig::keys()) d[py::str(key)] = cfg.get(key);
    return d;
}

py::dict eigs_dict(const EigsOutcome& e)
{
    py::dict d;
    d["values"] = e.values();
    d["imag"] = e.imag();
    std::vector<Index> ranks;
    for (const auto& r : e.records) ranks.push_back(r.max_rank);
    d["ranks"] = ranks;
    d["iterations"] = e.iterations;
    d["restarts"] = e.restarts;
    d["converged"] = e.converged_count;
    d["max_rank"] = e.max_rank;
    d["orthogonality_defect"] = e.orthogonality_defect;
    d["max_imag_ratio"] = e.max_imag_ratio;
    d["reason"] = stop_reason_name(e.reason);
    d["hessenberg"] = e.H;
    return d;
}

Matrix as_grid(const Vector& field, Index n_side)
{
    Matrix g(n_side, n_side);  // row = x2 index, column = x1 index
    for (Index j = 0; j < n_side; ++j)
        for (Index i = 0; i < n_side; ++i) g(j, i) = field(i + j * n_side);
    return g;
}

// Problem wrapper exposing the matrix-free Hessian.
class PyHessian {
public:
    explicit PyHessian(const py::dict& cfg) : p_(build_problem(config_from(cfg))) {}

    Index dim() const { return p_.ctx->param_dim(); }
    Vector apply(const Vector& v)
    {
        if (v.size() != dim()) throw ConfigError("vector length does not match the parameter dimension");
        switch (p_.ctx->mode()) {
        case HessianMode::SteadyPoisson: return steady_poisson_apply(v, *p_.ctx);
        case HessianMode::InitialCondition: return misfit_apply_ic(v, *p_.ctx);
        case HessianMode::DistributedSource: {
            const LowRankMat lv = lr_from_dense(unvec(v, p_.ctx->op().n_x(), p_.ctx->op().n_t()), p_.ctx->policy());
            return lr_vec(misfit_apply_st(lv, *p_.ctx));
        }
        }
        return {};
    }
    Matrix dense() { return dense_misfit(*p_.ctx, p_.cfg.oracle_cap).H; }
    Vector mask() const { return p_.layout.mask; }
    py::dict config() const { return config_dict(p_.cfg); }
    py::dict covariance() const
    {
        py::dict d;
        d["beta_noise"] = p_.cov.beta_noise;
        d["beta_prior"] = p_.cov.beta_prior;
        d["gamma_prior"] = p_.cov.gamma_prior;
        return d;
    }

private:
    Problem p_;
};

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Low-rank posterior covariance for linear-Gaussian inverse problems";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    m.def("heat_operator", [](Index n_side) { return assemble_heat(build_grid(n_side)).L; }, py::arg("n_side"),
          "5-point Laplacian (scipy.sparse) on the n_side x n_side interior lattice.");
    m.def(
        "convdiff_operator",
        [](Index n_side, double nu, std::array<double, 2> wind) { return assemble_convdiff(build_grid(n_side), nu, wind).L; },
        py::arg("n_side"), py::arg("nu"), py::arg("wind") = std::array<double, 2>{0.0, 1.0});
    m.def("discrete_fd_eig", [](int mm, int n, Index n_side) { return discrete_fd_eig(mm, n, build_grid(n_side)); },
          py::arg("m"), py::arg("n"), py::arg("n_side"));
    m.def("analytic_poisson_eig", &analytic_poisson_eig, py::arg("m"), py::arg("n"), py::arg("a") = 1.0,
          py::arg("b") = 1.0);
    m.def(
        "separable_eigvec", [](int mm, int n, Index n_side) { return analytic_separable_eigvec(mm, n, build_grid(n_side)).dense(); },
        py::arg("m"), py::arg("n"), py::arg("n_side"));
    m.def(
        "smallest_modes",
        [](Index n_side, std::size_t k) {
            std::vector<std::tuple<int, int, double>> out;
            for (const auto& md : smallest_fd_modes(build_grid(n_side), k)) out.emplace_back(md.m, md.n, md.lambda);
            return out;
        },
        py::arg("n_side"), py::arg("k"));

    py::class_<LowRankMat>(m, "LowRankMat")
        .def(py::init<Matrix, Matrix>(), py::arg("w1"), py::arg("w2"))
        .def_property_readonly("w1", [](const LowRankMat& a) { return a.w1(); })
        .def_property_readonly("w2", [](const LowRankMat& a) { return a.w2(); })
        .def_property_readonly("rank", &LowRankMat::rank)
        .def_property_readonly("shape", [](const LowRankMat& a) { return std::make_pair(a.rows(), a.cols()); })
        .def("to_dense", [](const LowRankMat& a) { return lr_to_dense(a); })
        .def("__repr__", [](const LowRankMat& a) {
            std::ostringstream os;
            os << "LowRankMat(" << a.rows() << "x" << a.cols() << ", rank " << a.rank() << ")";
            return os.str();
        });

    auto policy = [](double eps0, Index r_max) {
        TruncationPolicy p;
        p.eps0 = eps0;
        if (r_max > 0) p.r_max = r_max;
        p.validate();
        return p;
    };
    m.def(
        "truncate", [policy](const LowRankMat& a, double eps0, Index r_max) { return lr_truncate(a, policy(eps0, r_max)); },
        py::arg("a"), py::arg("eps0") = 1e-8, py::arg("r_max") = 0);
    m.def(
        "from_dense", [policy](const Matrix& x, double eps0, Index r_max) { return lr_from_dense(x, policy(eps0, r_max)); },
        py::arg("x"), py::arg("eps0") = 1e-8, py::arg("r_max") = 0);
    m.def("add", &lr_add);
    m.def("dot", &lr_dot);
    m.def("norm", &lr_norm);

    m.def("config_keys", &RunConfig::keys);
    m.def("resolve_config", [](const py::dict& d) { return config_dict(config_from(d)); }, py::arg("config") = py::dict(),
          "Validated configuration with defaults filled in.");

    py::class_<PyHessian>(m, "Hessian")
        .def(py::init<const py::dict&>(), py::arg("config") = py::dict())
        .def_property_readonly("dim", &PyHessian::dim)
        .def_property_readonly("mask", &PyHessian::mask)
        .def_property_readonly("covariance", &PyHessian::covariance)
        .def("config", &PyHessian::config)
        .def("apply", &PyHessian::apply, py::arg("v"))
        .def("dense", &PyHessian::dense);

    m.def(
        "eigs",
        [](const py::dict& d) {
            Problem p = build_problem(config_from(d));
            EigsOutcome e;
            {
                py::gil_scoped_release release;
                e = run_eigs(p, 0, nullptr);
            }
            return eigs_dict(e);
        },
        py::arg("config") = py::dict(), "Arnoldi run; returns Ritz values and diagnostics.");
    m.def(
        "variance",
        [](const py::dict& d) {
            Problem p = build_problem(config_from(d));
            const VarianceOutcome v = run_variance(p, nullptr);
            py::dict out = eigs_dict(v.eigs);
            out["variance"] = as_grid(v.summary.variance_field, p.grid.n_side);
            out["retained_eigenvalues"] = v.summary.eigenvalues;
            out["filter_factors"] = v.summary.filter_factors;
            out["mask"] = as_grid(p.layout.mask, p.grid.n_side);
            out["gamma_prior"] = v.summary.gamma_prior;
            return out;
        },
        py::arg("config") = py::dict(), "Posterior variance field as an n_side x n_side array (row = x2).");
    m.def(
        "oracle",
        [](const py::dict& d) {
            Problem p = build_problem(config_from(d));
            const OracleOutcome o = run_oracle(p);
            py::dict out;
            out["pass"] = o.report.pass;
            out["max_eig_rel_error"] = o.report.max_eig_rel_error;
            out["max_principal_angle"] = o.report.max_angle;
            out["variance_rel_error"] = o.report.variance_rel_error;
            out["matvec_rel_error"] = o.report.matvec_rel_error;
            out["symmetry_defect"] = o.report.symmetry_defect;
            out["lowrank_values"] = o.eigs.values();
            out["dense_values"] = o.dense.values;
            std::ostringstream os;
            o.report.write(os);
            out["report"] = os.str();
            return out;
        },
        py::arg("config") = py::dict(), "Dense brute-force comparison at small scale.");
    m.def(
        "analytic_table",
        [](Index n_side, Index k, double ratio) {
            std::ostringstream os;
            write_analytic_table(os, n_side, k, ratio);
            return os.str();
        },
        py::arg("n_side"), py::arg("k") = 10, py::arg("beta_ratio") = 1e4);
}
