#include "qcstab/distortion.hpp"
#include "qcstab/families.hpp"
#include "qcstab/io.hpp"
#include "qcstab/linalg.hpp"
#include "qcstab/null_lagrangian.hpp"
#include "qcstab/qc_search.hpp"
#include "qcstab/stability.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace qcstab;
using nlohmann::json;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw DimensionError("expected a 2-d array");
    if (a.shape(0) > kMaxDim || a.shape(1) > kMaxDim) throw DimensionError("matrix larger than 8 x 8");
    Matrix z(a.shape(0), a.shape(1));
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        for (py::ssize_t j = 0; j < a.shape(1); ++j) z(i, j) = r(i, j);
    return z;
}

py::array_t<double> from_matrix(const Matrix& z) {
    py::array_t<double> out({z.rows(), z.cols()});
    auto w = out.mutable_unchecked<2>();
    for (int i = 0; i < z.rows(); ++i)
        for (int j = 0; j < z.cols(); ++j) w(i, j) = z(i, j);
    return out;
}

py::object to_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_python(const py::object& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

GridMapping mapping_from_array(const Grid& grid, const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw DimensionError("mapping values must have shape (node_count, m)");
    if (static_cast<std::size_t>(a.shape(0)) != grid.node_count())
        throw DimensionError("mapping values must have one row per grid node");
    std::vector<double> v(a.data(), a.data() + a.size());
    return GridMapping(grid, static_cast<int>(a.shape(1)), std::move(v));
}

py::array_t<double> mapping_array(const GridMapping& v) {
    py::array_t<double> out({static_cast<py::ssize_t>(v.grid().node_count()), static_cast<py::ssize_t>(v.m())});
    std::copy(v.values().begin(), v.values().end(), out.mutable_data());
    return out;
}

py::array_t<double> scalar_array(const ScalarField& f) {
    py::array_t<double> out(static_cast<py::ssize_t>(f.values().size()));
    std::copy(f.values().begin(), f.values().end(), out.mutable_data());
    return out;
}

json curve_json(const StabilityCurve& c) {
    json rows = json::array();
    for (const auto& r : c.rows)
        rows.push_back({{"t", r.t}, {"epsilon", r.epsilon}, {"dist_C", r.dist_C}, {"dist_W", r.dist_W}, {"ess_sup_K", r.ess_sup_K}});
    return json{{"rows", rows}, {"margin", c.subset.margin}, {"projection_degree", c.projection_degree}};
}

}  // namespace

PYBIND11_MODULE(_qcstab, m) {
    m.doc() = "Null Lagrangians, quasiconvexity checks and distortion-stability experiments on grids";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    auto pre = py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
    py::register_exception<InvalidNodesError>(m, "InvalidNodesError", pre.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", pre.ptr());
    py::register_exception<EmptyInputError>(m, "EmptyInputError", pre.ptr());
    py::register_exception<DegenerateInstanceError>(m, "DegenerateInstanceError", base.ptr());
    py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
    py::register_exception<UnsupportedInstanceError>(m, "UnsupportedInstanceError", base.ptr());
    py::register_exception<DegenerateFitError>(m, "DegenerateFitError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());

    // grid_core
    py::class_<Grid>(m, "Grid")
        .def(py::init([](std::vector<double> lower, std::vector<double> upper, std::vector<int> nodes) {
                 return Grid(Domain(std::move(lower), std::move(upper)), std::move(nodes));
             }),
             py::arg("lower"), py::arg("upper"), py::arg("nodes"))
        .def_static("unit_cube", [](int n, int nodes) { return Grid::uniform(Domain::unit_cube(n), nodes); },
                    py::arg("n"), py::arg("nodes"))
        .def_property_readonly("dim", &Grid::dim)
        .def_property_readonly("node_count", &Grid::node_count)
        .def_property_readonly("spacing", &Grid::spacing)
        .def_property_readonly("nodes_per_axis", &Grid::nodes_per_axis)
        .def("points", [](const Grid& g) {
            py::array_t<double> out({static_cast<py::ssize_t>(g.node_count()), static_cast<py::ssize_t>(g.dim())});
            auto w = out.mutable_unchecked<2>();
            for (std::size_t node = 0; node < g.node_count(); ++node)
                for (int a = 0; a < g.dim(); ++a) w(static_cast<py::ssize_t>(node), a) = g.coordinate(node, a);
            return out;
        });

    py::class_<GridMapping>(m, "GridMapping")
        .def(py::init(&mapping_from_array), py::arg("grid"), py::arg("values"))
        .def_property_readonly("grid", &GridMapping::grid)
        .def_property_readonly("m", &GridMapping::m)
        .def("values", &mapping_array)
        .def("to_csv", [](const GridMapping& v) {
            std::ostringstream os;
            write_mapping_csv(os, v);
            return os.str();
        })
        .def_static("from_csv", [](const std::string& text) {
            std::istringstream is(text);
            return read_mapping_csv(is);
        });

    m.def("jacobian_field", [](const GridMapping& v) {
        const MatrixField f = jacobian_field(v);
        py::array_t<double> out({static_cast<py::ssize_t>(f.size()), static_cast<py::ssize_t>(f.rows()),
                                 static_cast<py::ssize_t>(f.cols())});
        auto w = out.mutable_unchecked<3>();
        for (std::size_t node = 0; node < f.size(); ++node) {
            const Matrix a = f.at(node);
            for (int i = 0; i < a.rows(); ++i)
                for (int j = 0; j < a.cols(); ++j) w(static_cast<py::ssize_t>(node), i, j) = a(i, j);
        }
        return out;
    });
    m.def("lp_norm",
          [](const Grid& g, std::vector<double> values, double p, double margin) {
              return lp_norm(ScalarField(g, std::move(values)), p, {margin});
          },
          py::arg("grid"), py::arg("values"), py::arg("p"), py::arg("margin") = 0.0);
    m.def("c_norm_distance", [](const GridMapping& v, const GridMapping& u, double margin) {
        return c_norm_distance(v, u, {margin});
    }, py::arg("v"), py::arg("u"), py::arg("margin") = 0.0);
    m.def("lk_gradient_distance", [](const GridMapping& v, const GridMapping& u, double k, double margin) {
        return lk_gradient_distance(v, u, k, {margin});
    }, py::arg("v"), py::arg("u"), py::arg("k"), py::arg("margin") = 0.0);
    m.def("operator_norm", [](const py::array_t<double>& a) { return operator_norm(to_matrix(a)); });
    m.def("holomorphic_polynomial", [](const Grid& g, std::vector<std::complex<double>> c) {
        return holomorphic_polynomial(g, c);
    });
    m.def("random_bump_test_function", &random_bump_test_function, py::arg("grid"), py::arg("m"), py::arg("seed"));

    // null_lagrangian
    m.def("enumerate_multi_indices", [](int bound, int k) {
        std::vector<std::vector<int>> out;
        for (const auto& mi : enumerate_multi_indices(bound, k)) out.push_back(mi.indices());
        return out;
    });
    m.def("minor", [](const py::array_t<double>& a, std::vector<int> rows, std::vector<int> cols) {
        const Matrix z = to_matrix(a);
        return minor(z, MultiIndex(std::move(rows), static_cast<int>(z.rows())), MultiIndex(std::move(cols), static_cast<int>(z.cols())));
    });
    py::class_<NullLagrangian>(m, "NullLagrangian")
        .def_static("determinant", &NullLagrangian::determinant)
        .def_static("from_dict", [](const py::object& o) { return null_lagrangian_from_json(from_python(o)); })
        .def("to_dict", [](const NullLagrangian& g) { return to_python(json(g)); })
        .def_property_readonly("n", &NullLagrangian::n)
        .def_property_readonly("m", &NullLagrangian::m)
        .def_property_readonly("k", &NullLagrangian::k)
        .def("__call__", [](const NullLagrangian& g, const py::array_t<double>& a) { return evaluate_nl(g, to_matrix(a)); })
        .def("is_homogeneous", &is_homogeneous_degree_k);
    m.def("integral_invariance_residual", [](const NullLagrangian& g, const py::array_t<double>& zeta, const GridMapping& phi) {
        return integral_invariance_residual(g, to_matrix(zeta), phi);
    });

    // integrand
    py::class_<Integrand>(m, "Integrand")
        .def_static("operator_norm_power", &Integrand::operator_norm_power, py::arg("n"), py::arg("m"), py::arg("k"),
                    py::arg("scale") = 1.0, py::arg("offset") = 0.0)
        .def_static("frobenius_power", &Integrand::frobenius_power, py::arg("n"), py::arg("m"), py::arg("k"),
                    py::arg("scale") = 1.0, py::arg("offset") = 0.0)
        .def_static("from_null_lagrangian", &Integrand::from_null_lagrangian, py::arg("g"), py::arg("scale") = 1.0,
                    py::arg("offset") = 0.0)
        .def_static("from_dict", [](const py::object& o) { return integrand_from_json(from_python(o)); })
        .def("to_dict", [](const Integrand& f) { return to_python(json(f)); })
        .def("__call__", [](const Integrand& f, const py::array_t<double>& a) { return f(to_matrix(a)); })
        .def("gradient", [](const Integrand& f, const py::array_t<double>& a) { return from_matrix(f.gradient(to_matrix(a))); })
        .def_property_readonly("k", &Integrand::k);
    py::class_<InstancePair>(m, "InstancePair")
        .def(py::init<Integrand, NullLagrangian>())
        .def_static("distortion", &InstancePair::distortion_instance)
        .def_property_readonly("F", &InstancePair::f)
        .def_property_readonly("G", &InstancePair::g);

    m.def("check_homogeneity", &check_homogeneity, py::arg("f"), py::arg("samples"), py::arg("seed"));
    m.def("estimate_h4_constant", &estimate_h4_constant, py::arg("pair"), py::arg("budget"), py::arg("seed"));
    m.def("estimate_cF", &estimate_cF, py::arg("f"), py::arg("budget"), py::arg("seed"));
    m.def("check_hypotheses", [](const InstancePair& p, int budget, std::uint64_t seed) {
        return to_python(json(check_hypotheses(p, budget, seed)));
    }, py::arg("pair"), py::arg("budget"), py::arg("seed"));
    m.def("rank_one_convexity_test", [](const Integrand& f, int samples, std::uint64_t seed) {
        const RankOneReport r = rank_one_convexity_test(f, samples, seed);
        return py::dict(py::arg("violations") = r.violations.size(), py::arg("min_defect") = r.min_defect,
                        py::arg("max_abs_defect") = r.max_abs_defect, py::arg("samples") = r.samples);
    }, py::arg("f"), py::arg("samples"), py::arg("seed"));

    m.def("quasiconvexity_violation_search",
          [](const Integrand& f, const py::array_t<double>& zeta, int resolution, int budget, int starts, std::uint64_t seed,
             int threads) {
              QcSearchOptions o;
              o.resolution = resolution;
              o.budget = budget;
              o.starts = starts;
              o.seed = seed;
              o.threads = threads;
              QcSearchResult r = [&] {
                  py::gil_scoped_release release;
                  return quasiconvexity_violation_search(f, to_matrix(zeta), o);
              }();
              return py::dict(py::arg("best_excess") = r.best_excess, py::arg("best_start") = r.best_start,
                              py::arg("start_excess") = r.start_excess, py::arg("phi") = r.phi);
          },
          py::arg("f"), py::arg("zeta"), py::arg("resolution") = 33, py::arg("budget") = 200, py::arg("starts") = 8,
          py::arg("seed") = 0, py::arg("threads") = 1);
    m.def("strict_qc_probe",
          [](const Integrand& f, const py::array_t<double>& zeta, double eps, double c, int resolution, int budget,
             int starts, std::uint64_t seed) {
              QcSearchOptions o;
              o.resolution = resolution;
              o.budget = budget;
              o.starts = starts;
              o.seed = seed;
              const StrictProbeResult r = strict_qc_probe(f, to_matrix(zeta), eps, c, o);
              return py::dict(py::arg("delta_estimate") = r.delta_estimate, py::arg("feasible_starts") = r.feasible_starts,
                              py::arg("large_gradient_measure") = r.large_gradient_measure,
                              py::arg("gradient_lk_norm") = r.gradient_lk_norm);
          },
          py::arg("f"), py::arg("zeta"), py::arg("epsilon"), py::arg("C"), py::arg("resolution") = 17,
          py::arg("budget") = 100, py::arg("starts") = 4, py::arg("seed") = 0);

    // distortion
    m.def("local_distortion_field", [](const InstancePair& p, const GridMapping& v, double margin) {
        const DistortionField f = local_distortion_field(p, v, {margin});
        std::vector<std::string> flags;
        for (NodeFlag fl : f.flags) flags.push_back(to_string(fl));
        return py::make_tuple(scalar_array(f.values), flags);
    }, py::arg("pair"), py::arg("v"), py::arg("margin") = 0.0);
    m.def("l1_deviation", [](const InstancePair& p, const GridMapping& v, double margin) {
        return l1_deviation(local_distortion_field(p, v, {margin}));
    }, py::arg("pair"), py::arg("v"), py::arg("margin") = 0.0);
    m.def("classify_membership", [](const InstancePair& p, const GridMapping& v, double K_bound, double margin) {
        return to_python(json(classify_membership(p, v, K_bound, {margin})));
    }, py::arg("pair"), py::arg("v"), py::arg("K_bound"), py::arg("margin") = 0.0);

    // stability_lab
    m.def("project_to_class", [](const InstancePair& p, const GridMapping& v, int degree, double margin) {
        const ProjectionResult r = project_to_class(p, v, degree, {margin});
        return py::dict(py::arg("u") = r.u, py::arg("distance_C") = r.distance_C, py::arg("distance_W") = r.distance_W,
                        py::arg("coefficients") = r.coefficients);
    }, py::arg("pair"), py::arg("v"), py::arg("degree"), py::arg("margin") = 0.0);
    m.def("stability_curve",
          [](const InstancePair& p, const Grid& g, const std::string& kind, std::vector<double> t, int degree, double margin,
             std::vector<std::complex<double>> base, int threads) {
              const double t_max = t.empty() ? 0.0 : *std::max_element(t.begin(), t.end());
              const MappingFamily fam = [&] {
                  if (family_kind_from_string(kind) == FamilyKind::planar_radial_stretch)
                      return MappingFamily::radial_stretch(p, g, base, t_max);
                  return MappingFamily::antiholomorphic_perturbation(p, g, base, t_max);
              }();
              return to_python(curve_json(stability_curve(fam, t, degree, {margin}, threads)));
          },
          py::arg("pair"), py::arg("grid"), py::arg("kind"), py::arg("t_values"), py::arg("degree") = 3,
          py::arg("margin") = 0.1, py::arg("base") = std::vector<std::complex<double>>{0.0, 1.0}, py::arg("threads") = 1);
    m.def("semicontinuity_check", [](const InstancePair& p, const std::vector<GridMapping>& seq, const GridMapping& limit) {
        return to_python(json(semicontinuity_check(p, seq, limit, box_bump_field(limit.grid()))));
    }, py::arg("pair"), py::arg("sequence"), py::arg("limit"));
    m.def("lemma1_bound_check",
          [](const InstancePair& p, const std::vector<GridMapping>& fam, double K, double inner, double outer) {
              return to_python(json(lemma1_bound_check(p, fam, K, {inner}, {outer})));
          },
          py::arg("pair"), py::arg("family"), py::arg("K_bound"), py::arg("inner_margin"), py::arg("outer_margin") = 0.0);
    m.def("proposition1_convergence_check",
          [](const Integrand& f, double c, double C, const std::vector<GridMapping>& seq, const GridMapping& limit,
             double margin, double k) {
              return to_python(json(proposition1_convergence_check(f, {c, C}, seq, limit, {margin}, k)));
          },
          py::arg("f"), py::arg("c"), py::arg("C"), py::arg("sequence"), py::arg("limit"), py::arg("margin"), py::arg("k"));
}
