#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "gridplace/commands.hpp"
#include "gridplace/errors.hpp"
#include "gridplace/fixtures.hpp"
#include "gridplace/grid.hpp"
#include "gridplace/oracle.hpp"
#include "gridplace/placement.hpp"
#include "gridplace/response.hpp"
#include "gridplace/sensitivity.hpp"
#include "gridplace/spectral.hpp"

namespace py = pybind11;
using namespace gridplace;

namespace {

py::dict placement_dict(const PlacementResult& res) {
  py::dict d;
  d["r"] = res.r;
  d["a"] = res.a;
  d["objective_linear"] = res.objective_linear;
  d["residuals"] = py::make_tuple(res.residuals.sum_r, res.residuals.sum_a, res.residuals.sum_ra);
  d["algorithm"] = res.algorithm;
  d["iterations"] = res.iterations;
  return d;
}

PerturbationParams params_of(double m, double gamma, double mu, double g) {
  PerturbationParams p;
  p.m = m;
  p.gamma = gamma;
  p.mu = mu;
  p.g = g;
  return p;
}

}  // namespace

PYBIND11_MODULE(_gridplace, m) {
  m.doc() = "Inertia and primary-control placement on linearized swing models";
  m.attr("__version__") = "0.1.0";

  py::register_exception<Error>(m, "GridplaceError");

  py::class_<GridModel>(m, "GridModel")
      .def_property_readonly("size", &GridModel::size)
      .def_property_readonly("ids", &GridModel::ids)
      .def_property_readonly("power", &GridModel::power)
      .def_property_readonly("inertia", &GridModel::inertia)
      .def_property_readonly("damping", &GridModel::damping)
      .def("to_json", [](const GridModel& g) { return grid_to_json(g); });

  m.def("load_grid", &load_grid, py::arg("text"));
  m.def("load_grid_file", [](const std::string& path) { return load_grid_file(path); }, py::arg("path"));
  m.def("homogenize_grid", py::overload_cast<const GridModel&>(&homogenize));

  m.def(
      "solve_power_flow",
      [](const GridModel& grid, double tol, int max_iter) {
        const AnglesSolution s = solve_power_flow(grid, PowerFlowOptions{tol, max_iter});
        return py::make_tuple(s.theta, s.residual_norm, s.iterations);
      },
      py::arg("grid"), py::arg("tol") = 1e-10, py::arg("max_iter") = 50);

  py::class_<SwingSystem>(m, "SwingSystem")
      .def_readonly("ids", &SwingSystem::ids)
      .def_readonly("laplacian", &SwingSystem::laplacian)
      .def_readonly("inertia", &SwingSystem::inertia)
      .def_readonly("damping", &SwingSystem::damping)
      .def_property_readonly("size", &SwingSystem::size);

  m.def("swing_system", [](const GridModel& grid) { return eliminate_inertialess(grid, solve_power_flow(grid)); },
        py::arg("grid"), "Power flow, linearization and elimination of inertialess buses");
  m.def("homogenize", py::overload_cast<const SwingSystem&>(&homogenize));

  py::class_<Spectrum>(m, "Spectrum")
      .def_readonly("eigenvalues", &Spectrum::eigenvalues)
      .def_readonly("eigenvectors", &Spectrum::eigenvectors)
      .def_readonly("degenerate", &Spectrum::degenerate)
      .def_readonly("min_gap", &Spectrum::min_gap);

  m.def("laplacian_spectrum", &laplacian_spectrum, py::arg("laplacian"));
  m.def("weighted_spectrum", &weighted_spectrum, py::arg("laplacian"), py::arg("inertia"));
  m.def("resistance_matrix", &resistance_matrix, py::arg("spectrum"));
  m.def("laplacian_pseudo_inverse", &laplacian_pseudo_inverse, py::arg("laplacian"));
  m.def("centrality", &centrality, py::arg("spectrum"), py::arg("bus"));
  m.def("kirchhoff_index", &kirchhoff_index, py::arg("spectrum"), py::arg("p"));
  m.def("slow_mode_weight", &slow_mode_weight, py::arg("spectrum"), py::arg("bus"));

  m.def(
      "measure_closed_form",
      [](const Spectrum& weighted, double inertia_b, double gamma, Index bus, double delta_p) {
        return measure_closed_form(weighted, inertia_b, gamma, FaultSpec{bus, delta_p});
      },
      py::arg("weighted"), py::arg("inertia_b"), py::arg("gamma"), py::arg("bus"), py::arg("delta_p") = 1.0);
  m.def(
      "measure_homogeneous",
      [](const Spectrum& spec, double gamma, Index bus, double delta_p) {
        return measure_homogeneous(spec, gamma, FaultSpec{bus, delta_p});
      },
      py::arg("spectrum"), py::arg("gamma"), py::arg("bus"), py::arg("delta_p") = 1.0);
  m.def(
      "measure_graph_form",
      [](const Spectrum& spec, double gamma, Index bus, double delta_p) {
        return measure_graph_form(spec, gamma, FaultSpec{bus, delta_p});
      },
      py::arg("spectrum"), py::arg("gamma"), py::arg("bus"), py::arg("delta_p") = 1.0);

  m.def(
      "inertia_susceptibility",
      [](const Spectrum& spec, Index bus, double m, double gamma, double mu, double delta_p) {
        return inertia_susceptibility(spec, params_of(m, gamma, mu, 0.0), FaultSpec{bus, delta_p});
      },
      py::arg("spectrum"), py::arg("bus"), py::arg("m") = 1.0, py::arg("gamma") = 1.0, py::arg("mu") = 0.1,
      py::arg("delta_p") = 1.0);
  m.def(
      "damping_susceptibility",
      [](const Spectrum& spec, Index bus, double m, double gamma, double g, double delta_p, bool zero_mode) {
        const auto s = damping_susceptibility(spec, params_of(m, gamma, 0.0, g), FaultSpec{bus, delta_p}, zero_mode);
        py::dict d;
        d["term1"] = s.term1;
        d["term2"] = s.term2;
        d["total"] = s.total;
        return d;
      },
      py::arg("spectrum"), py::arg("bus"), py::arg("m") = 1.0, py::arg("gamma") = 1.0, py::arg("g") = 0.1,
      py::arg("delta_p") = 1.0, py::arg("include_zero_mode") = true);

  m.def("optimize_inertia", &optimize_inertia, py::arg("rho"));
  m.def("optimize_damping", &optimize_damping, py::arg("alpha"));
  m.def(
      "optimize_combined", [](const VectorXd& rho, const VectorXd& alpha) {
        return placement_dict(optimize_combined(rho, alpha));
      },
      py::arg("rho"), py::arg("alpha"));
  m.def(
      "weight_scheme",
      [](const std::string& kind, const VectorXd& m0, std::optional<double> m_thres) {
        const auto k = parse_weight_kind(kind);
        if (!k) throw Error(ErrorCode::InvalidParameters, "unknown weighting '" + kind + "'");
        return weight_scheme(*k, m0, m_thres);
      },
      py::arg("kind"), py::arg("m0"), py::arg("m_thres") = py::none());

  m.def(
      "oracle_measure",
      [](const MatrixXd& laplacian, const VectorXd& inertia, const VectorXd& damping, Index bus, double delta_p) {
        const auto settings = default_settings(laplacian, inertia, damping);
        const auto est = oracle_measure(laplacian, inertia, damping, FaultSpec{bus, delta_p}, settings);
        return py::make_tuple(est.value, est.tail_bound);
      },
      py::arg("laplacian"), py::arg("inertia"), py::arg("damping"), py::arg("bus"), py::arg("delta_p") = 1.0);
  m.def(
      "integrate_swing",
      [](const MatrixXd& laplacian, const VectorXd& inertia, const VectorXd& damping, Index bus, double delta_p,
         double dt, double horizon) {
        const Trajectory t = integrate_swing(laplacian, inertia, damping, FaultSpec{bus, delta_p}, dt, horizon);
        return py::make_tuple(t.times, t.omega, t.theta_dev);
      },
      py::arg("laplacian"), py::arg("inertia"), py::arg("damping"), py::arg("bus"), py::arg("delta_p") = 1.0,
      py::arg("dt") = 1e-3, py::arg("horizon") = 20.0);

  m.def(
      "make_fixture",
      [](const std::string& topology, Index size, std::uint64_t seed, double jitter, double injection_scale,
         double inertia, double gamma, double inertia_spread) {
        FixtureOptions o;
        const auto t = parse_topology(topology);
        if (!t) throw Error(ErrorCode::InvalidParameters, "unknown topology '" + topology + "'");
        o.topology = *t;
        o.size = size;
        o.seed = seed;
        o.jitter = jitter;
        o.injection_scale = injection_scale;
        o.inertia = inertia;
        o.gamma = gamma;
        o.inertia_spread = inertia_spread;
        return make_fixture(o);
      },
      py::arg("topology") = "ring", py::arg("size") = 10, py::arg("seed") = 1, py::arg("jitter") = 0.0,
      py::arg("injection_scale") = 0.0, py::arg("inertia") = 1.0, py::arg("gamma") = 1.0,
      py::arg("inertia_spread") = 0.0);
  m.def("two_bus_fixture", &two_bus_fixture);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a gridplace command; returns (exit_code, stdout, stderr)");
}
