#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "effham/chain.hpp"
#include "effham/hamiltonian.hpp"
#include "effham/io.hpp"
#include "effham/simulator.hpp"

namespace py = pybind11;
using namespace effham;

namespace {

// Opaque handle: pybind11's variant caster would otherwise try to convert
// the model alternatives by value.
struct PyModel {
  Model model;
};

SolverParams params(int resolution, double tol, const std::string& scheme) {
  SolverParams p;
  p.resolution = resolution;
  p.tol = tol;
  if (scheme == "central") {
    p.scheme = Discretization::kCentralDifference;
  } else if (scheme != "exponential") {
    throw py::value_error("scheme must be 'exponential' or 'central'");
  }
  return p;
}

py::dict certificate(const EigenCertificate& c) {
  py::dict d;
  d["eigenvalue"] = c.eigenvalue;
  d["eigenvector"] = c.eigenvector;
  d["residual"] = c.residual;
  d["cw_lower"] = c.cw_lower;
  d["cw_upper"] = c.cw_upper;
  d["iterations"] = c.iterations;
  return d;
}

std::vector<double> as_momentum(py::object p) {
  if (py::isinstance<py::float_>(p) || py::isinstance<py::int_>(p)) return {p.cast<double>()};
  return p.cast<std::vector<double>>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Effective Hamiltonians of switching Markov processes";

  py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("name", [](const PyModel& x) { return name_of(x.model); })
      .def_property_readonly("dim", [](const PyModel& x) { return dim_of(x.model); })
      .def_property_readonly("regime", [](const PyModel& x) { return std::string(to_string(regime_of(x.model))); })
      .def_property_readonly("discrete",
                             [](const PyModel& x) { return std::holds_alternative<DiscreteModel>(x.model); })
      .def("to_json", [](const PyModel& x) { return model_to_json(x.model).dump(); })
      .def("__repr__", [](const PyModel& x) { return "<Model " + name_of(x.model) + ">"; });

  m.def("preset", [](const std::string& spec) { return PyModel{preset(spec)}; }, py::arg("spec"));
  m.def("preset_names", &preset_names);
  m.def("model_from_json", [](const std::string& text) {
    return PyModel{model_from_json(nlohmann::json::parse(text))};
  }, py::arg("text"));

  m.def("validate", [](const PyModel& handle) {
    const auto r = validate(handle.model);
    py::list v;
    for (const auto& x : r.violations) v.append(py::make_tuple(to_string(x.kind), x.location, x.message));
    return py::make_tuple(r.valid(), v);
  }, py::arg("model"));

  m.def("stationary_measure", [](const Eigen::MatrixXd& rates) {
    return stationary_measure(GeneratorMatrix(rates)).probabilities;
  }, py::arg("rates"));

  m.def("principal_eigenpair", [](const Eigen::MatrixXd& matrix, double tol) {
    EigenOptions o;
    o.tol = tol;
    return certificate(principal_eigenpair(AssembledOperator::from_dense(matrix), o));
  }, py::arg("matrix"), py::arg("tol") = 1e-10);

  m.def("hamiltonian", [](const PyModel& handle, py::object p, int resolution, double tol,
                          const std::string& scheme) {
    const auto q = as_momentum(p);
    const auto sp = params(resolution, tol, scheme);
    HamiltonianValue r;
    {
      py::gil_scoped_release release;
      r = hamiltonian_at(handle.model, q, sp);
    }
    return py::make_tuple(r.value, certificate(r.certificate));
  }, py::arg("model"), py::arg("p"), py::arg("resolution") = 256, py::arg("tol") = 1e-10,
        py::arg("scheme") = "exponential");

  m.def("sweep", [](const PyModel& handle, double p_min, double p_max, int count, int resolution,
                    double tol, int threads) {
    const auto sp = params(resolution, tol, "exponential");
    SweepOptions o;
    o.threads = threads;
    HamiltonianTable t;
    {
      py::gil_scoped_release release;
      t = sweep(handle.model, p_min, p_max, count, sp, o);
    }
    std::vector<std::vector<double>> p;
    std::vector<double> h, residual, gap;
    for (int idx : t.lines.front()) {
      const auto& s = t.samples[idx];
      p.push_back(s.momentum);
      h.push_back(s.value);
      residual.push_back(s.ok() ? s.certificate.residual : NAN);
      gap.push_back(s.ok() ? s.certificate.gap() : NAN);
    }
    py::dict d;
    d["p"] = p;
    d["H"] = h;
    d["residual"] = residual;
    d["cw_gap"] = gap;
    d["convexity"] = convexity_report(t).max_violation;
    d["symmetry"] = symmetry_check(t).max_asymmetry;
    d["coercive"] = coercivity_check(t, handle.model).holds;
    return d;
  }, py::arg("model"), py::arg("p_min") = -3.0, py::arg("p_max") = 3.0, py::arg("count") = 61,
        py::arg("resolution") = 256, py::arg("tol") = 1e-10, py::arg("threads") = 1);

  m.def("velocity", [](const PyModel& handle, int resolution, double tol, double delta) {
    const auto sp = params(resolution, tol, "exponential");
    VelocityEstimate v;
    {
      py::gil_scoped_release release;
      v = velocity_probe(handle.model, sp, delta);
    }
    return py::make_tuple(v.velocity, v.error_estimate);
  }, py::arg("model"), py::arg("resolution") = 256, py::arg("tol") = 1e-10,
        py::arg("delta") = 1e-3);

  m.def("legendre", [](const std::vector<double>& p, const std::vector<double>& h,
                       const std::vector<double>& v) {
    if (p.size() != h.size()) throw py::value_error("p and H must have the same length");
    std::vector<double> grid(p);
    HamiltonianTable t = tabulate(1, grid, [&](std::span<const double> q) {
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] == q[0]) return h[k];
      }
      throw py::value_error("tabulated momenta must include 0");
    });
    const auto lag = legendre(t, v);
    std::vector<double> value, pstar;
    std::vector<bool> boundary;
    for (const auto& s : lag.samples) {
      value.push_back(s.value);
      pstar.push_back(s.pstar[0]);
      boundary.push_back(s.boundary);
    }
    return py::make_tuple(value, pstar, boundary);
  }, py::arg("p"), py::arg("H"), py::arg("v"));

  m.def("simulate", [](const PyModel& handle, double scale, long paths, std::uint64_t seed,
                       double T, double dt_factor, double gamma, int threads) {
    SimulationOptions o;
    o.T = T;
    o.dt_factor = dt_factor;
    o.gamma = gamma;
    TrajectoryBatch b;
    {
      py::gil_scoped_release release;
      b = simulate_batch(handle.model, scale, paths, seed, o, threads);
    }
    py::dict d;
    d["mean"] = b.summary.mean;
    d["sd"] = b.summary.sd;
    d["se"] = b.summary.se;
    d["paths"] = b.summary.paths;
    return d;
  }, py::arg("model"), py::arg("scale"), py::arg("paths") = 1000, py::arg("seed") = 1,
        py::arg("T") = 1.0, py::arg("dt_factor") = 0.05, py::arg("gamma") = 1.0,
        py::arg("threads") = 1);
}
