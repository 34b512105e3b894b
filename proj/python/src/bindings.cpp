#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dkspde/cli.hpp"
#include "dkspde/config.hpp"
#include "dkspde/errors.hpp"
#include "dkspde/harness.hpp"
#include "dkspde/kinetic.hpp"
#include "dkspde/nonlin.hpp"
#include "dkspde/solver.hpp"

namespace py = pybind11;
using namespace dkspde;

namespace {

py::array_t<double> as_array(const GridState& g) {
  py::array_t<double> out(g.values.size());
  std::copy(g.values.begin(), g.values.end(), out.mutable_data());
  if (g.spec.d == 2) out.resize({g.spec.n, g.spec.n});
  return out;
}

GridState from_array(const GridSpec& spec, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  if (std::size_t(a.size()) != spec.size()) throw ContractViolation("array size does not match the grid");
  return GridState(spec, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict trajectory_dict(const Trajectory& tr) {
  py::dict d;
  d["diagnostics_csv"] = tr.diagnostics_csv();
  d["final"] = as_array(tr.snapshots.back());
  d["time"] = tr.snapshots.back().time;
  d["truncated"] = tr.truncated;
  d["error"] = tr.error;
  d["metadata"] = tr.metadata;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finite-volume solver for stochastic conservation laws with correlated noise";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<StepError>(m, "StepError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init(&GridSpec::make), py::arg("d"), py::arg("n"))
      .def_readonly("d", &GridSpec::d)
      .def_readonly("n", &GridSpec::n)
      .def_property_readonly("dx", &GridSpec::dx)
      .def_property_readonly("size", &GridSpec::size);

  m.def("preset_names", &preset_names);

  m.def(
      "check_assumptions",
      [](const std::string& preset, const std::map<std::string, double>& params) {
        const auto rep = check_assumptions(make_preset(preset, params), SampleGrid::log_uniform(), 1e-8);
        py::list rows;
        for (const auto& c : rep.checks) {
          py::dict r;
          r["id"] = c.id;
          r["status"] = to_string(c.status);
          r["constant"] = c.constant;
          r["witness"] = c.witness;
          r["hard"] = c.hard;
          rows.append(r);
        }
        return rows;
      },
      py::arg("preset"), py::arg("params") = std::map<std::string, double>{});

  m.def(
      "theta",
      [](const std::string& preset, const std::map<std::string, double>& params, double p, double xi) {
        return theta_phi_p(make_preset(preset, params), p, xi);
      },
      py::arg("preset"), py::arg("params"), py::arg("p"), py::arg("xi"));

  m.def(
      "resolve_config", [](const std::string& text) { return parse_config_text(text, "<python>").resolved_text(); },
      py::arg("text"));

  m.def(
      "initial_state",
      [](const std::string& text) {
        const RunConfig c = parse_config_text(text, "<python>");
        return as_array(make_initial(c.grid, c.initial_a));
      },
      py::arg("config_text"));

  m.def(
      "simulate",
      [](const std::string& text, py::object rho0) {
        const RunConfig c = parse_config_text(text, "<python>");
        const NonlinearitySet set = build_nonlinearity(c);
        const NoiseField noise = build_noise(c);
        const GridState r0 = rho0.is_none() ? make_initial(c.grid, c.initial_a)
                                            : from_array(c.grid, rho0.cast<py::array_t<double>>());
        Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = run(r0, set, noise, c.solver, c.seed);
        }
        return trajectory_dict(tr);
      },
      py::arg("config_text"), py::arg("rho0") = py::none());

  m.def(
      "couple",
      [](const std::string& text) {
        const RunConfig c = parse_config_text(text, "<python>");
        const NonlinearitySet set = build_nonlinearity(c);
        const NoiseField noise = build_noise(c);
        CoupledResult r;
        {
          py::gil_scoped_release release;
          r = run_coupled(make_initial(c.grid, c.initial_a), make_initial(c.grid, c.initial_b), set, noise, c.solver,
                          c.seed);
        }
        py::dict d;
        d["times"] = r.times;
        d["distance"] = r.distance;
        return d;
      },
      py::arg("config_text"));

  m.def(
      "default_xi_edges", [](double xi_max, int per_octave, int per_unit) {
        return default_xi_edges(xi_max, per_octave, per_unit);
      },
      py::arg("xi_max"), py::arg("per_octave") = 4, py::arg("per_unit") = 4);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> storage{"dkspde"};
        storage.insert(storage.end(), args.begin(), args.end());
        std::vector<char*> argv;
        for (auto& s : storage) argv.push_back(s.data());
        py::gil_scoped_release release;
        return cli::main(int(argv.size()), argv.data());
      },
      py::arg("args"));
}
