#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lsmech/error.hpp"
#include "lsmech/io.hpp"
#include "lsmech/optimizer.hpp"

namespace py = pybind11;
using namespace lsmech;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> history_array(const RunHistory& history) {
  py::array_t<double> out({static_cast<py::ssize_t>(history.size()), py::ssize_t{11}});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < history.size(); ++i) {
    const HistoryRow& r = history.rows()[i];
    const double row[11] = {double(r.iter), r.objective, r.W,       r.E,   r.volume,      r.sigma_pn,
                            r.max_stress_ratio, r.U_o,   r.U_i,     r.lambda, r.max_von_mises};
    for (py::ssize_t k = 0; k < 11; ++k) a(static_cast<py::ssize_t>(i), k) = row[k];
  }
  return out;
}

LevelSetField field_from(py::array_t<double, py::array::c_style | py::array::forcecast> phi) {
  LevelSetField f;
  f.values.assign(phi.data(), phi.data() + phi.size());
  return f;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Level-set topology optimization core";
  m.attr("__version__") = "0.1.0";

  // Later registrations are tried first, so the subclass goes last.
  py::register_exception<Error>(m, "LsmechError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<ObjectiveMode>(m, "ObjectiveMode")
      .value("EffectiveEnergy", ObjectiveMode::EffectiveEnergy)
      .value("PNorm", ObjectiveMode::PNorm)
      .value("Compliance", ObjectiveMode::Compliance);
  py::enum_<RunStatus>(m, "RunStatus")
      .value("Converged", RunStatus::Converged)
      .value("MaxIters", RunStatus::MaxIters)
      .value("Degenerate", RunStatus::Degenerate);

  // Scalar run parameters are exposed as properties; geometry and the full
  // parameter set round-trip through the config text.
  py::class_<ProblemSpec>(m, "ProblemSpec")
      .def(py::init<>())
      .def_readwrite("name", &ProblemSpec::name)
      .def_readwrite("mode", &ProblemSpec::mode)
      .def_readwrite("volume_max", &ProblemSpec::volume_max)
      .def_readwrite("mu", &ProblemSpec::mu)
      .def_readwrite("max_iters", &ProblemSpec::max_iters)
      .def_property(
          "alpha", [](const ProblemSpec& s) { return s.objective.alpha; },
          [](ProblemSpec& s, double v) { s.objective.alpha = v; })
      .def_property(
          "beta", [](const ProblemSpec& s) { return s.objective.beta; },
          [](ProblemSpec& s, double v) { s.objective.beta = v; })
      .def_property(
          "p", [](const ProblemSpec& s) { return s.stress.p; }, [](ProblemSpec& s, double v) { s.stress.p = v; })
      .def_property(
          "divisions",
          [](const ProblemSpec& s) { return std::make_pair(s.domain.divisions_x, s.domain.divisions_y); },
          [](ProblemSpec& s, std::pair<int, int> d) {
            s.domain.divisions_x = d.first;
            s.domain.divisions_y = d.second;
          })
      .def("validate", &ProblemSpec::validate)
      .def("to_config", &serialize_config)
      .def("hash", &config_hash)
      .def("__eq__", [](const ProblemSpec& a, const ProblemSpec& b) { return a == b; })
      .def("__repr__", [](const ProblemSpec& s) {
        return "<ProblemSpec " + s.name + " " + std::string(to_string(s.mode)) + " hash=" + config_hash(s) + ">";
      });

  m.def("inverter_problem", &inverter_problem, py::arg("divisions_per_length") = 400);
  m.def("magnifier_problem", &magnifier_problem, py::arg("divisions_per_length") = 200);
  m.def("lbeam_problem", &lbeam_problem, py::arg("divisions_per_length") = 200);
  m.def("parse_config", [](const std::string& text) { return parse_config_text(text); }, py::arg("text"),
        "Parse key = value configuration text.");
  m.def("load_config", [](const std::filesystem::path& p) { return parse_config(p); }, py::arg("path"));

  m.def(
      "mesh",
      [](const ProblemSpec& spec) {
        const Mesh mesh = build_problem_mesh(spec);
        py::array_t<double> nodes({static_cast<py::ssize_t>(mesh.num_nodes()), py::ssize_t{2}});
        py::array_t<int> tris({static_cast<py::ssize_t>(mesh.num_elements()), py::ssize_t{3}});
        auto n = nodes.mutable_unchecked<2>();
        auto t = tris.mutable_unchecked<2>();
        for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
          n(i, 0) = mesh.node(i).x;
          n(i, 1) = mesh.node(i).y;
        }
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
          for (int k = 0; k < 3; ++k) t(e, k) = mesh.triangle(e)[k];
        }
        return py::make_tuple(nodes, tris);
      },
      py::arg("spec"), "Node coordinates (N, 2) and triangles (M, 3).");

  m.def(
      "initial_displacements",
      [](const ProblemSpec& spec) {
        const Mesh mesh = build_problem_mesh(spec);
        const ElasticSystem sys =
            assemble_system(mesh, LevelSetField::initial(mesh), spec.material, spec.heaviside);
        const PortDisplacements d = evaluation_displacements(solve_state(sys, spec.loads), mesh, spec.loads,
                                                             spec.port_measure, spec.mirror());
        return py::make_tuple(d.U_o, d.U_i);
      },
      py::arg("spec"), "(U_o, U_i) of the full-material design.");

  m.def(
      "run",
      [](const ProblemSpec& spec) {
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run(spec);
        }
        py::dict out;
        out["status"] = r.status;
        out["message"] = r.message;
        out["history"] = history_array(r.history);
        out["phi"] = to_array(r.phi.values);
        return out;
      },
      py::arg("spec"),
      "Run the optimization. Returns a dict with status, message, history (rows of "
      "iter, J, W, E, volume, sigma_pn, max_stress_ratio, U_o, U_i, lambda, max_von_mises) and phi.");

  m.def(
      "volume_fraction",
      [](const ProblemSpec& spec, py::array_t<double, py::array::c_style | py::array::forcecast> phi) {
        const Mesh mesh = build_problem_mesh(spec);
        if (static_cast<std::size_t>(phi.size()) != mesh.num_nodes()) throw Error("phi size does not match mesh");
        return volume_fraction(mesh, field_from(phi), spec.heaviside);
      },
      py::arg("spec"), py::arg("phi"));

  m.def(
      "write_svg",
      [](const ProblemSpec& spec, py::array_t<double, py::array::c_style | py::array::forcecast> phi,
         const std::filesystem::path& path) {
        const Mesh mesh = build_problem_mesh(spec);
        if (static_cast<std::size_t>(phi.size()) != mesh.num_nodes()) throw Error("phi size does not match mesh");
        write_svg(path, mesh, field_from(phi), spec.heaviside);
      },
      py::arg("spec"), py::arg("phi"), py::arg("path"));

  m.def(
      "heaviside",
      [](double phi, double w, double d) { return heaviside(phi, HeavisideParams{w, d}); }, py::arg("phi"),
      py::arg("w") = 0.9, py::arg("d") = 0.01);
  m.def(
      "von_mises",
      [](double sx, double sy, double txy) { return von_mises(Eigen::Vector3d(sx, sy, txy), VmConvention::Conventional); },
      py::arg("sx"), py::arg("sy"), py::arg("txy"));
}
