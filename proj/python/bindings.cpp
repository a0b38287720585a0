#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "rhfill/errors.hpp"
#include "rhfill/scenario.hpp"

namespace py = pybind11;
using rhfill::Json;

namespace {

// Python objects cross the boundary as JSON text.
Json to_json(const py::object& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object from_json(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict run_scenario(const py::object& scenario, const std::string& output_dir) {
  const auto s = rhfill::Scenario::from_json(to_json(scenario));
  rhfill::ScenarioResult r;
  {
    py::gil_scoped_release release;
    r = rhfill::run_scenario(s, output_dir);
  }
  py::dict reports;
  for (const auto& [name, rep] : r.reports) reports[py::str(name)] = from_json(rep);
  py::dict out;
  out["summary"] = from_json(r.summary);
  out["reports"] = reports;
  out["exit_status"] = r.exit_status;
  return out;
}

}  // namespace

PYBIND11_MODULE(_rhfill, m) {
  m.doc() = "Relatively hyperbolic Dehn filling experiments";

  // Carries .code (e.g. "schema-error") and .exit_status.
  static PyObject* error = PyErr_NewException("rhfill.Error", PyExc_RuntimeError, nullptr);
  m.attr("Error") = py::handle(error);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const rhfill::Error& e) {
      py::object exc = py::handle(error)(py::str(e.what()));
      exc.attr("code") = std::string(rhfill::to_string(e.code()));
      exc.attr("exit_status") = rhfill::exit_status(e.code());
      PyErr_SetObject(error, exc.ptr());
    }
  });

  m.def("task_kinds", &rhfill::task_kinds, "Task kinds accepted in scenarios.");

  m.def("validate_scenario",
        [](const py::object& s) { return from_json(rhfill::Scenario::from_json(to_json(s)).tasks); },
        "Checks a scenario and returns its normalised task list.", py::arg("scenario"));

  m.def("run_scenario", &run_scenario, "Runs a scenario given as a dict; returns summary, reports and exit status.",
        py::arg("scenario"), py::arg("output_dir") = std::string());

  m.def(
      "run_scenario_file",
      [](const std::filesystem::path& path, std::optional<std::filesystem::path> out) {
        rhfill::ScenarioResult r;
        {
          py::gil_scoped_release release;
          r = rhfill::run_scenario_file(path, out);
        }
        return py::make_tuple(r.exit_status, from_json(r.summary));
      },
      "Runs a scenario file and writes its reports; returns (exit status, summary).", py::arg("path"),
      py::arg("out") = py::none());

  m.def(
      "emit_plot_data", [](const py::object& report) { return rhfill::emit_plot_data(to_json(report)); },
      "CSV of a report's table.", py::arg("report"));

  m.def(
      "describe_group",
      [](const py::object& descriptor) { return rhfill::group_from_json(to_json(descriptor))->describe(); },
      py::arg("descriptor"));

  m.def(
      "multiply",
      [](const py::object& descriptor, const std::string& x, const std::string& y) {
        const auto g = rhfill::group_from_json(to_json(descriptor));
        return g->format(g->multiply(g->parse(x), g->parse(y)));
      },
      "Normal form of the product of two words.", py::arg("descriptor"), py::arg("x"), py::arg("y"));

  m.def(
      "graph_dump",
      [](const py::object& pair, long long radius) {
        const auto g = rhfill::build_cusped_ball(rhfill::pair_from_json(to_json(pair)), radius);
        std::ostringstream out;
        g.dump(out);
        return out.str();
      },
      "Text dump of the cusped window of the given radius.", py::arg("pair"), py::arg("radius"));
}
