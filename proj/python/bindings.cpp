#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "heatlab/asymptotics.hpp"
#include "heatlab/calculus.hpp"
#include "heatlab/cli.hpp"
#include "heatlab/error.hpp"
#include "heatlab/kernels.hpp"
#include "heatlab/localization.hpp"
#include "heatlab/montecarlo.hpp"
#include "heatlab/partitions.hpp"
#include "heatlab/report.hpp"

namespace py = pybind11;
using namespace heatlab;

namespace {

std::string rational_string(const std::optional<Rational>& r) {
  if (!r) return "";
  std::ostringstream os;
  os << *r;
  return os.str();
}

py::dict jet_dict(const Jet& j) {
  py::dict d;
  d["values"] = j.values;
  d["errors"] = j.error_bounds;
  return d;
}

ClosedSet closed_set(const std::vector<std::pair<double, double>>& arcs) {
  ClosedSet a;
  for (const auto& [lo, hi] : arcs) a.push_back({lo, hi});
  return a;
}

}  // namespace

PYBIND11_MODULE(_heatlab, m) {
  m.doc() = "Heat-kernel jets, log-derivative bounds and small-time asymptotics on 1-D models";
  m.attr("version") = kToolVersion;

  static py::exception<Error> error(m, "HeatlabError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<Manifold1D>(m, "Manifold")
      .def_static("circle", &Manifold1D::circle, py::arg("length") = 1.0)
      .def_static("line", &Manifold1D::line)
      .def_static("dirichlet_interval", &Manifold1D::dirichlet_interval, py::arg("a"), py::arg("b"))
      .def_static("weighted_line",
                  [](std::vector<double> f) { return Manifold1D::weighted_line(Potential{std::move(f)}); },
                  py::arg("potential"))
      .def_static("weighted_circle",
                  [](double L, std::vector<double> f) {
                    return Manifold1D::weighted_circle(L, Potential{std::move(f)});
                  },
                  py::arg("length"), py::arg("potential"))
      .def_static("hyperbolic_radial3", &Manifold1D::hyperbolic_radial3)
      .def("id", &Manifold1D::id)
      .def("__repr__", [](const Manifold1D& s) { return "<Manifold " + s.id() + ">"; });

  m.def("distance", &distance, py::arg("manifold"), py::arg("x"), py::arg("y"));
  m.def(
      "distance_via",
      [](const Manifold1D& mf, double x, const std::vector<std::pair<double, double>>& a, double y) {
        return distance_via(mf, x, closed_set(a), y);
      },
      py::arg("manifold"), py::arg("x"), py::arg("arcs"), py::arg("y"));
  m.def("is_cut_pair", &is_cut_pair, py::arg("manifold"), py::arg("x"), py::arg("y"));

  py::class_<Kernel>(m, "Kernel")
      .def(py::init([](const Manifold1D& mf, int grid) { return Kernel::for_manifold(mf, grid); }),
           py::arg("manifold"), py::arg("grid_size") = 2048)
      .def("describe", &Kernel::describe)
      .def("value", &Kernel::value, py::arg("t"), py::arg("x"), py::arg("y"))
      .def("log_value", &Kernel::log_value, py::arg("t"), py::arg("x"), py::arg("y"))
      .def(
          "y_jet", [](const Kernel& k, double t, double x, double y, int n) { return jet_dict(k.y_jet(t, x, y, n)); },
          py::arg("t"), py::arg("x"), py::arg("y"), py::arg("order"))
      .def(
          "y_log_jet",
          [](const Kernel& k, double t, double x, double y, int n) { return jet_dict(k.y_log_jet(t, x, y, n)); },
          py::arg("t"), py::arg("x"), py::arg("y"), py::arg("order"))
      .def(
          "unit_frame_log_jet",
          [](const Kernel& k, double t, double x, double y, int n) {
            return jet_dict(unit_frame_log_jet(k, t, x, y, n));
          },
          py::arg("t"), py::arg("x"), py::arg("y"), py::arg("order"));

  m.def("log_jet", [](std::vector<double> v) { return log_jet(Jet(std::move(v))).values; });
  m.def("exp_jet", [](std::vector<double> v) { return exp_jet(Jet(std::move(v))).values; });
  m.def("bell_number", &bell_number);

  m.def(
      "cumulant_leading",
      [](const Manifold1D& mf, double x, double y, int n) {
        const auto c = cumulant_leading(mf, x, y, n);
        py::dict d;
        d["value"] = c.value;
        d["exact"] = rational_string(c.exact);
        d["distance"] = c.distance;
        return d;
      },
      py::arg("manifold"), py::arg("x"), py::arg("y"), py::arg("order"));

  m.def(
      "through_kernel",
      [](const Manifold1D& mf, const std::vector<std::pair<double, double>>& a, double t, double x,
         double y) {
        const auto v = through_kernel(mf, closed_set(a), t, x, y);
        py::dict d;
        d["value"] = v.value;
        d["full"] = v.full;
        d["killed"] = v.killed;
        d["log_value"] = v.log_value;
        return d;
      },
      py::arg("manifold"), py::arg("arcs"), py::arg("t"), py::arg("x"), py::arg("y"));

  m.def(
      "exit_probability",
      [](const Manifold1D& mf, double x, double a, double horizon) {
        const auto p = exit_probability(mf, x, a, horizon);
        return py::make_tuple(p.value, p.standard_error, p.exact);
      },
      py::arg("manifold"), py::arg("x"), py::arg("radius"), py::arg("horizon"));

  m.def(
      "mc_exit_probability",
      [](const Manifold1D& mf, double x, double t, double dt, std::size_t paths, std::uint64_t seed,
         double radius, bool bridge, int threads) {
        SimulationConfig cfg;
        cfg.manifold = mf;
        cfg.x = x;
        cfg.t = t;
        cfg.dt = dt;
        cfg.paths = paths;
        cfg.seed = seed;
        cfg.bridge_correction = bridge;
        cfg.threads = threads;
        py::gil_scoped_release release;
        const auto e = mc_exit_probability(cfg, radius);
        return std::make_pair(e.value, e.standard_error);
      },
      py::arg("manifold"), py::arg("x"), py::arg("t"), py::arg("dt"), py::arg("paths"),
      py::arg("seed"), py::arg("radius"), py::arg("bridge") = false, py::arg("threads") = 0);

  // Full command runs take and return JSON text; the Python wrapper decodes it.
  m.def(
      "execute_json",
      [](const std::string& config, int threads) {
        const RunConfig c = parse_run_config(nlohmann::ordered_json::parse(config));
        Report r;
        {
          py::gil_scoped_release release;
          r = execute(c, threads);
        }
        return to_json_string(r);
      },
      py::arg("config"), py::arg("threads") = 0);
  m.def("commands", [] { return kCommands; });
  m.def("presets", [] { return kPresets; });
}
