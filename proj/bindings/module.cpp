// Python bindings for the core operations: grids, profile data, the
// constrained solver, decay fits, and the experiment drivers.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <stdexcept>

#include "slab/exact.hpp"
#include "slab/experiments.hpp"
#include "slab/grid.hpp"
#include "slab/operators.hpp"
#include "slab/solver.hpp"
#include "slab/weiss.hpp"

namespace py = pybind11;
using namespace slab;

namespace {

TomlMap dict_to_config(const py::dict& d) {
  TomlMap m;
  for (const auto& [k, v] : d) {
    const std::string key = py::cast<std::string>(k);
    if (py::isinstance<py::bool_>(v)) {
      m[key] = TomlValue::of(py::cast<bool>(v));
    } else if (py::isinstance<py::int_>(v) || py::isinstance<py::float_>(v)) {
      m[key] = TomlValue::of(py::cast<double>(v));
    } else if (py::isinstance<py::str>(v)) {
      m[key] = TomlValue::of(py::cast<std::string>(v));
    } else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      TomlValue t;
      t.kind = TomlValue::Kind::array;
      for (const auto& e : py::cast<py::sequence>(v))
        t.arr.push_back(py::cast<double>(e));
      m[key] = t;
    } else {
      throw std::invalid_argument("config value for '" + key +
                                  "' must be bool, number, str, or a numeric "
                                  "sequence");
    }
  }
  return m;
}

py::dict config_to_dict(const TomlMap& m) {
  py::dict d;
  for (const auto& [k, v] : m) {
    switch (v.kind) {
      case TomlValue::Kind::string: d[k.c_str()] = v.str; break;
      case TomlValue::Kind::number: d[k.c_str()] = v.num; break;
      case TomlValue::Kind::boolean: d[k.c_str()] = v.b; break;
      case TomlValue::Kind::array: d[k.c_str()] = v.arr; break;
    }
  }
  return d;
}

py::dict report_to_dict(const RunReport& r) {
  py::dict d;
  d["experiment"] = r.experiment;
  d["config"] = config_to_dict(r.config);
  py::list checks;
  for (const auto& ch : r.checks) {
    py::dict e;
    e["name"] = ch.name;
    e["pass"] = ch.pass;
    e["measured"] = ch.measured;
    e["bound"] = ch.bound;
    e["relation"] = ch.relation;
    e["note"] = ch.note;
    checks.append(e);
  }
  d["checks"] = checks;
  py::list arts;
  for (const auto& [path, hash] : r.artifacts) {
    py::dict e;
    e["path"] = path;
    e["sha256"] = hash;
    arts.append(e);
  }
  d["artifacts"] = arts;
  d["ok"] = r.ok();
  return d;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

WeightedField field_from_array(const HalfSpaceGrid& g,
                               const py::array_t<double>& a) {
  WeightedField u(g);
  if (static_cast<std::int64_t>(a.size()) != g.size())
    throw std::invalid_argument("field size does not match the grid");
  const auto r = a.unchecked<1>();
  for (py::ssize_t i = 0; i < a.size(); ++i)
    u.v[static_cast<std::size_t>(i)] = r(i);
  return u;
}

py::dict trace_to_dict(const WeissTrace& t) {
  std::vector<double> tau, W, H, diss, lambda, vnorm2, Wtilde;
  for (const auto& r : t.rows) {
    tau.push_back(r.tau);
    W.push_back(r.W);
    H.push_back(r.H);
    diss.push_back(r.diss);
    lambda.push_back(r.lambda);
    vnorm2.push_back(r.vnorm2);
    Wtilde.push_back(r.Wtilde);
  }
  py::dict d;
  d["kappa"] = t.kappa;
  d["dtau"] = t.dtau;
  d["tau"] = to_array(tau);
  d["W"] = to_array(W);
  d["H"] = to_array(H);
  d["diss"] = to_array(diss);
  d["lambda"] = to_array(lambda);
  d["vnorm2"] = to_array(vnorm2);
  d["Wtilde"] = to_array(Wtilde);
  return d;
}

}  // namespace

PYBIND11_MODULE(_slab, mod) {
  mod.doc() =
      "Constrained-flow laboratory: Gauss-weighted grids, the projected "
      "obstacle solver, Weiss-energy diagnostics, and experiment drivers.";

  py::class_<HalfSpaceGrid>(mod, "Grid")
      .def(py::init([](int n, double R, double h) { return make_grid(n, R, h); }),
           py::arg("n"), py::arg("R"), py::arg("h"))
      .def_readonly("n", &HalfSpaceGrid::n)
      .def_readonly("R", &HalfSpaceGrid::R)
      .def_readonly("h", &HalfSpaceGrid::h)
      .def("size", &HalfSpaceGrid::size)
      .def("boundary_size", &HalfSpaceGrid::boundary_size)
      .def("__repr__", [](const HalfSpaceGrid& g) {
        return "Grid(n=" + std::to_string(g.n) + ", R=" + std::to_string(g.R) +
               ", h=" + std::to_string(g.h) + ")";
      });

  mod.def(
      "profile",
      [](const HalfSpaceGrid& g, double lam, std::array<double, 3> e) {
        const double c_n = normalize_profile(g.n, g);
        return to_array(eval_profile32(Profile32{lam, e, c_n}, g).v);
      },
      py::arg("grid"), py::arg("lam") = 1.0,
      py::arg("e") = std::array<double, 3>{1.0, 0.0, 0.0},
      "Samples the 3/2-homogeneous contact profile lam * h_e on the grid.");

  mod.def(
      "profile_2m",
      [](const HalfSpaceGrid& g, int m) {
        const auto mu = make_measure(g);
        return to_array(eval_h2m(m, g, mu).v);
      },
      py::arg("grid"), py::arg("m") = 1,
      "Samples the normalized 2m-homogeneous polynomial profile.");

  mod.def(
      "weiss_energy",
      [](const HalfSpaceGrid& g, const py::array_t<double>& u, double kappa) {
        const FvSystem sys(g);
        return weiss_energy(field_from_array(g, u), kappa, sys);
      },
      py::arg("grid"), py::arg("u"), py::arg("kappa"),
      "Weiss energy of the field at homogeneity kappa.");

  mod.def(
      "solve",
      [](const HalfSpaceGrid& g, const py::array_t<double>& u0, double kappa,
         double dtau, double tau_max, const std::string& scheme,
         double epsilon) {
        const FvSystem sys(g);
        SolverConfig sc;
        sc.frame.kappa = kappa;
        sc.frame.dtau = dtau;
        sc.frame.tau_max = tau_max;
        sc.scheme =
            scheme == "penalized" ? Scheme::penalized : Scheme::projected;
        sc.epsilon = epsilon;
        const SignoriniSolver solver(sys, sc);
        const auto traj = solver.solve_trajectory(field_from_array(g, u0));
        py::dict d = trace_to_dict(traj.trace);
        d["final"] = to_array(traj.final_state.u.v);
        return d;
      },
      py::arg("grid"), py::arg("u0"), py::arg("kappa") = 1.5,
      py::arg("dtau") = 0.02, py::arg("tau_max") = 6.0,
      py::arg("scheme") = "projected", py::arg("epsilon") = 1e-2,
      "Runs the constrained flow and returns the Weiss trace columns plus "
      "the final field.");

  mod.def(
      "fit_exponential",
      [](const std::vector<double>& tau, const std::vector<double>& W,
         double tau_lo, double tau_hi) {
        const auto f =
            fit_decay(tau, W, DecayModel::exponential, tau_lo, tau_hi);
        py::dict d;
        d["gamma0"] = f.gamma0;
        d["A0"] = f.A0;
        d["r2"] = f.r2;
        return d;
      },
      py::arg("tau"), py::arg("W"), py::arg("tau_lo"), py::arg("tau_hi"),
      "Least-squares exponential fit of a positive decay trace.");

  mod.def("experiment_names", &experiment_names,
          "Names accepted by default_config and run_experiment.");

  mod.def(
      "default_config",
      [](const std::string& name) { return config_to_dict(default_config(name)); },
      py::arg("experiment"),
      "Full default configuration for the named experiment.");

  mod.def(
      "run_experiment",
      [](const py::dict& config, const std::string& outdir) {
        return report_to_dict(run_experiment(dict_to_config(config), outdir));
      },
      py::arg("config"), py::arg("outdir"),
      "Runs an experiment and writes its artifacts under outdir.");
}
