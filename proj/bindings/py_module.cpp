#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nfqs/checks.hpp"
#include "nfqs/error_bounds.hpp"
#include "nfqs/evolution.hpp"
#include "nfqs/experiments.hpp"
#include "nfqs/grid.hpp"
#include "nfqs/io.hpp"
#include "nfqs/pimc.hpp"
#include "nfqs/variational.hpp"

namespace py = pybind11;
using namespace nfqs;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> to_array2(const std::vector<double>& v, int rows, int cols) {
  return py::array_t<double>({rows, cols}, v.data());
}

std::vector<double> from_array(const py::array_t<double>& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

TrainConfig train_config_from_kwargs(int batch, int steps, double lr,
                                     uint64_t seed, int threads) {
  TrainConfig c;
  c.batch = batch;
  c.steps = steps;
  c.learning_rate = lr;
  c.seed = seed;
  c.n_threads = threads;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Neural quantum states from normalizing flows (C++ core)";

  py::register_exception<ScalePinch>(m, "ScalePinch");
  py::register_exception<NonFinite>(m, "NonFinite");
  py::register_exception<CoincidentParticles>(m, "CoincidentParticles");
  py::register_exception<InitialStateNotReached>(m, "InitialStateNotReached");
  py::register_exception<ConfigError>(m, "ConfigError");

  py::class_<HamiltonianSpec>(m, "Hamiltonian")
      .def_static("trap", &HamiltonianSpec::make_trap, py::arg("g2"),
                  py::arg("yukawa_mass") = 2.0)
      .def_static("tunnel", &HamiltonianSpec::make_tunnel, py::arg("a") = 0.25,
                  py::arg("b") = 4.25)
      .def_static("harmonic", &HamiltonianSpec::make_harmonic, py::arg("n_dof"),
                  py::arg("omega") = 1.0, py::arg("mass") = 1.0)
      .def_property_readonly("n_dof", &HamiltonianSpec::n_dof)
      .def("potential",
           [](const HamiltonianSpec& h, const py::array_t<double>& x) {
             auto xv = from_array(x);
             const auto pv = potential_value(h, xv);
             return py::make_tuple(pv.v, to_array(pv.grad));
           });

  py::class_<FlowModel>(m, "Flow")
      .def_static(
          "qnvp",
          [](int n_dof, int depth, int hidden) {
            return make_qnvp_model(n_dof, depth, hidden);
          },
          py::arg("n_dof"), py::arg("depth"), py::arg("hidden") = 32)
      .def_static(
          "qcnf",
          [](int n_dof, int hidden, int n_steps) {
            return make_qcnf_model(n_dof, hidden, n_steps);
          },
          py::arg("n_dof"), py::arg("hidden") = 32, py::arg("n_steps") = 16)
      .def_property_readonly("n_dof", &FlowModel::n_dof)
      .def_property_readonly("n_params", &FlowModel::n_params)
      .def_property(
          "params",
          [](const FlowModel& f) { return to_array(f.params); },
          [](FlowModel& f, const py::array_t<double>& p) {
            if (static_cast<int>(p.size()) != f.n_params())
              throw ConfigError("params size mismatch");
            f.params = from_array(p);
          })
      .def("init_params",
           [](FlowModel& f, uint64_t seed, double scale) {
             Rng rng(seed);
             init_flow_params(f, scale, rng);
           },
           py::arg("seed"), py::arg("scale") = -1.0)
      .def("sample",
           [](const FlowModel& f, int n, uint64_t seed) {
             Rng rng(seed);
             auto b = sample_batch(f, n, rng);
             return py::make_tuple(to_array2(b.x, b.n, b.n_dof),
                                   to_array(b.log_abs), to_array(b.phase));
           },
           py::arg("n"), py::arg("seed"))
      .def("log_psi",
           [](const FlowModel& f, const py::array_t<double>& x) {
             auto xv = from_array(x);
             const auto e = psi_at(f, xv);
             return py::make_tuple(e.log_abs, e.phase);
           },
           "log|psi| and phase at a configuration x")
      .def("forward",
           [](const FlowModel& f, const py::array_t<double>& y) {
             const auto e = psi_forward(f, from_array(y));
             return py::make_tuple(to_array(e.x), e.log_abs, e.phase);
           })
      .def("save", [](const FlowModel& f, const std::string& path) {
        save_checkpoint(path, f);
      })
      .def_static("load", [](const std::string& path) { return load_checkpoint(path); });

  m.def("local_energy",
        [](const FlowModel& f, const HamiltonianSpec& h, const py::array_t<double>& x) {
          const auto e = local_energy_h(f, h, from_array(x));
          return py::make_tuple(e.re, e.im);
        },
        "(H psi)(x) / psi(x)");

  m.def("loss_ground",
        [](const FlowModel& f, const HamiltonianSpec& h, int n, uint64_t seed) {
          Rng rng(seed);
          auto b = sample_batch(f, n, rng);
          return loss_ground(f, h, b);
        },
        py::arg("flow"), py::arg("ham"), py::arg("n"), py::arg("seed"));

  m.def("train_ground",
        [](const FlowModel& f, const HamiltonianSpec& h, int batch, int steps,
           double lr, uint64_t seed, int threads) {
          auto res = train_ground(f, h,
                                  train_config_from_kwargs(batch, steps, lr, seed, threads));
          py::dict curve;
          std::vector<double> ss(res.curve.step.begin(), res.curve.step.end());
          curve["step"] = to_array(ss);
          curve["loss"] = to_array(res.curve.loss);
          return py::make_tuple(res.model, curve);
        },
        py::arg("flow"), py::arg("ham"), py::arg("batch") = 256,
        py::arg("steps") = 100, py::arg("lr") = 1e-3, py::arg("seed") = 0,
        py::arg("threads") = 0);

  m.def("evaluate_energy",
        [](const FlowModel& f, const HamiltonianSpec& h, int64_t n, uint64_t seed,
           int threads) {
          Rng rng(seed);
          const auto e = evaluate_energy(f, h, n, rng, threads);
          py::dict d;
          d["mean"] = e.mean;
          d["std_error"] = e.std_error;
          d["spread"] = e.spread;
          d["n_samples"] = e.n_samples;
          return d;
        },
        py::arg("flow"), py::arg("ham"), py::arg("n"), py::arg("seed"),
        py::arg("threads") = 0);

  m.def("grid_ground_state",
        [](const HamiltonianSpec& h, double x_min, double x_max, int n_points) {
          Grid1D g{x_min, x_max, n_points};
          auto gr = grid_ground_state(h, g);
          std::vector<double> xs(g.n_points), dens(g.n_points);
          for (int i = 0; i < g.n_points; ++i) {
            xs[i] = g.x(i);
            dens[i] = std::norm(gr.state.psi[i]);
          }
          return py::make_tuple(gr.energy, to_array(xs), to_array(dens));
        },
        py::arg("ham"), py::arg("x_min") = -6.0, py::arg("x_max") = 12.0,
        py::arg("n_points") = 2048);

  m.def("pimc_energy",
        [](double g2, double beta, double dtau, int n_sweeps, int n_therm,
           int n_chains, uint64_t seed) {
          TrapSpec sp;
          sp.g2 = g2;
          PimcConfig cfg;
          cfg.beta = beta;
          cfg.dtau = dtau;
          cfg.n_sweeps = n_sweeps;
          cfg.n_therm = n_therm;
          cfg.n_chains = n_chains;
          cfg.seed = seed;
          const auto r = pimc_energy(sp, cfg);
          py::dict d;
          d["energy"] = r.energy.mean;
          d["std_error"] = r.energy.std_error;
          d["energy_thermo"] = r.energy_thermo.mean;
          d["thermo_std_error"] = r.energy_thermo.std_error;
          d["acceptance"] = r.acceptance;
          return d;
        },
        py::arg("g2"), py::arg("beta") = 10.0, py::arg("dtau") = 0.1,
        py::arg("n_sweeps") = 2000, py::arg("n_therm") = 500,
        py::arg("n_chains") = 2, py::arg("seed") = 0);

  m.def("prepare_initial_tunneling",
        [](const FlowModel& f, int batch, int max_steps, double lr, uint64_t seed) {
          PrepConfig cfg;
          cfg.batch = batch;
          cfg.max_steps = max_steps;
          cfg.learning_rate = lr;
          cfg.seed = seed;
          return prepare_initial_tunneling(f, cfg);
        },
        py::arg("flow"), py::arg("batch") = 128, py::arg("max_steps") = 4000,
        py::arg("lr") = 5e-3, py::arg("seed") = 1);

  m.def("loss_evolution",
        [](const FlowModel& nw, const FlowModel& old, const HamiltonianSpec& h,
           double dt, int n, uint64_t seed) {
          Rng rng(seed);
          auto b = sample_batch(old, n, rng);
          return loss_evolution(nw, old, h, dt, b);
        },
        py::arg("psi_new"), py::arg("psi_old"), py::arg("ham"), py::arg("dt"),
        py::arg("n"), py::arg("seed"));

  m.def("state_error_norm", &state_error_norm);
  m.def("observable_bound", &observable_bound);
  m.def("theta_expectation",
        [](const FlowModel& f, double x0, int64_t n, uint64_t seed) {
          Rng rng(seed);
          const auto t = theta_expectation(f, x0, n, rng);
          return py::make_tuple(t.value, t.std_error);
        },
        py::arg("flow"), py::arg("x0"), py::arg("n"), py::arg("seed"));

  m.def("run_core_checks",
        [](uint64_t seed) {
          py::list out;
          for (const auto& c : run_core_checks(seed)) {
            py::dict d;
            d["name"] = c.name;
            d["value"] = c.value;
            d["tolerance"] = c.tolerance;
            d["pass"] = c.pass;
            out.append(d);
          }
          return out;
        },
        py::arg("seed") = 1);

  m.attr("__version__") = NFQS_VERSION;
}
