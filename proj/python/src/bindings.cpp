#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mcqn/builtin.hpp"
#include "mcqn/classify.hpp"
#include "mcqn/des.hpp"
#include "mcqn/experiments.hpp"
#include "mcqn/fluid.hpp"
#include "mcqn/lyapunov.hpp"
#include "mcqn/network.hpp"
#include "mcqn/spec_io.hpp"

namespace py = pybind11;
using namespace mcqn;

namespace {

py::dict verdict_dict(const StabilityVerdict& v) {
  py::dict witnesses;
  for (const auto& [name, value] : v.witness_values) witnesses[py::str(name)] = value;
  py::dict d;
  d["verdict"] = std::string(verdict_name(v.verdict));
  d["reason"] = v.reason;
  d["witnesses"] = witnesses;
  return d;
}

py::dict trajectory_dict(const FluidTrajectory& t) {
  const auto n = static_cast<Eigen::Index>(t.breakpoints.size());
  const Eigen::Index k = n ? t.breakpoints.front().state.levels.size() : 0;
  Vector times(n);
  Matrix levels(n, k), rates(n, k);
  py::list events;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& bp = t.breakpoints[static_cast<std::size_t>(i)];
    times[i] = bp.state.t;
    levels.row(i) = bp.state.levels.transpose();
    rates.row(i) = bp.rates.transpose();
    events.append(bp.event);
  }
  py::dict d;
  d["outcome"] = std::string(fluid_outcome_name(t.outcome));
  d["emptied_at"] = t.outcome == FluidOutcome::Emptied ? py::object(py::float_(t.emptied_at)) : py::none();
  d["times"] = times;
  d["levels"] = levels;
  d["rates"] = rates;
  d["events"] = events;
  return d;
}

py::dict stats_dict(const SimStats& s) {
  py::dict d;
  d["mean_total_queue"] = s.mean_total_queue;
  d["per_class_means"] = s.per_class_means;
  d["ci_halfwidth"] = s.ci_halfwidth;
  d["diverged"] = s.diverged;
  d["final_queue"] = s.final_queue;
  d["batch_means"] = s.batch_means;
  d["events"] = s.events;
  d["seed"] = s.seed;
  return d;
}

SimConfig sim_config(double horizon, double warmup, std::uint64_t seed, std::size_t batches,
                     std::vector<std::int64_t> initial) {
  SimConfig c;
  c.horizon = horizon;
  c.warmup = warmup;
  c.seed = seed;
  c.batches = batches;
  c.initial_state = std::move(initial);
  return c;
}

}  // namespace

PYBIND11_MODULE(_mcqn, m) {
  m.doc() = "Multiclass queueing networks under static preemptive priority";
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<SingularSystemError>(m, "SingularSystemError", PyExc_ArithmeticError);

  py::class_<NetworkSpec>(m, "NetworkSpec")
      .def_readonly("num_stations", &NetworkSpec::num_stations)
      .def_property_readonly("num_classes", &NetworkSpec::num_classes)
      .def_readonly("arrival_rates", &NetworkSpec::arrival_rates)
      .def_readonly("mean_service", &NetworkSpec::mean_service)
      .def_readonly("station_of", &NetworkSpec::station_of)
      .def_readonly("routing", &NetworkSpec::routing)
      .def_readonly("priority", &NetworkSpec::priority)
      .def("to_json", [](const NetworkSpec& s, const std::string& name) { return network_to_json(s, name); },
           py::arg("name") = "")
      .def("__repr__", [](const NetworkSpec& s) {
        return "<NetworkSpec J=" + std::to_string(s.num_stations) + " K=" + std::to_string(s.num_classes()) + ">";
      });

  m.def("parse_network_json", &parse_network_json, py::arg("text"));
  m.def("load_network", py::overload_cast<const std::string&>(&load_network), py::arg("path"));
  m.def(
      "builtin_network",
      [](const std::string& name, std::optional<std::vector<double>> alpha, std::optional<std::vector<double>> mean) {
        return builtin_network(parse_topology(name), {std::move(alpha), std::move(mean)});
      },
      py::arg("name"), py::arg("alpha") = py::none(), py::arg("m") = py::none());
  m.def("modified_krss_family", &modified_krss_family, py::arg("alpha_prime"));
  m.def("modified_lk_family", &modified_lk_family, py::arg("alpha6"));

  m.def("validate", [](const NetworkSpec& s) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& v : validate_network(s).violations) out.emplace_back(v.rule, v.detail);
    return out;
  });
  m.def("traffic_solve", [](const NetworkSpec& s) {
    const auto t = traffic_solve(s);
    py::dict d;
    d["lambda"] = t.lambda;
    d["beta"] = t.beta;
    d["rho"] = t.rho;
    return d;
  });
  m.def("classify", [](const NetworkSpec& s) { return verdict_dict(classify(s)); });

  m.def(
      "fluid_solve", [](const NetworkSpec& s, const Vector& q0, double horizon) {
        return trajectory_dict(fluid_solve(s, q0, horizon));
      },
      py::arg("spec"), py::arg("q0"), py::arg("horizon") = 1000.0);
  m.def(
      "stability_probe",
      [](const NetworkSpec& s, std::size_t n, double horizon, std::uint64_t seed) {
        const auto r = stability_probe(s, n, horizon, seed);
        py::list samples;
        for (const auto& x : r.samples) {
          py::dict d;
          d["label"] = x.label;
          d["outcome"] = std::string(fluid_outcome_name(x.outcome));
          d["emptied_at"] = x.emptied_at;
          samples.append(d);
        }
        py::dict d;
        d["verdict"] = std::string(probe_verdict_name(r.verdict));
        d["max_emptying_time"] = r.max_emptying_time;
        d["samples"] = samples;
        return d;
      },
      py::arg("spec"), py::arg("n_samples") = 20, py::arg("horizon") = 1e4, py::arg("seed") = 42);
  m.def(
      "lyapunov_audit",
      [](const NetworkSpec& s, const Vector& q0, double horizon) {
        const auto r = lyapunov_audit(s, fluid_solve(s, q0, horizon));
        py::dict d;
        d["ok"] = r.ok();
        d["tau1"] = r.tau1 ? py::object(py::float_(*r.tau1)) : py::none();
        d["tau2"] = r.tau2 ? py::object(py::float_(*r.tau2)) : py::none();
        d["tau1_bound"] = r.tau1_bound;
        d["failures"] = r.failures;
        return d;
      },
      py::arg("spec"), py::arg("q0"), py::arg("horizon") = 1e4);

  m.def(
      "simulate",
      [](const NetworkSpec& s, double horizon, double warmup, std::uint64_t seed, std::size_t batches,
         std::size_t replications, std::size_t threads, std::vector<std::int64_t> initial) {
        const SimConfig c = sim_config(horizon, warmup, seed, batches, std::move(initial));
        std::vector<SimStats> runs;
        {
          py::gil_scoped_release release;
          runs = simulate_replications(s, c, replications, threads);
        }
        py::list out;
        for (const auto& r : runs) out.append(stats_dict(r));
        return out;
      },
      py::arg("spec"), py::arg("horizon") = 1e6, py::arg("warmup") = 1e5, py::arg("seed") = 42,
      py::arg("batches") = 20, py::arg("replications") = 1, py::arg("threads") = 0,
      py::arg("initial") = std::vector<std::int64_t>{});

  m.def(
      "sweep",
      [](const std::string& family, const std::vector<double>& grid, double horizon, double warmup,
         std::uint64_t seed, std::size_t replications, std::size_t probe_samples, double probe_horizon) {
        SweepOptions o;
        o.sim = sim_config(horizon, warmup, seed, 20, {});
        o.replications = replications;
        o.probe_samples = probe_samples;
        o.probe_horizon = probe_horizon;
        std::vector<SweepRecord> recs;
        const Family f = parse_family(family);
        {
          py::gil_scoped_release release;
          recs = sweep_admission(f, grid, o);
        }
        py::list out;
        for (const auto& r : recs) {
          py::dict d;
          d["param"] = r.param;
          d["mean_total_queue"] = r.mean_total_queue;
          d["ci_halfwidth"] = r.ci_halfwidth;
          d["diverged"] = r.diverged;
          d["classifier"] = std::string(verdict_name(r.classifier));
          d["fluid_verdict"] = r.fluid_verdict;
          d["simulated"] = r.simulated;
          d["error"] = r.error;
          out.append(d);
        }
        return out;
      },
      py::arg("family"), py::arg("grid"), py::arg("horizon") = 2e6, py::arg("warmup") = 2e5,
      py::arg("seed") = 42, py::arg("replications") = 8, py::arg("probe_samples") = 20,
      py::arg("probe_horizon") = 1e4);
  m.def("figure3_grid", &figure3_grid);
  m.def("spearman", &spearman_correlation, py::arg("x"), py::arg("y"));
  m.attr("__version__") = MCQN_VERSION;
}
