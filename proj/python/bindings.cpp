#include <limits>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "memmac/error.hpp"
#include "memmac/markov.hpp"
#include "memmac/optimizer.hpp"
#include "memmac/simulator.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace memmac;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

py::dict to_dict(const Estimate& e) { return py::dict("mean"_a = e.mean, "se"_a = e.se, "samples"_a = e.samples); }

py::dict to_dict(const DesignSolution& s) {
    return py::dict("q"_a = s.q_opt, "r"_a = s.r_opt, "c_norm"_a = s.c_norm, "d_crit"_a = s.d_crit,
                    "t_c"_a = s.t_c, "eta_star"_a = s.eta_star, "status"_a = std::string(to_string(s.status)));
}

SimConfig sim_config(int n, double theta, double q, double r, int rounds, int slots, std::uint64_t seed,
                     bool enhanced, int b, const std::string& scenario, unsigned threads) {
    SimConfig c;
    c.params = {n, theta, q, r};
    c.rounds = rounds;
    c.normal_phase_slots = slots;
    c.seed = seed;
    c.enhancement = {enhanced, b, true};
    c.threads = threads;
    auto sc = parse_scenario(scenario);
    if (!sc) throw BadParams("unknown scenario " + scenario);
    c.scenario = *sc;
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Adaptive MAC protocols with one-slot memory: analysis, design and simulation";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<BadParams>(m, "BadParams", error.ptr());
    py::register_exception<SingularSystem>(m, "SingularSystem", error.ptr());
    py::register_exception<ScenarioUnsatisfiable>(m, "ScenarioUnsatisfiable", error.ptr());

    py::class_<ProtocolParams>(m, "ProtocolParams")
        .def(py::init([](int n, double theta, double q, double r) { return ProtocolParams{n, theta, q, r}; }),
             "n_users"_a, "theta"_a, "q"_a, "r"_a)
        .def_readwrite("n_users", &ProtocolParams::n_users)
        .def_readwrite("theta", &ProtocolParams::theta)
        .def_readwrite("q", &ProtocolParams::q)
        .def_readwrite("r", &ProtocolParams::r)
        .def("__repr__", [](const ProtocolParams& p) {
            return "ProtocolParams(n_users=" + std::to_string(p.n_users) + ", theta=" + py::repr(py::float_(p.theta)).cast<std::string>() +
                   ", q=" + py::repr(py::float_(p.q)).cast<std::string>() +
                   ", r=" + py::repr(py::float_(p.r)).cast<std::string>() + ")";
        });

    m.def("analyze", [](const ProtocolParams& p) {
        const auto a = analyze(p);
        return py::dict("t_s"_a = a.t_s, "t_c"_a = a.t_c, "c_norm"_a = a.c_norm, "d_crit"_a = a.d_crit,
                        "f_norm"_a = a.f_norm);
    }, "params"_a);
    m.def("contention_time", &contention_time, "params"_a);
    m.def("channel_utilization", &channel_utilization, "params"_a);
    m.def("critical_delay", &critical_delay, "params"_a);
    m.def("enhanced_critical_delay", &enhanced_critical_delay, "params"_a);
    m.def("stationary_distribution",
          [](const ProtocolParams& p) { return stationary_distribution(build_normal_matrix(p)); }, "params"_a,
          "Stationary distribution of the normal-phase chain, indexed by transmitter count.");

    m.def("maximize_utilization",
          [](int n, double theta, double epsilon) { return to_dict(maximize_utilization({n, theta, kInf, epsilon})); },
          "n_users"_a, "theta"_a, "epsilon"_a = 0.01);
    m.def("solve_design_problem",
          [](int n, double theta, double eta, double epsilon) {
              return to_dict(solve_design_problem({n, theta, eta, epsilon}));
          },
          "n_users"_a, "theta"_a, "eta"_a = kInf, "epsilon"_a = 0.01);
    m.def("critical_eta", [](int n, double theta) { return critical_eta({n, theta, kInf, 0.01}); },
          "n_users"_a, "theta"_a);
    m.def("sweep",
          [](const std::string& axis, int n, double theta, double eta, double start, double stop, double step) {
              auto ax = parse_sweep_axis(axis);
              if (!ax) throw BadParams("unknown axis " + axis);
              py::list rows;
              for (const auto& r : sweep({n, theta, eta, 0.01}, {*ax, start, stop, step}).rows) {
                  rows.append(py::dict(
                      "n"_a = r.n_users, "n_hat"_a = r.n_hat, "theta"_a = r.theta, "eta"_a = r.eta, "q"_a = r.q,
                      "r"_a = r.r, "t_c"_a = r.t_c, "c_norm"_a = r.c_norm, "d_crit"_a = r.d_crit,
                      "status"_a = r.status ? py::object(py::str(std::string(to_string(*r.status)))) : py::none(),
                      "constraint_violated"_a = r.constraint_violated,
                      "error"_a = r.error.empty() ? py::object(py::none()) : py::object(py::str(r.error))));
              }
              return rows;
          },
          "axis"_a, "n_users"_a = 10, "theta"_a = 0.1, "eta"_a = kInf, "start"_a = 0.0, "stop"_a = 0.0,
          "step"_a = 0.01);

    m.def("run_experiment",
          [](int n, double theta, double q, double r, int rounds, int slots, std::uint64_t seed, bool enhanced,
             int b, unsigned threads) {
              const SimConfig cfg = sim_config(n, theta, q, r, rounds, slots, seed, enhanced, b, "single", threads);
              ExperimentResult e;
              {
                  py::gil_scoped_release release;
                  e = run_experiment(cfg);
              }
              return py::dict("t_s"_a = to_dict(e.t_s), "t_c"_a = to_dict(e.t_c), "c_norm"_a = to_dict(e.c_norm),
                              "d_crit"_a = to_dict(e.d_crit), "max_d_crit"_a = e.max_d_crit, "rounds"_a = e.rounds);
          },
          "n_users"_a, "theta"_a, "q"_a, "r"_a, "rounds"_a = 1000, "slots"_a = 100, "seed"_a = 1,
          "enhanced"_a = false, "backoff_bound"_a = 5, "threads"_a = 1);

    m.def("summarize_two_critical",
          [](const std::string& scenario, int n, double theta, double q, double r, int runs, std::uint64_t seed, int b) {
              const auto s = summarize_two_critical(sim_config(n, theta, q, r, runs, 100, seed, true, b, scenario, 1));
              return py::dict("runs"_a = s.runs, "inference_failures"_a = s.inference_failures,
                              "bound_violations"_a = s.bound_violations, "sharing_violations"_a = s.sharing_violations,
                              "yield_violations"_a = s.yield_violations,
                              "exact_trigger_violations"_a = s.exact_trigger_violations,
                              "max_slots_to_inference"_a = s.max_slots_to_inference,
                              "slots_to_inference"_a = to_dict(s.slots_to_inference));
          },
          "scenario"_a, "n_users"_a, "theta"_a, "q"_a, "r"_a, "runs"_a = 1000, "seed"_a = 1, "backoff_bound"_a = 5);

    m.def("estimate_metrics_oracle",
          [](const ProtocolParams& p, std::uint64_t rounds, std::uint64_t seed) {
              OracleEstimate o;
              {
                  py::gil_scoped_release release;
                  o = estimate_metrics_oracle(p, rounds, seed);
              }
              return py::dict("t_c"_a = to_dict(o.t_c), "c_norm"_a = to_dict(o.c_norm), "d_crit"_a = to_dict(o.d_crit));
          },
          "params"_a, "rounds"_a, "seed"_a = 1);
}
