#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pablo/checks.hpp"
#include "pablo/composite.hpp"
#include "pablo/core.hpp"
#include "pablo/environments.hpp"
#include "pablo/harness.hpp"
#include "pablo/olo.hpp"
#include "pablo/perturbation.hpp"

namespace py = pybind11;
using namespace pablo;

namespace {

using Vec = std::vector<double>;
using VecList = std::vector<Vec>;

Vector to_vec(const Vec& v) { return Vector(v); }
Vec from_vec(const Vector& v) { return v.raw(); }

std::vector<Vector> to_vecs(const VecList& vs) {
  std::vector<Vector> out;
  out.reserve(vs.size());
  for (const auto& v : vs) out.emplace_back(v);
  return out;
}

ComparatorSequence to_seq(const VecList& pts) { return ComparatorSequence(to_vecs(pts)); }

py::dict summary_dict(const TrialSummary& s) {
  py::dict d;
  d["env"] = s.env;
  d["learner"] = s.learner;
  d["d"] = s.d;
  d["T"] = s.T;
  d["seed"] = s.seed;
  d["regret_static"] = s.regret_static;
  d["regret_dynamic"] = s.regret_dynamic;
  d["P_T"] = s.P_T;
  d["S_T"] = s.S_T;
  d["Phi_T"] = s.Phi_T;
  d["P_T_Phi"] = s.P_T_Phi;
  d["max_u"] = s.max_u;
  d["sum_l2u"] = s.sum_l2u;
  d["max_iterate_norm"] = s.max_iterate_norm;
  d["max_penalty_gradient"] = s.max_penalty_gradient;
  d["penalty_bound_H"] = s.penalty_bound_H;
  d["max_fixed_point_residual"] = s.max_fixed_point_residual;
  d["clip_count"] = s.clip_count;
  return d;
}

py::dict fit_dict(const ScalingFit& f) {
  py::dict d;
  d["degenerate"] = f.degenerate;
  d["reason"] = f.reason;
  d["slope"] = f.slope;
  d["intercept"] = f.intercept;
  d["r2"] = f.r2;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "PABLO bandit-to-OLO reduction and dynamic-regret learners";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "PabloError", PyExc_ValueError);

  // core
  m.def("path_length", [](const VecList& u) { return path_length(to_seq(u)); }, py::arg("u"));
  m.def("switch_count", [](const VecList& u) { return switch_count(to_seq(u)); }, py::arg("u"));
  m.def(
      "linearithmic_metrics",
      [](const VecList& u, double eps, std::size_t T) {
        const auto r = linearithmic_metrics(to_seq(u), eps, T);
        return py::make_tuple(r.phi_T, r.path_phi);
      },
      py::arg("u"), py::arg("eps_budget"), py::arg("T"), "Returns (Phi_T, P_T_Phi).");

  // perturbation
  m.def(
      "make_lambda",
      [](const Vec& w, double eps_floor) { return make_lambda(to_vec(w), {w.size(), eps_floor, 1.0}); },
      py::arg("w"), py::arg("eps_floor"));
  m.def(
      "perturb",
      [](const Vec& w, std::size_t axis, double sign, double lambda) {
        return from_vec(perturb(to_vec(w), {axis, sign, lambda}));
      },
      py::arg("w"), py::arg("axis"), py::arg("sign"), py::arg("lam"));
  m.def(
      "estimate_loss",
      [](double observed, std::size_t axis, double sign, double lambda, std::size_t d) {
        return from_vec(estimate_loss(observed, {axis, sign, lambda}, d));
      },
      py::arg("observed"), py::arg("axis"), py::arg("sign"), py::arg("lam"), py::arg("d"));
  m.def(
      "enumerate_estimates",
      [](const Vec& w, const Vec& ell, double eps_floor) {
        py::list out;
        for (const auto& e : enumerate_estimates(to_vec(w), to_vec(ell), {w.size(), eps_floor, 1.0}))
          out.append(py::make_tuple(e.draw.axis, e.draw.sign, e.probability, from_vec(e.estimate)));
        return out;
      },
      py::arg("w"), py::arg("ell"), py::arg("eps_floor"),
      "List of (axis, sign, probability, estimate) over the 2d outcomes.");

  // olo
  py::class_<OnlineLearner>(m, "OnlineLearner")
      .def_property_readonly("dim", &OnlineLearner::dim)
      .def("predict", [](const OnlineLearner& l) { return from_vec(l.predict()); })
      .def("update", [](OnlineLearner& l, const Vec& g) { l.update(to_vec(g)); }, py::arg("g"))
      .def("reset", &OnlineLearner::reset)
      .def(
          "pablo_round",
          [](OnlineLearner& l, const std::function<double(Vec)>& feedback, double eps_floor, std::uint64_t index) {
            const auto rec = pablo_round(
                l, [&](const Vector& x) { return feedback(x.raw()); }, {l.dim(), eps_floor, 1.0}, index);
            py::dict d;
            d["w"] = from_vec(rec.w);
            d["axis"] = rec.draw.axis;
            d["sign"] = rec.draw.sign;
            d["lambda"] = rec.draw.lambda;
            d["played"] = from_vec(rec.played);
            d["observed"] = rec.observed;
            d["estimate"] = from_vec(rec.estimate);
            return d;
          },
          py::arg("feedback"), py::arg("eps_floor"), py::arg("outcome_index"),
          "One bandit round with a fixed outcome index in [0, 2d).");

  py::class_<DynamicBase, OnlineLearner>(m, "DynamicBase")
      .def(py::init([](const Vec& anchor, double alpha, double gamma, double eta, double k, double G,
                       bool half_line) {
             DynamicBaseParams p{alpha, gamma, eta, k, G, to_vec(anchor)};
             return DynamicBase(p, half_line ? Domain::NonNegativeHalfLine : Domain::FullSpace);
           }),
           py::arg("anchor"), py::arg("alpha"), py::arg("gamma"), py::arg("eta"), py::arg("k") = 4.0,
           py::arg("G") = 1.0, py::arg("half_line") = false)
      .def_static(
          "tuned",
          [](std::size_t dim, double eps, double G, std::size_t T, double eta) {
            return DynamicBase(tuned_base_params(dim, eps, G, T, eta));
          },
          py::arg("dim"), py::arg("eps_budget"), py::arg("G"), py::arg("T"), py::arg("eta"));

  py::class_<DynamicMeta, OnlineLearner>(m, "DynamicMeta")
      .def(py::init([](std::size_t dim, double eps, double G, std::size_t T) {
             return DynamicMeta({dim, eps, G, T});
           }),
           py::arg("dim"), py::arg("eps_budget"), py::arg("G"), py::arg("T"))
      .def_property_readonly("grid", &DynamicMeta::grid);

  m.def("step_size_grid", &step_size_grid, py::arg("G"), py::arg("T"));
  m.def(
      "meta_regret_bound",
      [](const VecList& u, const VecList& grads, double eps, double G, std::size_t grid_size) {
        return meta_regret_bound(to_seq(u), to_vecs(grads), eps, G, grid_size);
      },
      py::arg("u"), py::arg("grads"), py::arg("eps_budget"), py::arg("G"), py::arg("grid_size"));

  // composite
  py::class_<HuberComponent>(m, "HuberComponent")
      .def(py::init([](double c, double alpha, double p, double s) { return HuberComponent{c, alpha, p, s}; }),
           py::arg("c"), py::arg("alpha"), py::arg("p"), py::arg("running_sum") = 0.0)
      .def_readwrite("c", &HuberComponent::c)
      .def_readwrite("alpha", &HuberComponent::alpha)
      .def_readwrite("p", &HuberComponent::p)
      .def_readwrite("running_sum", &HuberComponent::running_sum);
  m.def("huber_value", &huber_value, py::arg("w_norm"), py::arg("center_norm"), py::arg("comp"));
  m.def("huber_grad_coeff", &huber_grad_coeff, py::arg("r"), py::arg("comp"), py::arg("sum_excluding_current"));
  m.def(
      "solve_fixed_point",
      [](const Vec& x, double y, double eta, const HuberComponent& a, const HuberComponent& b) {
        const auto s = solve_fixed_point(to_vec(x), y, eta, CompositePenalty{a, b});
        return py::make_tuple(from_vec(s.point), s.residual);
      },
      py::arg("x"), py::arg("y"), py::arg("eta"), py::arg("first"), py::arg("second"),
      "Returns (point, residual).");
  m.def(
      "highprob_constants",
      [](double G, double delta, std::size_t T, std::size_t d, double eps, double omega, std::size_t grid) {
        const auto k = highprob_constants(G, delta, T, d, eps, omega, grid);
        py::dict out;
        out["c1"] = k.c1;
        out["c2"] = k.c2;
        out["alpha1"] = k.alpha1;
        out["alpha2"] = k.alpha2;
        out["p1"] = k.p1;
        out["p2"] = k.p2;
        out["H"] = k.H;
        out["omega"] = k.omega;
        out["eps_floor"] = k.eps_floor;
        return out;
      },
      py::arg("G"), py::arg("delta"), py::arg("T"), py::arg("d"), py::arg("eps_budget"), py::arg("omega"),
      py::arg("grid_size"));

  // environments
  m.def("hypercube_delta", &hypercube_delta, py::arg("T"));
  m.def("clipped_sigma_sq", &clipped_sigma_sq, py::arg("d"), py::arg("T"));
  m.def(
      "fenchel_comparator",
      [](const VecList& losses, double eps, double G, std::size_t T) {
        return from_vec(fenchel_comparator(to_vecs(losses), eps, G, T));
      },
      py::arg("losses"), py::arg("eps"), py::arg("G"), py::arg("T"));

  // harness
  m.def(
      "run_trial",
      [](const std::string& config, std::size_t T, std::uint64_t seed) {
        return summary_dict(run_trial(parse_config(config), T, seed).summary);
      },
      py::arg("config_json"), py::arg("T"), py::arg("seed"));
  m.def(
      "run_all",
      [](const std::string& config, std::size_t threads) {
        py::list out;
        for (const auto& s : run_all(parse_config(config), threads)) out.append(summary_dict(s));
        return out;
      },
      py::arg("config_json"), py::arg("threads") = 1);
  m.def(
      "sweep",
      [](const std::string& config, std::size_t threads) {
        const auto r = sweep(parse_config(config), threads);
        py::list aggs;
        for (const auto& a : r.aggregates) {
          py::dict d;
          d["T"] = a.T;
          d["n"] = a.n;
          d["mean"] = a.mean;
          d["std"] = a.std;
          d["stderr"] = a.stderr_;
          d["q50"] = a.q50;
          d["q90"] = a.q90;
          d["q95"] = a.q95;
          aggs.append(d);
        }
        py::dict out;
        out["aggregates"] = aggs;
        out["fit"] = fit_dict(r.fit);
        return out;
      },
      py::arg("config_json"), py::arg("threads") = 1);
  m.def(
      "trials_csv",
      [](const std::string& config, std::size_t threads) {
        std::ostringstream os;
        write_trials_csv(os, run_all(parse_config(config), threads));
        return os.str();
      },
      py::arg("config_json"), py::arg("threads") = 1);
  m.def("normalize_config", [](const std::string& config) { return config_to_json(parse_config(config)); },
        py::arg("config_json"));
  m.def("check_suite", [] {
    py::list out;
    for (const auto& c : run_check_suite()) out.append(py::make_tuple(c.name, c.passed, c.detail));
    return out;
  });
}
