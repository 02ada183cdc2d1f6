#include "coreg/certificates.hpp"
#include "coreg/error.hpp"
#include "coreg/experiments.hpp"
#include "coreg/linear_map.hpp"
#include "coreg/regularizers.hpp"
#include "coreg/solvers.hpp"
#include "coreg/version.hpp"
#include "coreg/wavelet.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace coreg;

namespace {

// pybind11 holders cannot be shared_ptr<const T>; the library never mutates
// maps after construction, so handing out non-const holders is safe.
using PyMap = std::shared_ptr<LinearMap>;
using PyBasis = std::shared_ptr<WaveletBasis>;

PyMap unconst(const MapPtr& m) { return std::const_pointer_cast<LinearMap>(m); }

CoRegData make_data(const PyMap& w, const PyMap& a, const Vector& y, double alpha, const WeightedL1& l1) {
  CoRegData d{w, a, y, alpha, l1, {}};
  d.validate();
  return d;
}

py::dict kv_dict(const KeyValues& kv) {
  py::dict out;
  for (const auto& [k, v] : kv) out[py::str(k)] = v;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Co-regularized sparse recovery from indirect compressed data";
  mod.attr("__version__") = version();

  auto error = py::register_exception<Error>(mod, "Error", PyExc_ValueError);
  py::register_exception<DimensionError>(mod, "DimensionError", error.ptr());
  py::register_exception<BudgetError>(mod, "BudgetError", error.ptr());
  py::register_exception<SolverError>(mod, "SolverError", error.ptr());

  // operators
  py::class_<LinearMap, PyMap>(mod, "LinearMap")
      .def_property_readonly("domain_dim", &LinearMap::domain_dim)
      .def_property_readonly("codomain_dim", &LinearMap::codomain_dim)
      .def_property_readonly("kind", [](const LinearMap& m) { return std::string(to_string(m.kind())); })
      .def("apply", &LinearMap::apply, py::arg("x"))
      .def("adjoint_apply", &LinearMap::adjoint_apply, py::arg("y"))
      .def("descriptor", &LinearMap::descriptor)
      .def("materialize", [](const LinearMap& m) { return materialize(m); })
      .def("norm", [](const LinearMap& m) { return operator_norm(m); })
      .def("__repr__", [](const LinearMap& m) { return "<LinearMap " + m.descriptor() + ">"; });

  py::class_<DenseMap, LinearMap, std::shared_ptr<DenseMap>>(mod, "DenseMap")
      .def(py::init<Matrix>(), py::arg("matrix"));
  py::class_<IdentityMap, LinearMap, std::shared_ptr<IdentityMap>>(mod, "IdentityMap")
      .def(py::init<Index>(), py::arg("n"));
  py::class_<IntegrationOp, LinearMap, std::shared_ptr<IntegrationOp>>(mod, "IntegrationOp")
      .def(py::init<Index, double>(), py::arg("n"), py::arg("scale") = 1.0)
      .def_property_readonly("scale", &IntegrationOp::scale)
      .def("apply_inverse", &IntegrationOp::apply_inverse, py::arg("h"));
  py::class_<BernoulliSensing, LinearMap, std::shared_ptr<BernoulliSensing>>(mod, "BernoulliSensing")
      .def(py::init<Index, Index, std::uint64_t>(), py::arg("m"), py::arg("n"), py::arg("seed"))
      .def_property_readonly("seed", &BernoulliSensing::seed)
      .def_property_readonly("matrix", &BernoulliSensing::matrix);
  py::class_<ProductMap, LinearMap, std::shared_ptr<ProductMap>>(mod, "ProductMap")
      .def(py::init([](const PyMap& w, const PyMap& a) { return std::make_shared<ProductMap>(w, a); }),
           py::arg("w"), py::arg("a"));

  mod.def("compose", [](const PyMap& outer, const PyMap& inner) { return unconst(compose(outer, inner)); },
          py::arg("outer"), py::arg("inner"));
  mod.def("parse_map", [](const std::string& d) { return unconst(parse_map(d)); }, py::arg("descriptor"));

  // basis
  py::class_<WaveletBasis, PyBasis>(mod, "WaveletBasis")
      .def(py::init<Index>(), py::arg("n"))
      .def(py::init<Index, int>(), py::arg("n"), py::arg("levels"))
      .def_property_readonly("n", &WaveletBasis::n)
      .def_property_readonly("levels", &WaveletBasis::levels)
      .def("analyze", [](const WaveletBasis& b, const Vector& h) { return b.analyze(h).values; }, py::arg("h"))
      .def("synthesize", [](const WaveletBasis& b, const Vector& c) { return b.synthesize(CoefficientVector{c}); },
           py::arg("c"))
      .def("atom", &WaveletBasis::atom, py::arg("index"))
      .def("descriptor", &WaveletBasis::descriptor);

  // regularizers
  py::class_<WeightedL1>(mod, "WeightedL1")
      .def(py::init([](const PyBasis& b, std::optional<Vector> kappa) {
             return kappa ? WeightedL1(b, *kappa) : WeightedL1(b);
           }),
           py::arg("basis"), py::arg("kappa") = py::none())
      .def_property_readonly("kappa", &WeightedL1::kappa)
      .def("__call__", &WeightedL1::eval, py::arg("h"))
      .def("prox", &WeightedL1::prox, py::arg("h"), py::arg("t"))
      .def("prox_coefficients", &WeightedL1::prox_coefficients, py::arg("c"), py::arg("t"));

  py::class_<Subgradient>(mod, "Subgradient")
      .def_property_readonly("eta", [](const Subgradient& s) { return s.eta.values; })
      .def_readonly("omega", &Subgradient::omega)
      .def_readonly("margin", &Subgradient::margin);
  mod.def("canonical_subgradient",
          py::overload_cast<const WeightedL1&, const Vector&, const Vector&>(&canonical_subgradient),
          py::arg("l1"), py::arg("h_star"), py::arg("fill"));
  mod.def("bregman_l1", &bregman_l1, py::arg("l1"), py::arg("eta"), py::arg("h"), py::arg("h_star"));
  mod.def("soft_threshold", &soft_threshold, py::arg("v"), py::arg("thresholds"));

  // solvers
  py::class_<SolverConfig>(mod, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("max_iters", &SolverConfig::max_iters)
      .def_readwrite("tol", &SolverConfig::tol)
      .def_readwrite("gamma", &SolverConfig::gamma)
      .def_readwrite("rho", &SolverConfig::rho)
      .def_readwrite("seed", &SolverConfig::seed)
      .def_readwrite("polish", &SolverConfig::polish)
      .def("describe", &SolverConfig::describe);
  mod.def("reference_config", [] { return reference_config({}); });

  py::class_<SolveResult>(mod, "SolveResult")
      .def_readonly("x", &SolveResult::x)
      .def_readonly("h", &SolveResult::h)
      .def_readonly("wx", &SolveResult::wx)
      .def_readonly("objective", &SolveResult::objective)
      .def_readonly("iterations", &SolveResult::iterations)
      .def_readonly("fixed_point_residual", &SolveResult::fixed_point_residual)
      .def_readonly("primal_residual", &SolveResult::primal_residual)
      .def_readonly("converged", &SolveResult::converged)
      .def_readonly("polished", &SolveResult::polished)
      .def_readonly("wall_time", &SolveResult::wall_time);

  mod.def(
      "solve",
      [](const std::string& model, const PyMap& w, const PyMap& a, const Vector& y, double alpha,
         const WeightedL1& l1, const SolverConfig& cfg, bool reference) {
        const CoRegData d = make_data(w, a, y, alpha, l1);
        py::gil_scoped_release release;
        if (parse_model(model) == Model::relaxed) {
          const RelaxedProblem p{d};
          return reference ? reference_solve(p, cfg) : solve_relaxed(p, cfg);
        }
        const StrictProblem p{d};
        return reference ? reference_solve(p, cfg) : solve_strict(p, cfg);
      },
      py::arg("model"), py::arg("w"), py::arg("a"), py::arg("y"), py::arg("alpha"), py::arg("l1"),
      py::arg("config") = SolverConfig{}, py::arg("reference") = false);
  mod.def(
      "objective",
      [](const std::string& model, const PyMap& w, const PyMap& a, const Vector& y, double alpha,
         const WeightedL1& l1, const Vector& x, std::optional<Vector> h) {
        const CoRegData d = make_data(w, a, y, alpha, l1);
        if (parse_model(model) == Model::strict) return objective_strict(StrictProblem{d}, x);
        if (!h) throw Error("relaxed objective needs h");
        return objective_relaxed(RelaxedProblem{d}, x, *h);
      },
      py::arg("model"), py::arg("w"), py::arg("a"), py::arg("y"), py::arg("alpha"), py::arg("l1"),
      py::arg("x"), py::arg("h") = py::none());

  // certificates
  py::class_<InjectivityReport>(mod, "InjectivityReport")
      .def_readonly("omega", &InjectivityReport::omega)
      .def_readonly("sigma_min", &InjectivityReport::sigma_min)
      .def_readonly("a_omega_inv_norm", &InjectivityReport::a_omega_inv_norm)
      .def_readonly("a_norm", &InjectivityReport::a_norm)
      .def_readonly("injective", &InjectivityReport::injective)
      .def("as_dict", [](const InjectivityReport& r) { return kv_dict(r.to_key_values()); });
  mod.def("check_restricted_injectivity",
          [](const PyMap& a, const WeightedL1& l1, const IndexSet& omega) {
            return check_restricted_injectivity(a, l1, omega);
          },
          py::arg("a"), py::arg("l1"), py::arg("omega"));

  py::class_<SourceCertificateRelaxed>(mod, "SourceCertificateRelaxed")
      .def_readonly("u", &SourceCertificateRelaxed::u)
      .def_readonly("v", &SourceCertificateRelaxed::v)
      .def_readonly("eta", &SourceCertificateRelaxed::eta)
      .def_readonly("support", &SourceCertificateRelaxed::support)
      .def_readonly("saturation_margin", &SourceCertificateRelaxed::saturation_margin)
      .def_readonly("valid", &SourceCertificateRelaxed::valid)
      .def_readonly("method", &SourceCertificateRelaxed::method)
      .def("as_dict", [](const SourceCertificateRelaxed& c) { return kv_dict(c.to_key_values()); });
  py::class_<SourceCertificateStrict>(mod, "SourceCertificateStrict")
      .def_readonly("nu", &SourceCertificateStrict::nu)
      .def_readonly("xi", &SourceCertificateStrict::xi)
      .def_readonly("eta", &SourceCertificateStrict::eta)
      .def_readonly("support", &SourceCertificateStrict::support)
      .def_readonly("saturation_margin", &SourceCertificateStrict::saturation_margin)
      .def_readonly("valid", &SourceCertificateStrict::valid)
      .def_readonly("method", &SourceCertificateStrict::method)
      .def("as_dict", [](const SourceCertificateStrict& c) { return kv_dict(c.to_key_values()); });
  mod.def("find_certificate_relaxed",
          [](const PyMap& w, const PyMap& a, const WeightedL1& l1, const Vector& x_star) {
            return find_certificate_relaxed(w, a, l1, x_star);
          },
          py::arg("w"), py::arg("a"), py::arg("l1"), py::arg("x_star"));
  mod.def("find_certificate_strict",
          [](const PyMap& w, const PyMap& a, const WeightedL1& l1, const Vector& x_star) {
            return find_certificate_strict(w, a, l1, x_star);
          },
          py::arg("w"), py::arg("a"), py::arg("l1"), py::arg("x_star"));

  py::class_<RateConstants>(mod, "RateConstants")
      .def_readonly("c", &RateConstants::c)
      .def_readonly("d", &RateConstants::d)
      .def_readonly("big_c", &RateConstants::big_c)
      .def_readonly("source_norm", &RateConstants::source_norm)
      .def_readonly("m_eta", &RateConstants::m_eta)
      .def_static("compute", &RateConstants::compute, py::arg("big_c"), py::arg("source_norm"),
                  py::arg("m_eta"), py::arg("a_norm"), py::arg("a_inv_norm"));
  mod.def("rate_constants_relaxed", &rate_constants_relaxed, py::arg("cert"), py::arg("inj"), py::arg("big_c"),
          py::arg("a_norm"));
  mod.def("rate_constants_strict", &rate_constants_strict, py::arg("cert"), py::arg("inj"), py::arg("big_c"),
          py::arg("a_norm"));

  // experiments
  py::class_<Instance>(mod, "Instance")
      .def_property_readonly("w", [](const Instance& i) { return unconst(i.w); })
      .def_property_readonly("a", [](const Instance& i) { return unconst(i.a); })
      .def_property_readonly("basis", [](const Instance& i) { return std::const_pointer_cast<WaveletBasis>(i.basis); })
      .def_readonly("l1", &Instance::l1)
      .def_property_readonly("x_star", [](const Instance& i) { return i.phantom.x_star; })
      .def_property_readonly("h_star", [](const Instance& i) { return i.phantom.h_star; })
      .def_property_readonly("support", [](const Instance& i) { return i.phantom.support; })
      .def_readonly("y_star", &Instance::y_star);
  mod.def(
      "make_instance",
      [](Index n, Index m, Index sparsity, std::uint64_t seed, double w_scale) {
        return make_instance(InstanceSpec{n, m, sparsity, seed, w_scale});
      },
      py::arg("n") = 256, py::arg("m") = 128, py::arg("sparsity") = 8, py::arg("seed") = 7,
      py::arg("w_scale") = 1.0);
  mod.def("add_noise", &add_noise, py::arg("y"), py::arg("delta"), py::arg("seed"));
  mod.def("default_deltas", &default_deltas);

  py::class_<RateFit>(mod, "RateFit")
      .def_readonly("slope", &RateFit::slope)
      .def_readonly("intercept", &RateFit::intercept)
      .def_readonly("r_squared", &RateFit::r_squared)
      .def_readonly("points_used", &RateFit::points_used);
  mod.def("fit_rate", &fit_rate, py::arg("x"), py::arg("y"));

  py::class_<SweepResult>(mod, "SweepResult")
      .def_readonly("fit", &SweepResult::fit)
      .def_property_readonly("metadata", [](const SweepResult& r) { return kv_dict(r.metadata); })
      .def_property_readonly("records",
                             [](const SweepResult& r) {
                               py::list out;
                               for (const auto& rec : r.records) {
                                 py::dict d;
                                 d["delta"] = rec.delta;
                                 d["alpha"] = rec.alpha;
                                 d["trial"] = rec.trial;
                                 d["bregman_x"] = rec.bregman_x;
                                 d["err_h"] = rec.err_h;
                                 d["residual"] = rec.residual;
                                 d["iterations"] = rec.iterations;
                                 d["converged"] = rec.converged;
                                 d["pass_c"] = rec.pass_c;
                                 d["pass_d"] = rec.pass_d;
                                 out.append(d);
                               }
                               return out;
                             })
      .def("csv", &csv_text)
      .def("hash", [](const SweepResult& r) { return determinism_hash(csv_text(r)); });
  mod.def(
      "run_sweep",
      [](const Instance& inst, const std::string& model, std::optional<std::vector<double>> deltas, double big_c,
         int trials, std::uint64_t noise_seed, int jobs, bool bounds) {
        SweepConfig cfg;
        if (deltas) cfg.deltas = *deltas;
        cfg.big_c = big_c;
        cfg.model = parse_model(model);
        cfg.trials = trials;
        cfg.noise_seed = noise_seed;
        cfg.jobs = jobs;
        if (!bounds) {
          py::gil_scoped_release release;
          return run_sweep(cfg, inst);
        }
        SweepBounds b;
        if (cfg.model == Model::relaxed) {
          const auto cert = find_certificate_relaxed(inst.w, inst.a, inst.l1, inst.phantom.x_star);
          const auto inj = check_restricted_injectivity(inst.a, inst.l1, cert.eta.omega);
          b = {rate_constants_relaxed(cert, inj, big_c, inj.a_norm), cert.to_key_values()};
        } else {
          const auto cert = find_certificate_strict(inst.w, inst.a, inst.l1, inst.phantom.x_star);
          const auto inj = check_restricted_injectivity(inst.a, inst.l1, cert.eta.omega);
          b = {rate_constants_strict(cert, inj, big_c, inj.a_norm), cert.to_key_values()};
        }
        py::gil_scoped_release release;
        return run_sweep(cfg, inst, &b);
      },
      py::arg("instance"), py::arg("model") = "relaxed", py::arg("deltas") = py::none(), py::arg("big_c") = 1.0,
      py::arg("trials") = 1, py::arg("noise_seed") = 7, py::arg("jobs") = 1, py::arg("bounds") = false);
  mod.def("determinism_hash", &determinism_hash, py::arg("csv"));
}
