#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "momn/bench.hpp"
#include "momn/grad.hpp"
#include "momn/spectral.hpp"

namespace py = pybind11;
using namespace momn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw Error(ErrorKind::Dimension, "expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array to_array(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict result_dict(const RunResult& r) {
  py::dict d;
  d["descriptor"] = to_array(r.descriptor.values);
  d["y"] = to_array(r.y);
  d["y_pre"] = to_array(r.y_pre);
  py::list records;
  for (const auto& rec : r.telemetry.records) {
    py::dict row;
    row["iter"] = rec.iter;
    row["objective"] = rec.objective;
    row["relative_sqrt_residual"] = rec.relative_sqrt_residual;
    row["l1"] = rec.l1;
    records.append(row);
  }
  d["telemetry"] = records;
  return d;
}

// None, an attention vector, or an integer seed for default attention params.
AttentionSource attention_source(const py::object& attention, std::size_t c) {
  if (attention.is_none()) return {};
  if (py::isinstance<py::int_>(attention)) return attention::default_params(c, 16, attention.cast<std::uint64_t>());
  return attention.cast<std::vector<double>>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-objective matrix normalization";

  py::register_exception<Error>(m, "MomnError", PyExc_RuntimeError);

  py::enum_<SparsityMode>(m, "SparsityMode")
      .value("Sign", SparsityMode::Sign)
      .value("Attention", SparsityMode::Attention);
  py::enum_<CompensationMode>(m, "CompensationMode")
      .value("TraceOfInput", CompensationMode::TraceOfInput)
      .value("TraceOfOutput", CompensationMode::TraceOfOutput)
      .value("None_", CompensationMode::None);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("beta1", &SolverConfig::beta1)
      .def_readwrite("beta2", &SolverConfig::beta2)
      .def_readwrite("mu1", &SolverConfig::mu1)
      .def_readwrite("mu2", &SolverConfig::mu2)
      .def_readwrite("rho", &SolverConfig::rho)
      .def_readwrite("k_iters", &SolverConfig::k_iters)
      .def_readwrite("sparsity_mode", &SolverConfig::sparsity_mode)
      .def_readwrite("compensation_mode", &SolverConfig::compensation_mode)
      .def_readwrite("jitter", &SolverConfig::jitter)
      .def_readwrite("ns_inner", &SolverConfig::ns_inner)
      .def_readwrite("detach_traces", &SolverConfig::detach_traces)
      .def("validate", &SolverConfig::validate)
      .def("to_json", [](const SolverConfig& c) { return bench::config_to_json(c).dump(); })
      .def_static("from_json", [](const std::string& s) { return bench::config_from_json(nlohmann::json::parse(s)); })
      .def("__eq__", [](const SolverConfig& a, const SolverConfig& b) { return a == b; });

  m.def(
      "normalize",
      [](const Array& x, const SolverConfig& cfg, const py::object& attention) {
        const FeatureMap fm(to_matrix(x));
        return result_dict(run(fm, cfg, attention_source(attention, fm.c())));
      },
      py::arg("x"), py::arg("config") = SolverConfig{}, py::arg("attention") = py::none(),
      "Normalize the covariance of an n x c feature map.");
  m.def(
      "normalize_covariance",
      [](const Array& a, const SolverConfig& cfg, const py::object& attention) {
        const CovMatrix cov = make_covariance(to_matrix(a));
        if (py::isinstance<py::int_>(attention)) throw Error(ErrorKind::Configuration, "covariance input needs an attention vector");
        return result_dict(run(cov, cfg, attention_source(attention, cov.c())));
      },
      py::arg("a"), py::arg("config") = SolverConfig{}, py::arg("attention") = py::none());
  m.def("spectral_sqrt", [](const Array& a) { return to_array(spectral::spectral_sqrt(to_matrix(a))); });
  m.def("approx_rank", [](const Array& y, double tau) { return spectral::approx_rank(to_matrix(y), tau); });
  m.def("synth_spd", [](std::uint64_t seed, std::size_t c, double cond) { return to_array(bench::synth_spd(seed, c, cond).a); },
        py::arg("seed"), py::arg("c"), py::arg("cond") = 100.0);
  m.def(
      "grad_check",
      [](const Array& x, const SolverConfig& cfg, double tol, const py::object& attention) {
        const FeatureMap fm(to_matrix(x));
        const auto r = grad::grad_check(fm, cfg, attention_source(attention, fm.c()), tol);
        py::dict d;
        d["pass"] = r.pass;
        d["max_rel_error"] = r.max_rel_error;
        d["min_sign_margin"] = r.min_sign_margin;
        d["entries"] = r.entries.size();
        d["excluded"] = r.excluded;
        d["error"] = r.error;
        return d;
      },
      py::arg("x"), py::arg("config") = SolverConfig{}, py::arg("tol") = 1e-5, py::arg("attention") = py::none());
  m.def(
      "run_experiment",
      [](const std::string& spec_json) {
        const auto spec = bench::spec_from_json(nlohmann::json::parse(spec_json));
        return bench::report_to_json(bench::run_experiment(spec)).dump();
      },
      py::arg("spec_json"), "Run an experiment from its JSON spec and return the report as JSON text.");
}
