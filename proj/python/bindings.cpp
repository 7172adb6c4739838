#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "biascal/calibration.hpp"
#include "biascal/errors.hpp"
#include "biascal/estimators.hpp"
#include "biascal/experiments.hpp"
#include "biascal/queueing.hpp"

namespace py = pybind11;
using namespace biascal;

namespace {

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ConfigError("format must be csv or json");
}

std::string report_text(const ExperimentReport& r, const std::string& format) {
  std::ostringstream os;
  write_report(os, r, parse_format(format));
  return os.str();
}

}  // namespace

PYBIND11_MODULE(_biascal, m) {
  m.doc() = "Bias-variance calibrated estimators for simulation derivatives";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<BiasOrder>(m, "BiasOrder")
      .def(py::init([](double q1, double q2) { return BiasOrder{q1, q2}; }), py::arg("q1") = 2.0,
           py::arg("q2") = 1.0)
      .def_readwrite("q1", &BiasOrder::q1)
      .def_readwrite("q2", &BiasOrder::q2)
      .def("alpha", &BiasOrder::alpha)
      .def("__repr__", [](const BiasOrder& o) {
        std::ostringstream os;
        os << "BiasOrder(q1=" << o.q1 << ", q2=" << o.q2 << ")";
        return os.str();
      });

  py::class_<XiMatrix>(m, "XiMatrix")
      .def_readonly("xi11", &XiMatrix::xi11)
      .def_readonly("xi12", &XiMatrix::xi12)
      .def_readonly("xi22", &XiMatrix::xi22)
      .def_readonly("phi11", &XiMatrix::phi11)
      .def_readonly("phi12", &XiMatrix::phi12)
      .def_readonly("phi22", &XiMatrix::phi22)
      .def_readonly("n", &XiMatrix::n)
      .def_readonly("n0", &XiMatrix::n0);
  m.def("xi_matrix", &xi_matrix, py::arg("order"), py::arg("n"), py::arg("n0") = 0);
  m.def("a_star_objective", &a_star_objective, py::arg("a"), py::arg("xi"));
  m.def("feasibility_margin", &feasibility_margin, py::arg("a"), py::arg("xi"), py::arg("K"));
  m.def("solve_a_star", &solve_a_star, py::arg("xi"), py::arg("order"), py::arg("K"));

  py::class_<WeightScheme>(m, "WeightScheme")
      .def_readonly("weights", &WeightScheme::weights)
      .def_readonly("lambda1", &WeightScheme::lambda1)
      .def_readonly("lambda2", &WeightScheme::lambda2)
      .def_readonly("a_star", &WeightScheme::a_star)
      .def_readonly("eta_star", &WeightScheme::eta_star)
      .def_readonly("s_star", &WeightScheme::s_star)
      .def_readonly("K", &WeightScheme::K)
      .def_readonly("n0", &WeightScheme::n0)
      .def_readonly("xi", &WeightScheme::xi)
      .def_property_readonly("n", &WeightScheme::n)
      .def("scaled_s_star", &WeightScheme::scaled_s_star);
  m.def("optimal_weights", &optimal_weights, py::arg("n"), py::arg("n0") = 0, py::arg("order") = BiasOrder{},
        py::arg("K") = 1.0);
  m.def("brute_force_weights", &brute_force_weights, py::arg("n"), py::arg("n0"), py::arg("order"), py::arg("a"));

  py::class_<RecursiveCalibration>(m, "RecursiveCalibration")
      .def_readonly("ratio", &RecursiveCalibration::ratio)
      .def_readonly("c", &RecursiveCalibration::c)
      .def_readonly("beta", &RecursiveCalibration::beta)
      .def_readonly("d_scale", &RecursiveCalibration::d_scale);
  m.def("amrr_general", &amrr_general, py::arg("order"), py::arg("K"));
  m.def("amrr_recursive_tied", &amrr_recursive_tied, py::arg("order"));
  m.def("amrr_recursive_free", &amrr_recursive_free, py::arg("order"));

  py::class_<SyntheticOracleSpec>(m, "SyntheticOracleSpec")
      .def_static("scalar", &SyntheticOracleSpec::scalar, py::arg("theta"), py::arg("B"), py::arg("sigma"),
                  py::arg("order") = BiasOrder{})
      .def_readwrite("theta", &SyntheticOracleSpec::theta)
      .def_readwrite("B", &SyntheticOracleSpec::B)
      .def_readwrite("noise_scale", &SyntheticOracleSpec::noise_scale)
      .def_readwrite("order", &SyntheticOracleSpec::order);

  // Single estimator runs on the synthetic model, keyed by an integer seed.
  m.def(
      "baseline_estimate",
      [](const SyntheticOracleSpec& spec, std::int64_t n, double d, std::int64_t n0, std::uint64_t seed) {
        const DeltaSchedule s{d, spec.order.alpha(), n0};
        return baseline_estimate(make_synthetic_oracle(spec), n, s, StreamKey(seed)).estimate;
      },
      py::arg("spec"), py::arg("n"), py::arg("d") = 1.0, py::arg("n0") = 0, py::arg("seed") = 1);
  m.def(
      "recursive_estimate",
      [](const SyntheticOracleSpec& spec, std::int64_t n, double d, double c, double beta, std::int64_t n0,
         std::uint64_t seed) {
        const DeltaSchedule s{d, spec.order.alpha(), n0};
        return recursive_estimate(make_synthetic_oracle(spec), n, s, RecursiveParams{c, beta, {}}, StreamKey(seed))
            .estimate;
      },
      py::arg("spec"), py::arg("n"), py::arg("d") = 1.0, py::arg("c") = 1.0, py::arg("beta") = 1.0,
      py::arg("n0") = 0, py::arg("seed") = 1);
  m.def(
      "weighted_estimate",
      [](const SyntheticOracleSpec& spec, const WeightScheme& w, double d, std::uint64_t seed) {
        const DeltaSchedule s{d, spec.order.alpha(), w.n0};
        return weighted_estimate(make_synthetic_oracle(spec), w.n(), s, w, StreamKey(seed)).estimate;
      },
      py::arg("spec"), py::arg("scheme"), py::arg("d") = 1.0, py::arg("seed") = 1);

  py::class_<QueueParams>(m, "QueueParams")
      .def(py::init([](double arrival, double service, int k) { return QueueParams{arrival, service, k}; }),
           py::arg("arrival_rate") = 4.0, py::arg("service_rate") = 4.0, py::arg("num_customers") = 10)
      .def_readwrite("arrival_rate", &QueueParams::arrival_rate)
      .def_readwrite("service_rate", &QueueParams::service_rate)
      .def_readwrite("num_customers", &QueueParams::num_customers);
  py::enum_<RateTarget>(m, "RateTarget").value("Arrival", RateTarget::Arrival).value("Service", RateTarget::Service);
  m.def(
      "mm1_average_system_time",
      [](const QueueParams& p, std::uint64_t seed) { return mm1_transient_sample(p, StreamKey(seed)).avg_system_time; },
      py::arg("params"), py::arg("seed"));
  m.def(
      "mm1_derivative_oracle",
      [](const QueueParams& p, RateTarget t, double delta, std::uint64_t seed, bool crn) {
        return mm1_derivative_oracle(p, t, delta, StreamKey(seed), crn);
      },
      py::arg("params"), py::arg("target"), py::arg("delta"), py::arg("seed"), py::arg("crn") = false);
  m.def(
      "mm1_gradient_oracle_sp",
      [](const QueueParams& p, double delta, std::uint64_t seed, bool crn) {
        return mm1_gradient_oracle_sp(p, delta, StreamKey(seed), crn);
      },
      py::arg("params"), py::arg("delta"), py::arg("seed"), py::arg("crn") = false);

  py::enum_<ModelKind>(m, "ModelKind")
      .value("Synthetic", ModelKind::Synthetic)
      .value("Mm1Cfd", ModelKind::Mm1Cfd)
      .value("Mm1Sp", ModelKind::Mm1Sp);
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_static("mm1", &ModelConfig::mm1, py::arg("simultaneous_perturbation") = false)
      .def_readwrite("kind", &ModelConfig::kind)
      .def_readwrite("synthetic", &ModelConfig::synthetic)
      .def_readwrite("crn", &ModelConfig::crn);
  py::class_<EstimatorConfig>(m, "EstimatorConfig")
      .def_static("baseline", &EstimatorConfig::baseline)
      .def_static("recursive_free", &EstimatorConfig::recursive_free, py::arg("order") = BiasOrder{})
      .def_static("recursive", &EstimatorConfig::recursive, py::arg("c"), py::arg("beta"), py::arg("d_factor") = 1.0)
      .def_static("averaged", &EstimatorConfig::averaged, py::arg("c"), py::arg("beta"), py::arg("d_factor"))
      .def_static("weighted", &EstimatorConfig::weighted, py::arg("K"))
      .def_readonly("name", &EstimatorConfig::name);
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("model", &ExperimentConfig::model)
      .def_readwrite("estimators", &ExperimentConfig::estimators)
      .def_readwrite("budgets", &ExperimentConfig::budgets)
      .def_readwrite("baseline_d", &ExperimentConfig::baseline_d)
      .def_readwrite("n0", &ExperimentConfig::n0)
      .def_readwrite("replications", &ExperimentConfig::replications)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("workers", &ExperimentConfig::workers)
      .def("hash", &ExperimentConfig::hash);
  py::class_<ReportEntry>(m, "ReportEntry")
      .def_readonly("estimator", &ReportEntry::estimator)
      .def_readonly("n", &ReportEntry::n)
      .def_readonly("mse", &ReportEntry::mse)
      .def_readonly("se", &ReportEntry::se)
      .def_readonly("ratio", &ReportEntry::ratio)
      .def_readonly("ratio_half_width", &ReportEntry::ratio_half_width)
      .def_readonly("degenerate", &ReportEntry::degenerate)
      .def_readonly("theory", &ReportEntry::theory)
      .def_readonly("delta_scale", &ReportEntry::delta_scale);
  py::class_<ExperimentReport>(m, "ExperimentReport")
      .def_readonly("entries", &ExperimentReport::entries)
      .def_readonly("config_hash", &ExperimentReport::config_hash)
      .def("entry", &ExperimentReport::entry, py::arg("estimator"), py::arg("n"),
           py::return_value_policy::reference_internal)
      .def("to_string", &report_text, py::arg("format") = "json");
  m.def("run_experiment", &run_experiment, py::arg("config"), py::call_guard<py::gil_scoped_release>());

  py::class_<TableResult>(m, "TableResult")
      .def_readonly("id", &TableResult::id)
      .def_readonly("title", &TableResult::title)
      .def_readonly("header", &TableResult::header)
      .def_readonly("rows", &TableResult::rows);
  m.def("reproduce_table", &reproduce_table, py::arg("id"), py::arg("scale") = 1.0, py::arg("replications") = 1000,
        py::arg("seed") = 20240101, py::arg("workers") = 0, py::call_guard<py::gil_scoped_release>());
}
