#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>

#include "stimtomo/acceptance.hpp"
#include "stimtomo/error.hpp"
#include "stimtomo/experiments.hpp"
#include "stimtomo/io.hpp"

namespace py = pybind11;
using namespace stimtomo;

// Everything crosses the boundary as JSON text or records CSV; the Python
// side turns JSON into dicts.

namespace {

Json parse(const std::string& text, const char* what) {
  return parse_json(text.empty() ? "{}" : text, what);
}

std::string simulate_qst(const std::string& source, const std::string& acquisition) {
  const auto src = source_from_json(parse(source, "source"));
  const auto acq = qst_config_from_json(parse(acquisition, "acquisition"));
  return records_csv(simulate_qst_counts(angle_averaged_state(src), acq));
}

std::pair<std::string, std::string> simulate_set(const std::string& source, double theta_mrad,
                                                 const std::string& acquisition,
                                                 const std::string& distortion,
                                                 const std::string& pdl) {
  const auto src = source_from_json(parse(source, "source"));
  const auto acq = set_config_from_json(parse(acquisition, "acquisition"));
  const auto d = distortion_from_json(parse(distortion, "distortion"));
  const auto p = pdl_from_json(parse(pdl, "pdl"));
  SetAcquisitionConfig tomo = acq;
  tomo.seed_rng = acq.seed_rng + 1;
  return {records_csv(simulate_set_scan(src, theta_mrad, d, p, acq)),
          records_csv(simulate_seed_tomography(d, p, tomo, theta_mrad))};
}

std::string reconstruct_qst_csv(const std::string& records, const std::string& fit) {
  return to_json(reconstruct_qst(parse_records_csv(records),
                                 fit_options_from_json(parse(fit, "fit"))))
      .dump();
}

std::string reconstruct_set_csv(const std::string& stim, const std::string& seed_tomo,
                                const std::string& fit) {
  return to_json(reconstruct_set(parse_records_csv(stim), parse_records_csv(seed_tomo),
                                 fit_options_from_json(parse(fit, "fit"))))
      .dump();
}

std::string state_json(const std::string& source, double theta_mrad, bool averaged) {
  const auto src = source_from_json(parse(source, "source"));
  const auto rho = averaged ? angle_averaged_state(src) : true_state(src, theta_mrad);
  return Json{{"rho", to_json(rho)}, {"metrics", to_json(compute_metrics(rho))}}.dump();
}

std::string metrics_json(const std::string& rho) {
  return to_json(compute_metrics(density_from_json(parse(rho, "rho")))).dump();
}

double fidelity_json(const std::string& a, const std::string& b) {
  return fidelity(density_from_json(parse(a, "rho")), density_from_json(parse(b, "sigma")));
}

std::string experiment_json(const std::string& spec) {
  return to_json(run_experiment(experiment_spec_from_json(parse(spec, "spec")))).dump();
}

std::string acceptance_json(std::uint64_t seed, int threads) {
  AcceptanceOptions opts;
  opts.seed = seed;
  opts.threads = threads;
  return to_json(run_acceptance(opts)).dump();
}

}  // namespace

PYBIND11_MODULE(_stimtomo, m) {
  m.doc() = "Coincidence and stimulated-emission tomography of photon pairs";

  auto base = py::register_exception<Error>(m, "StimtomoError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<InvalidStateError>(m, "InvalidStateError", base.ptr());
  py::register_exception<DegenerateError>(m, "DegenerateError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  m.def("simulate_qst", &simulate_qst, py::arg("source"), py::arg("acquisition") = "",
        "QST coincidence records (CSV) of the angle-averaged state",
        py::call_guard<py::gil_scoped_release>());
  m.def("simulate_set", &simulate_set, py::arg("source"), py::arg("theta_mrad") = 0.0,
        py::arg("acquisition") = "", py::arg("distortion") = "", py::arg("pdl") = "",
        "SET records and seed tomography records (both CSV)",
        py::call_guard<py::gil_scoped_release>());
  m.def("reconstruct_qst", &reconstruct_qst_csv, py::arg("records"), py::arg("fit") = "",
        py::call_guard<py::gil_scoped_release>());
  m.def("reconstruct_set", &reconstruct_set_csv, py::arg("records"), py::arg("seed_tomography"),
        py::arg("fit") = "", py::call_guard<py::gil_scoped_release>());
  m.def("state", &state_json, py::arg("source"), py::arg("theta_mrad") = 0.0,
        py::arg("averaged") = false);
  m.def("metrics", &metrics_json, py::arg("rho"));
  m.def("fidelity", &fidelity_json, py::arg("rho"), py::arg("sigma"));
  m.def("run_experiment", &experiment_json, py::arg("spec"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_acceptance", &acceptance_json, py::arg("seed") = 42, py::arg("threads") = 0,
        py::call_guard<py::gil_scoped_release>());
}
