// Python bindings for the main operations: generation, resistance,
// volume/model fitting, heat kernels, exit times, exponents, and the
// experiment runner. JSON-valued results cross the boundary as text so the
// Python side owns parsing.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "resform/experiment.hpp"
#include "resform/exits.hpp"
#include "resform/generators.hpp"

namespace py = pybind11;
using namespace resform;

PYBIND11_MODULE(resform, m) {
    m.doc() = "Resistance-form networks: metrics, volume envelopes, heat "
              "kernels, exit times, and certified kernel bounds";

    py::register_exception<Error>(m, "ResformError");

    py::class_<MeasuredNetwork>(m, "Network")
        .def_property_readonly("name", &MeasuredNetwork::name)
        .def("size", &MeasuredNetwork::size)
        .def("total_mass", &MeasuredNetwork::total_mass)
        .def("vertex_id", &MeasuredNetwork::vertex_id,
             py::return_value_policy::copy)
        .def("index_of", &MeasuredNetwork::index_of)
        .def("measure", &MeasuredNetwork::measure)
        .def("to_json", [](const MeasuredNetwork& n) {
            return network_to_json_text(n);
        });

    m.def("generate", [](const std::string& spec_json) {
        return generate_from_json(nlohmann::json::parse(spec_json));
    }, py::arg("spec_json"), "Build a network from a generator spec (JSON text)");
    m.def("load_network", &load_network, py::arg("path"));
    m.def("network_from_json", &network_from_json_text, py::arg("text"));
    m.def("save_network", &save_network, py::arg("network"), py::arg("path"));

    m.def("resistance_matrix", [](const MeasuredNetwork& net) {
        return resistance_metric(net).d;
    }, py::arg("network"), "All-pairs effective resistance matrix");

    m.def("volume_profile", [](const MeasuredNetwork& net) {
        ResistanceMetric met = resistance_metric(net);
        VolumeProfile p = volume_profile(net, met);
        py::dict d;
        d["radii"] = p.radii;
        d["volumes"] = p.volumes;
        d["env_inf"] = p.env_inf;
        d["env_sup"] = p.env_sup;
        d["median"] = p.median_vol;
        d["total_mass"] = p.total_mass;
        return d;
    }, py::arg("network"), "Ball-mass growth over the breakpoint radius grid");

    m.def("fit_model_json", [](const MeasuredNetwork& net,
                               const std::string& family) {
        ResistanceMetric met = resistance_metric(net);
        VolumeProfile p = volume_profile(net, met);
        return model_to_json_text(fit_model(p, family_from_name(family)));
    }, py::arg("network"), py::arg("family") = "auto",
       "Fit the volume model and return it as JSON text");

    m.def("derive_exponents_json", [](const std::string& model_json,
                                      const std::string& mode, double slack,
                                      const std::string& policy) {
        FluctuationModel model = model_from_json_text(model_json);
        BoundMode bm = mode == "offdiag" ? BoundMode::OffDiag : BoundMode::OnDiag;
        ExponentPolicy pol = policy == "reference" ? ExponentPolicy::Reference
                                                   : ExponentPolicy::Slack;
        return exponents_to_json_text(derive_exponents(model, bm, slack, pol));
    }, py::arg("model_json"), py::arg("mode") = "ondiag",
       py::arg("slack") = 0.05, py::arg("policy") = "slack");

    m.def("heat_kernel_matrix", [](const MeasuredNetwork& net, double t) {
        return heat_kernel_matrix(spectral_decompose(net), t);
    }, py::arg("network"), py::arg("t"));

    m.def("heat_kernel_diagonal", [](const MeasuredNetwork& net, double t) {
        return Eigen::VectorXd(heat_kernel_diagonal(spectral_decompose(net), t));
    }, py::arg("network"), py::arg("t"));

    m.def("expected_exit_time", [](const MeasuredNetwork& net, int center,
                                   double radius) {
        ResistanceMetric met = resistance_metric(net);
        ResistanceBall ball = resistance_ball(net, met, center, radius);
        return expected_exit_time(net, ball, center);
    }, py::arg("network"), py::arg("center"), py::arg("radius"),
       "Mean exit time from the open resistance ball B(center, radius)");

    m.def("run_experiment", [](const std::string& config_json) {
        RunResult r = run_experiment(ExperimentConfig::from_json_text(config_json));
        return py::make_tuple(r.exit_code,
                              r.reason.empty() ? r.summary.dump(2) : r.reason);
    }, py::arg("config_json"),
       "Run a full experiment; returns (exit_code, summary_or_reason)");

    m.def("emit_report", &emit_report, py::arg("bundle_dir"), py::arg("format"));
}
