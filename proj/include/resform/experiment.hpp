#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "resform/bounds.hpp"

namespace resform {

/// Declarative description of one experiment run: what to generate (or load),
/// how to window the analysis, which bound family to certify, and where the
/// bundle goes. Serializes round-trip losslessly (all fields always emitted)
/// and is embedded verbatim in every summary.
struct ExperimentConfig {
    nlohmann::ordered_json generator; // generator spec, or {"file": path}
    std::optional<double> r_min;      // analysis window overrides
    std::optional<double> r_max;
    std::string family = "auto";  // uniform | polynomial | logarithmic | auto
    std::string mode = "ondiag";  // ondiag | offdiag | local | fluct
    std::string policy = "slack"; // slack | reference
    double slack = 0.05;
    bool allow_clamp = true;  // clamp infeasible (b, eps) instead of failing
    std::string local_vertex; // vertex id for mode "local"; empty = first
    std::string out = "out";
    std::uint64_t seed = 1;

    static ExperimentConfig from_json(const nlohmann::ordered_json& j);
    static ExperimentConfig from_json_text(const std::string& text);
    nlohmann::ordered_json to_json() const;
    std::string to_json_text() const;
};

/// Outcome of a run. Exit codes: 0 all certificates hold and hypotheses pass,
/// 1 validation/other error, 2 infeasible exponents, 3 hypotheses not met,
/// 4 window too small, 5 a certified bound was violated.
struct RunResult {
    int exit_code = 0;
    std::string reason; // non-empty on error exits
    nlohmann::ordered_json summary;
    std::vector<Certificate> certificates;
    std::string out_dir;
};

/// Runs generate -> resistance metric -> volume profile -> model fit ->
/// exponents -> certificates for the configured mode, writing the bundle
/// (network.json, metric.csv at desk scale, profile.csv, model.json,
/// scaling.json, exponents.json, diag.csv, certificates/*.json, summary.json)
/// under config.out. With certify=false stops after the model fit ("analyze").
/// Errors are written to error.json as {code, reason} and returned, not
/// thrown. Bundles contain no timestamps: identical config means identical
/// bytes.
RunResult run_experiment(const ExperimentConfig& config, bool certify = true);

/// Re-emits a completed bundle: format "json" writes report.json combining
/// summary and certificates; format "csv" writes constants.csv and
/// verdicts.csv (flat tables keyed by bound_id, suitable for plotting).
void emit_report(const std::string& bundle_dir, const std::string& format);

} // namespace resform
