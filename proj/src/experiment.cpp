#include "resform/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "resform/errors.hpp"
#include "resform/exits.hpp"
#include "resform/generators.hpp"

namespace resform {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
    if (!out) throw Error("write failed for " + p.string());
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

json certificate_json(const Certificate& c) {
    return json::parse(certificate_to_json_text(c));
}

/// Pulls the named constant/metric out of a certificate if present.
std::optional<double> pull(const Certificate& c, const std::string& key) {
    if (auto it = c.constants.find(key); it != c.constants.end())
        return it->second;
    if (auto it = c.metrics.find(key); it != c.metrics.end()) return it->second;
    return std::nullopt;
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("experiment config must be an object");
    static const std::set<std::string> known = {
        "generator", "r_min",       "r_max", "family", "mode", "policy",
        "slack",     "allow_clamp", "local_vertex",    "out",  "seed"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k))
            throw ValidationError("unknown experiment config field '" + k + "'");
    ExperimentConfig c;
    if (!j.contains("generator"))
        throw ValidationError("experiment config needs a 'generator' object");
    c.generator = j.at("generator");
    if (j.contains("r_min") && !j.at("r_min").is_null())
        c.r_min = j.at("r_min").get<double>();
    if (j.contains("r_max") && !j.at("r_max").is_null())
        c.r_max = j.at("r_max").get<double>();
    c.family = j.value("family", c.family);
    c.mode = j.value("mode", c.mode);
    c.policy = j.value("policy", c.policy);
    c.slack = j.value("slack", c.slack);
    c.allow_clamp = j.value("allow_clamp", c.allow_clamp);
    c.local_vertex = j.value("local_vertex", c.local_vertex);
    c.out = j.value("out", c.out);
    c.seed = j.value("seed", c.seed);
    if (c.mode != "ondiag" && c.mode != "offdiag" && c.mode != "local" &&
        c.mode != "fluct")
        throw ValidationError("mode must be ondiag|offdiag|local|fluct, got '" +
                              c.mode + "'");
    if (c.policy != "slack" && c.policy != "reference")
        throw ValidationError("policy must be slack|reference, got '" + c.policy +
                              "'");
    family_from_name(c.family); // validates
    return c;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

json ExperimentConfig::to_json() const {
    json j;
    j["generator"] = generator;
    j["r_min"] = r_min ? json(*r_min) : json(nullptr);
    j["r_max"] = r_max ? json(*r_max) : json(nullptr);
    j["family"] = family;
    j["mode"] = mode;
    j["policy"] = policy;
    j["slack"] = slack;
    j["allow_clamp"] = allow_clamp;
    j["local_vertex"] = local_vertex;
    j["out"] = out;
    j["seed"] = seed;
    return j;
}

std::string ExperimentConfig::to_json_text() const {
    return to_json().dump(2) + "\n";
}

RunResult run_experiment(const ExperimentConfig& config, bool certify) {
    RunResult result;
    result.out_dir = config.out;
    const fs::path out(config.out);

    auto fail = [&](int code, const std::string& reason) -> RunResult& {
        result.exit_code = code;
        result.reason = reason;
        json err;
        err["code"] = code;
        err["reason"] = reason;
        std::error_code ec;
        fs::create_directories(out, ec);
        if (!ec) write_text(out / "error.json", err.dump(2) + "\n");
        return result;
    };

    try {
        fs::create_directories(out);
        fs::create_directories(out / "certificates");
        // A reused output directory must not keep a stale failure marker;
        // every failure path below writes a fresh one.
        {
            std::error_code ec;
            fs::remove(out / "error.json", ec);
        }

        // Generator spec: inline generator JSON, or {"file": path} to load.
        json gspec = config.generator;
        MeasuredNetwork net = [&]() {
            if (gspec.is_object() && gspec.contains("file"))
                return load_network(gspec.at("file").get<std::string>());
            if (gspec.is_object() && !gspec.contains("seed") &&
                !(gspec.contains("params") &&
                  gspec.at("params").contains("seed")))
                gspec["seed"] = config.seed;
            return generate_from_json(gspec);
        }();
        save_network(net, (out / "network.json").string());

        ResistanceMetric metric = resistance_metric(net);
        if (net.size() <= 300)
            save_metric_csv(metric, net, (out / "metric.csv").string());

        VolumeProfile profile = volume_profile(net, metric);
        save_profile_csv(profile, net, (out / "profile.csv").string());

        FitOptions fopts;
        fopts.r_min_override = config.r_min;
        fopts.r_max_override = config.r_max;
        FluctuationModel model =
            fit_model(profile, family_from_name(config.family), fopts);
        write_text(out / "model.json", model_to_json_text(model));

        ScalingReport scaling = scaling_checks(model, config.slack);
        {
            json sj;
            sj["pass"] = scaling.pass;
            sj["violations"] = scaling.violations;
            sj["doubling_constant"] = scaling.doubling_constant;
            sj["anti_doubling_constant"] = scaling.anti_doubling_constant;
            sj["env_l_constant"] = scaling.env_l_constant;
            sj["env_g_constant"] = scaling.env_g_constant;
            sj["slope_fu"] = scaling.slope_fu;
            sj["slope_fl_inv"] = scaling.slope_fl_inv;
            sj["slope_g_inv"] = scaling.slope_g_inv;
            sj["concavity_ok"] = scaling.concavity_ok;
            sj["normalized_ok"] = scaling.normalized_ok;
            write_text(out / "scaling.json", sj.dump(2) + "\n");
        }

        json summary;
        summary["schema"] = "resform-bundle-v1";
        summary["network"] = {{"name", net.name()},
                              {"vertices", net.size()},
                              {"edges", static_cast<int>(net.edges().size())},
                              {"total_mass", net.total_mass()}};
        summary["config"] = config.to_json();
        summary["verdicts"] = json::object();
        // Ordered-json object storage is a vector: later insertions into
        // "metrics" relocate its children, so never hold references into it.
        summary["metrics"] = json::object();
        summary["metrics"]["slopes"] = json::object();
        summary["metrics"]["spreads"] = json::object();
        summary["metrics"]["slopes"]["alpha"] = model.alpha;
        summary["metrics"]["slopes"]["ondiag_prediction"] =
            -model.alpha / (1.0 + model.alpha);
        summary["metrics"]["spreads"]["envelope_rmin"] =
            model.V_u(model.r_min) / model.V_l(model.r_min);
        summary["scaling_pass"] = scaling.pass;

        if (!certify) {
            summary["analysis_only"] = true;
            result.summary = summary;
            write_text(out / "summary.json", summary.dump(2) + "\n");
            return result;
        }
        summary["analysis_only"] = false;

        BoundMode bmode = (config.mode == "offdiag") ? BoundMode::OffDiag
                                                     : BoundMode::OnDiag;
        ExponentPolicy pol = (config.policy == "reference")
                                 ? ExponentPolicy::Reference
                                 : ExponentPolicy::Slack;
        ExponentSet exps = derive_exponents(model, bmode, config.slack, pol,
                                            config.allow_clamp);
        write_text(out / "exponents.json", exponents_to_json_text(exps));

        SpectralDecomposition dec = spectral_decompose(net);
        ScaleFunctions scale = eval_scale(model);

        // Plot-ready diagonal decay curve.
        {
            std::ostringstream csv;
            csv << "t,p_min,p_median,p_max\n";
            for (double t : time_grid(scale)) {
                Eigen::VectorXd d = heat_kernel_diagonal(dec, t);
                std::vector<double> v(d.data(), d.data() + d.size());
                std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
                csv << fmt(t) << "," << fmt(d.minCoeff()) << ","
                    << fmt(v[v.size() / 2]) << "," << fmt(d.maxCoeff()) << "\n";
            }
            write_text(out / "diag.csv", csv.str());
        }

        if (config.mode == "ondiag") {
            result.certificates.push_back(certify_ondiag(dec, scale, exps));
            result.certificates.push_back(
                certify_exit_tail(net, metric, scale, exps));
            result.certificates.push_back(
                certify_neardiag(dec, metric, scale, exps));
        } else if (config.mode == "offdiag") {
            ChainingReport cc = probe_chaining(net, metric);
            summary["metrics"]["chaining"] = {
                {"worst_constant", cc.worst_constant},
                {"threshold", cc.threshold},
                {"pass", cc.pass},
                {"pairs_probed", cc.pairs_probed}};
            result.certificates.push_back(
                certify_offdiag(dec, metric, scale, exps, cc));
        } else if (config.mode == "fluct") {
            result.certificates.push_back(
                certify_fluctuations(dec, profile, scale, exps));
        } else { // local
            int x = config.local_vertex.empty()
                        ? 0
                        : net.index_of(config.local_vertex);
            result.certificates.push_back(
                certify_local(net, dec, metric, profile, x, scale));
        }

        for (const Certificate& c : result.certificates) {
            write_text(out / "certificates" / (c.bound_id + ".json"),
                       certificate_to_json_text(c));
            summary["verdicts"][c.bound_id] = c.verdict;
            json& slopes = summary["metrics"]["slopes"];
            json& spreads = summary["metrics"]["spreads"];
            if (auto v = pull(c, "slope_mid_decade"))
                slopes["ondiag_mid_decade"] = *v;
            if (auto v = pull(c, "spread")) spreads["ondiag"] = *v;
            if (auto v = pull(c, "sandwich_spread")) spreads["exit_sandwich"] = *v;
            if (auto v = pull(c, "separation_hi"))
                spreads["kernel_separation"] = *v;
            if (auto v = pull(c, "shape_correlation"))
                slopes["offdiag_shape_correlation"] = *v;
        }

        bool any_violated = false, any_hyp = false;
        for (const Certificate& c : result.certificates) {
            any_violated |= c.verdict == "violated";
            any_hyp |= c.verdict == "hypotheses_not_met";
        }
        result.exit_code = any_violated ? 5 : (any_hyp ? 3 : 0);
        if (result.exit_code != 0)
            result.reason = any_violated ? "a certified bound was violated"
                                         : "certificate hypotheses not met";
        summary["exit_code"] = result.exit_code;
        result.summary = summary;
        write_text(out / "summary.json", summary.dump(2) + "\n");
        if (result.exit_code != 0) {
            json err;
            err["code"] = result.exit_code;
            err["reason"] = result.reason;
            write_text(out / "error.json", err.dump(2) + "\n");
        }
        return result;
    } catch (const InfeasibleError& e) {
        return fail(2, e.what());
    } catch (const HypothesesError& e) {
        return fail(3, e.what());
    } catch (const WindowError& e) {
        return fail(4, e.what());
    } catch (const Error& e) {
        return fail(1, e.what());
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
}

void emit_report(const std::string& bundle_dir, const std::string& format) {
    const fs::path dir(bundle_dir);
    if (!fs::exists(dir / "summary.json"))
        throw ValidationError("no summary.json in '" + bundle_dir +
                              "': not a completed bundle");
    json summary = json::parse(read_text(dir / "summary.json"));

    std::vector<std::pair<std::string, json>> certs;
    if (fs::exists(dir / "certificates")) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir / "certificates"))
            if (entry.path().extension() == ".json")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files)
            certs.emplace_back(f.stem().string(), json::parse(read_text(f)));
    }

    if (format == "json") {
        json rep;
        rep["schema"] = "resform-report-v1";
        rep["summary"] = summary;
        rep["certificates"] = json::object();
        for (const auto& [id, c] : certs) rep["certificates"][id] = c;
        write_text(dir / "report.json", rep.dump(2) + "\n");
        return;
    }
    if (format == "csv") {
        // Non-finite values arrive as the strings "nan"/"inf"/"-inf"; emit
        // them bare so the tables stay uniformly parseable.
        auto cell = [](const json& v) -> std::string {
            if (v.is_number()) return fmt(v.get<double>());
            if (v.is_string()) return v.get<std::string>();
            return v.dump();
        };
        std::ostringstream con;
        con << "bound_id,name,value\n";
        for (const auto& [id, c] : certs) {
            for (const auto& [k, v] : c.at("constants").items())
                con << id << "," << k << "," << cell(v) << "\n";
            for (const auto& [k, v] : c.at("metrics").items())
                con << id << "," << k << "," << cell(v) << "\n";
        }
        write_text(dir / "constants.csv", con.str());

        std::ostringstream ver;
        ver << "bound_id,verdict,ratio_min,ratio_max\n";
        for (const auto& [id, c] : certs)
            ver << id << "," << c.at("verdict").get<std::string>() << ","
                << cell(c.at("ratio_min")) << "," << cell(c.at("ratio_max"))
                << "\n";
        write_text(dir / "verdicts.csv", ver.str());
        return;
    }
    throw ValidationError("report format must be json or csv, got '" + format +
                          "'");
}

} // namespace resform
