// Command-line front end: gen | analyze | certify | report.
// Config files win over flags on conflict (a warning goes to stderr), so a
// committed config is authoritative for reproduction.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "resform/errors.hpp"
#include "resform/experiment.hpp"
#include "resform/generators.hpp"

namespace {

using json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw resform::Error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int map_error(const std::exception& e) {
    if (dynamic_cast<const resform::InfeasibleError*>(&e)) return 2;
    if (dynamic_cast<const resform::HypothesesError*>(&e)) return 3;
    if (dynamic_cast<const resform::WindowError*>(&e)) return 4;
    return 1;
}

struct Flags {
    std::string config;
    std::string out;
    std::string mode;
    std::optional<std::uint64_t> seed;
};

/// Loads the experiment config and overlays flags on fields the file does not
/// set; when both set a field and disagree, the file wins with a warning.
resform::ExperimentConfig assemble(const Flags& f) {
    json raw = json::parse(read_file(f.config));
    resform::ExperimentConfig cfg = resform::ExperimentConfig::from_json(raw);
    auto overlay = [&](const char* key, auto&& apply, const std::string& shown) {
        if (raw.contains(key)) {
            std::cerr << "warning: config file sets '" << key
                      << "'; it wins over --" << key << "=" << shown << "\n";
        } else {
            apply();
        }
    };
    if (!f.out.empty())
        overlay("out", [&] { cfg.out = f.out; }, f.out);
    if (!f.mode.empty())
        overlay("mode", [&] { cfg.mode = f.mode; }, f.mode);
    if (f.seed)
        overlay("seed", [&] { cfg.seed = *f.seed; }, std::to_string(*f.seed));
    if (cfg.mode != "ondiag" && cfg.mode != "offdiag" && cfg.mode != "local" &&
        cfg.mode != "fluct")
        throw resform::ValidationError("mode must be ondiag|offdiag|local|fluct");
    return cfg;
}

int run_bundle(const Flags& f, bool certify) {
    resform::ExperimentConfig cfg = assemble(f);
    resform::RunResult r = resform::run_experiment(cfg, certify);
    if (r.exit_code != 0 && r.certificates.empty()) {
        std::cerr << "error (" << r.exit_code << "): " << r.reason << "\n";
        return r.exit_code;
    }
    for (const auto& c : r.certificates)
        std::cout << c.bound_id << ": " << c.verdict << "\n";
    if (r.summary.contains("metrics"))
        std::cout << "metrics: " << r.summary["metrics"].dump() << "\n";
    std::cout << "bundle written to " << r.out_dir << "\n";
    if (r.exit_code != 0)
        std::cerr << "exit code " << r.exit_code << ": " << r.reason << "\n";
    return r.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"resistance-form analysis: generate networks, fit volume "
                 "models, certify heat-kernel bounds"};
    app.require_subcommand(1);

    Flags f;
    std::string gen_out = "network.json";
    std::string bundle_dir, format = "json";

    CLI::App* gen = app.add_subcommand(
        "gen", "generate a network from a generator spec JSON file");
    gen->add_option("--config", f.config, "generator spec JSON file")->required();
    std::optional<std::uint64_t> gen_seed;
    gen->add_option("--seed", gen_seed, "seed when the spec does not set one");
    gen->add_option("--out", gen_out, "output network file");

    CLI::App* analyze = app.add_subcommand(
        "analyze", "metric, volume profile, and model fit (no certification)");
    CLI::App* certify = app.add_subcommand(
        "certify", "full pipeline: analyze plus bound certificates");
    for (CLI::App* sub : {analyze, certify}) {
        sub->add_option("--config", f.config, "experiment config JSON file")
            ->required();
        sub->add_option("--out", f.out, "output bundle directory");
        sub->add_option("--seed", f.seed, "generator seed");
    }
    certify->add_option("--mode", f.mode, "ondiag|offdiag|local|fluct");

    CLI::App* report = app.add_subcommand(
        "report", "re-emit a completed bundle as report.json or flat CSV");
    report->add_option("--bundle", bundle_dir, "bundle directory")->required();
    report->add_option("--format", format, "json|csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            json spec = json::parse(read_file(f.config));
            if (gen_seed) {
                bool has = spec.contains("seed") ||
                           (spec.contains("params") &&
                            spec.at("params").contains("seed"));
                if (has)
                    std::cerr << "warning: spec file sets a seed; it wins over "
                                 "--seed\n";
                else
                    spec["seed"] = *gen_seed;
            }
            resform::MeasuredNetwork net = resform::generate_from_json(spec);
            resform::save_network(net, gen_out);
            std::cout << "wrote network '" << net.name() << "' (" << net.size()
                      << " vertices, " << net.edges().size() << " edges) to "
                      << gen_out << "\n";
            return 0;
        }
        if (analyze->parsed()) return run_bundle(f, false);
        if (certify->parsed()) return run_bundle(f, true);
        if (report->parsed()) {
            resform::emit_report(bundle_dir, format);
            std::cout << "report (" << format << ") written under " << bundle_dir
                      << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return map_error(e);
    }
    return 1;
}
