// Command-line front end. Every subcommand loads a JSON config, runs the
// matching experiment, prints the gate lines and the summary, and optionally
// writes the JSONL/CSV/JSON artifacts. Exit codes: 0 all gates passed,
// 2 at least one gate failed, 1 execution or config error.

#include "valleywalk/errors.hpp"
#include "valleywalk/experiments.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using valleywalk::ExperimentConfig;
using valleywalk::ExperimentKind;
using valleywalk::Json;
using valleywalk::RunRecord;

// "beta:3,1.5" or "atoms:0.8,0.9@0.5,0.5" (omegas@probs)
Json model_spec_from_flag(const std::string& flag) {
    const auto colon = flag.find(':');
    if (colon == std::string::npos) {
        throw valleywalk::ConfigError("--model: expected family:params, got '" + flag + "'");
    }
    const std::string family = flag.substr(0, colon);
    const std::string params = flag.substr(colon + 1);
    auto split = [](const std::string& s, char sep) {
        std::vector<double> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, sep)) out.push_back(std::stod(item));
        return out;
    };
    if (family == "beta") {
        const auto ab = split(params, ',');
        if (ab.size() != 2) throw valleywalk::ConfigError("--model beta: need alpha,beta");
        return Json{{"family", "beta"}, {"alpha", ab[0]}, {"beta", ab[1]}};
    }
    if (family == "atoms") {
        const auto at = params.find('@');
        if (at == std::string::npos) {
            throw valleywalk::ConfigError("--model atoms: need omegas@probs");
        }
        return Json{{"family", "atoms"},
                    {"omega", split(params.substr(0, at), ',')},
                    {"prob", split(params.substr(at + 1), ',')}};
    }
    throw valleywalk::ConfigError("--model: unknown family '" + family + "'");
}

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config_path, "JSON config file");
    if (config_required) opt->required();
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--workers", flags.workers, "override the worker count");
    cmd->add_option("--out", flags.out_dir, "directory for JSONL/CSV/JSON outputs");
}

Json read_config_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw valleywalk::ConfigError("cannot open config file '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& ex) {
        throw valleywalk::ConfigError(std::string("config parse: ") + ex.what());
    }
    return j;
}

int finish(const ExperimentConfig& cfg, const CommonFlags& flags) {
    const RunRecord record = run_experiment(cfg);
    if (record.summary.contains("gates")) {
        for (auto it = record.summary["gates"].begin(); it != record.summary["gates"].end();
             ++it) {
            std::cout << (it.value().get<bool>() ? "[PASS] " : "[FAIL] ") << it.key() << '\n';
        }
    }
    std::cout << record.summary.dump(2) << '\n';
    std::cout << "wall_seconds=" << record.wall_seconds << " censored=" << record.censored
              << " digest=" << record.digest << '\n';
    const std::string out = !flags.out_dir.empty()
                                ? flags.out_dir
                                : cfg.out_dir;
    if (!out.empty()) {
        write_outputs(record, out);
        std::cout << "outputs written to " << out << '\n';
    }
    return record.gates_passed ? 0 : 2;
}

ExperimentConfig config_for(const Json& base, const CommonFlags& flags,
                            std::initializer_list<ExperimentKind> accepted) {
    Json j = base;
    if (flags.seed) j["seed"] = *flags.seed;
    if (flags.workers) j["workers"] = *flags.workers;
    ExperimentConfig cfg = valleywalk::parse_config(j);
    bool ok = false;
    for (ExperimentKind k : accepted) ok = ok || cfg.kind == k;
    if (!ok) {
        throw valleywalk::ConfigError("config kind '" + valleywalk::to_string(cfg.kind) +
                                      "' does not belong to this subcommand");
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"transient random walks in random environment: simulation and exact computation"};
    app.require_subcommand(1);

    CommonFlags sim_flags;
    std::string sim_model;
    std::optional<std::int64_t> sim_n;
    std::optional<std::size_t> sim_replicates;
    std::optional<std::uint64_t> sim_budget;
    std::optional<bool> sim_fast;
    auto* sim = app.add_subcommand("simulate", "draw tau(n) replicates");
    add_common(sim, sim_flags, /*config_required=*/false);
    sim->add_option("--model", sim_model, "model spec, e.g. beta:3,1.5 or atoms:0.8@1.0");
    sim->add_option("--n", sim_n, "target site");
    sim->add_option("--replicates", sim_replicates, "replicate count");
    sim->add_option("--budget", sim_budget, "step budget per replicate");
    sim->add_flag("--fast,!--no-fast", sim_fast, "valley-accelerated sampling (default on)");

    CommonFlags valleys_flags;
    auto* valleys = app.add_subcommand("valleys", "valley counts and excursion tail studies");
    add_common(valleys, valleys_flags, true);

    CommonFlags const_flags;
    auto* constants = app.add_subcommand("constants", "limit constants with provenance");
    add_common(constants, const_flags, true);

    CommonFlags limit_flags;
    auto* limit = app.add_subcommand("limit-check", "normalized tau(n) against the stable law");
    add_common(limit, limit_flags, true);

    CommonFlags occ_flags;
    auto* occupation = app.add_subcommand("occupation-tail", "tau(e1) tail under the conditioned environment");
    add_common(occupation, occ_flags, true);

    CommonFlags gate_flags;
    auto* gate = app.add_subcommand("quenched-check", "formulas against the linear-system oracle");
    add_common(gate, gate_flags, true);

    CommonFlags good_flags;
    auto* good = app.add_subcommand("good-env", "good-environment event failure trends");
    add_common(good, good_flags, true);

    CommonFlags inter_flags;
    auto* inter = app.add_subcommand("interarrival", "small-excursion crossing-time spread");
    add_common(inter, inter_flags, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            Json j = sim_flags.config_path.empty() ? Json::object()
                                                   : read_config_json(sim_flags.config_path);
            j["kind"] = "simulate";
            if (!sim_model.empty()) j["model"] = model_spec_from_flag(sim_model);
            if (sim_n) j["n"] = *sim_n;
            if (sim_replicates) j["replicates"] = *sim_replicates;
            if (sim_budget) j["budget"] = *sim_budget;
            if (sim_fast) j["fast"] = *sim_fast;
            return finish(config_for(j, sim_flags, {ExperimentKind::Simulate}), sim_flags);
        }
        if (valleys->parsed()) {
            return finish(config_for(read_config_json(valleys_flags.config_path), valleys_flags,
                                     {ExperimentKind::ValleyStats, ExperimentKind::IglehartTail,
                                      ExperimentKind::ZTail}),
                          valleys_flags);
        }
        if (constants->parsed()) {
            return finish(config_for(read_config_json(const_flags.config_path), const_flags,
                                     {ExperimentKind::Constants}),
                          const_flags);
        }
        if (limit->parsed()) {
            return finish(config_for(read_config_json(limit_flags.config_path), limit_flags,
                                     {ExperimentKind::LimitCheck}),
                          limit_flags);
        }
        if (occupation->parsed()) {
            return finish(config_for(read_config_json(occ_flags.config_path), occ_flags,
                                     {ExperimentKind::OccupationTail}),
                          occ_flags);
        }
        if (gate->parsed()) {
            return finish(config_for(read_config_json(gate_flags.config_path), gate_flags,
                                     {ExperimentKind::QuenchedGate}),
                          gate_flags);
        }
        if (good->parsed()) {
            return finish(config_for(read_config_json(good_flags.config_path), good_flags,
                                     {ExperimentKind::GoodEnv}),
                          good_flags);
        }
        if (inter->parsed()) {
            return finish(config_for(read_config_json(inter_flags.config_path), inter_flags,
                                     {ExperimentKind::InterarrivalDiag}),
                          inter_flags);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    std::cerr << "error: no subcommand executed\n";
    return 1;
}
