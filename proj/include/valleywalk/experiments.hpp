#ifndef VALLEYWALK_EXPERIMENTS_HPP
#define VALLEYWALK_EXPERIMENTS_HPP

// Config-driven experiment runners tying the library together: limit-law
// verification, tail studies, the quenched oracle gate, and diagnostics.
// Every runner consumes an ExperimentConfig and returns a RunRecord whose
// per-replicate rows are keyed by replicate id, so summaries come out
// identical no matter how many workers executed the batch.

#include "valleywalk/env_model.hpp"
#include "valleywalk/stable.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace valleywalk {

using Json = nlohmann::json;

enum class ExperimentKind {
    LimitCheck,
    IglehartTail,
    ZTail,
    ValleyStats,
    OccupationTail,
    QuenchedGate,
    InterarrivalDiag,
    GoodEnv,
    Simulate,
    Constants,
};

std::string to_string(ExperimentKind kind);
ExperimentKind kind_from_string(const std::string& name);

// {"family":"beta","alpha":..,"beta":..} or {"family":"atoms","omega":[..],"prob":[..]}
EnvironmentModel model_from_json(const Json& desc);

struct ExperimentConfig {
    Json raw; // resolved config, embedded verbatim in every output
    EnvironmentModel model = EnvironmentModel::plumbing(BetaParams{3.0, 1.5});
    ExperimentKind kind = ExperimentKind::Simulate;

    std::uint64_t seed = 0; // mandatory in the file
    std::vector<std::int64_t> ns;
    std::size_t replicates = 0;
    std::uint64_t budget = 1000000000ull;
    unsigned workers = 1;
    bool fast = true;
    bool conditioned_left = false;

    std::size_t effort = 200000;    // constants / tail-study sample counts
    std::vector<double> ladder;     // t ladder (good-env) or n ladder overrides
    double c_log = 10.0;            // good-env: e1 <= c_log * log t
    double alpha_exp = 0.0;         // good-env alpha; 0 = midpoint of valid range
    double gamma = 1.0;             // valley pad exponent
    double tolerance = 1e-8;        // quenched gate
    std::string out_dir;            // empty = no files written
};

// Parse + validate. Unknown keys are rejected so typos fail loudly.
ExperimentConfig parse_config(const Json& file_json);
ExperimentConfig load_config(const std::string& path);

struct RunRecord {
    std::string kind;
    std::string digest; // hash of the resolved config
    Json config;
    Json summary;           // kind-specific scalars and small tables
    std::vector<Json> rows; // one per replicate, ascending replicate id
    std::size_t censored = 0;
    double wall_seconds = 0.0;
    bool gates_passed = true;
};

RunRecord run_limit_check(const ExperimentConfig& cfg);
RunRecord run_iglehart_tail(const ExperimentConfig& cfg);
RunRecord run_z_tail(const ExperimentConfig& cfg);
RunRecord run_valley_stats(const ExperimentConfig& cfg);
RunRecord run_occupation_tail(const ExperimentConfig& cfg);
RunRecord run_quenched_gate(const ExperimentConfig& cfg);
RunRecord run_interarrival_diag(const ExperimentConfig& cfg);
RunRecord run_good_env_diagnostic(const ExperimentConfig& cfg);
RunRecord run_simulate(const ExperimentConfig& cfg);
RunRecord run_constants(const ExperimentConfig& cfg);

// dispatch on cfg.kind
RunRecord run_experiment(const ExperimentConfig& cfg);

// <kind>_replicates.jsonl, <kind>_summary.csv, <kind>_run.json under out_dir
void write_outputs(const RunRecord& record, const std::string& out_dir);

} // namespace valleywalk

#endif
