#include "valleywalk/experiments.hpp"

#include "valleywalk/errors.hpp"
#include "valleywalk/potential.hpp"
#include "valleywalk/quenched.hpp"
#include "valleywalk/stats.hpp"
#include "valleywalk/valleys.hpp"
#include "valleywalk/walker.hpp"
#include "valleywalk/window_oracle.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

namespace valleywalk {

namespace {

// JSONL rows kept per run; summaries always digest every replicate. Ten
// million occupation samples would otherwise pin gigabytes of parsed JSON.
constexpr std::size_t kRowCap = std::size_t{1} << 20;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// FNV-1a over the canonical dump; enough to tie outputs to their config
std::string digest_of(const Json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Runs body(0..count-1), each id exactly once, across `workers` threads.
// Replicate ids are the only coupling to the schedule, so results land in
// the same slots no matter how the pool interleaves.
void for_each_replicate(std::size_t count, unsigned workers,
                        const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    unsigned use = std::max(1u, workers);
    if (static_cast<std::size_t>(use) > count) use = static_cast<unsigned>(count);
    if (use == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mx;
    std::exception_ptr first_error;
    auto drain = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mx);
                if (!first_error) first_error = std::current_exception();
                next.store(count); // stop handing out work
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(use - 1);
    for (unsigned w = 0; w + 1 < use; ++w) pool.emplace_back(drain);
    drain();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

RunRecord make_record(const ExperimentConfig& cfg) {
    RunRecord rec;
    rec.kind = to_string(cfg.kind);
    rec.config = cfg.raw;
    rec.digest = digest_of(cfg.raw);
    rec.summary = Json::object();
    return rec;
}

void set_gate(RunRecord& rec, const std::string& name, bool ok) {
    rec.summary["gates"][name] = ok;
    if (!ok) rec.gates_passed = false;
}

Json law_json(const StableLaw& law) {
    return Json{{"index", law.index},
                {"form", law.form == StableLaw::Form::CA1 ? "ca1" : "ca"},
                {"scale", law.scale},
                {"shift", law.shift}};
}

Json estimate_json(const Estimate& est) {
    const char* prov = est.prov == Provenance::ClosedForm  ? "closed_form"
                       : est.prov == Provenance::Hybrid    ? "hybrid"
                                                           : "monte_carlo";
    return Json{{"value", est.value}, {"se", est.se}, {"provenance", prov}};
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
}

// survival count #{x in sorted : x >= t}
std::size_t count_at_least(const std::vector<double>& sorted, double t) {
    return static_cast<std::size_t>(sorted.end() -
                                    std::lower_bound(sorted.begin(), sorted.end(), t));
}

struct PlateauStudy {
    std::vector<double> t;
    std::vector<double> value; // t^kappa * survival(t)
    double mean = 0.0;
    double max_rel_dev = 0.0; // max |value/mean - 1|
    bool usable = false;
};

// t^kappa P(X >= t) on a log-spaced grid across the top decade, placed so the
// smallest retained exceedance count is still min_exceed. On large runs the
// floor grows with the sample: a fixed 50-count top point carries 14% relative
// noise forever, which a +-20% flatness gate cannot tolerate.
PlateauStudy plateau_study(const std::vector<double>& sorted, double kappa,
                           std::size_t min_exceed, std::size_t extra_total = 0) {
    PlateauStudy out;
    const std::size_t n = sorted.size();
    min_exceed = std::max(min_exceed, n / 5000);
    if (n < 4 * min_exceed) return out;
    const double total = static_cast<double>(n + extra_total);
    const double t_max = sorted[n - min_exceed];
    const double t_min = t_max / 10.0;
    if (!(t_min > 0.0) || !(t_max > t_min)) return out;
    const auto lg = linspace(std::log(t_min), std::log(t_max), 13);
    MeanVar mv;
    for (double lt : lg) {
        const double t = std::exp(lt);
        const double surv =
            (static_cast<double>(count_at_least(sorted, t)) + static_cast<double>(extra_total)) /
            total;
        if (surv <= 0.0) continue;
        out.t.push_back(t);
        out.value.push_back(std::pow(t, kappa) * surv);
        mv.add(out.value.back());
    }
    if (out.value.size() < 5) return out;
    out.mean = mv.mean;
    for (double v : out.value) {
        out.max_rel_dev = std::max(out.max_rel_dev, std::fabs(v / out.mean - 1.0));
    }
    out.usable = true;
    return out;
}

double rel_err(double got, double want, double scale) {
    const double denom = std::max({std::fabs(want), 1e-12 * scale, 1e-300});
    return std::fabs(got - want) / denom;
}

// resolve against the heights attained: largest rise (and fall) over the path
double max_rise(const std::vector<double>& v, std::size_t from, std::size_t to) {
    double run_min = v[from];
    double rise = 0.0;
    for (std::size_t y = from; y <= to; ++y) {
        run_min = std::min(run_min, v[y]);
        rise = std::max(rise, v[y] - run_min);
    }
    return rise;
}

double max_fall(const std::vector<double>& v, std::size_t from, std::size_t to) {
    double run_max = v[from];
    double fall = 0.0;
    for (std::size_t y = from; y <= to; ++y) {
        run_max = std::max(run_max, v[y]);
        fall = std::max(fall, run_max - v[y]);
    }
    return fall;
}

void flatten_into(const Json& j, const std::string& prefix,
                  std::vector<std::pair<std::string, std::string>>& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            flatten_into(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            flatten_into(j[i], prefix + "[" + std::to_string(i) + "]", out);
        }
    } else {
        out.emplace_back(prefix, j.dump());
    }
}

} // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::LimitCheck: return "limit_check";
        case ExperimentKind::IglehartTail: return "iglehart_tail";
        case ExperimentKind::ZTail: return "z_tail";
        case ExperimentKind::ValleyStats: return "valley_stats";
        case ExperimentKind::OccupationTail: return "occupation_tail";
        case ExperimentKind::QuenchedGate: return "quenched_gate";
        case ExperimentKind::InterarrivalDiag: return "interarrival_diag";
        case ExperimentKind::GoodEnv: return "good_env";
        case ExperimentKind::Simulate: return "simulate";
        case ExperimentKind::Constants: return "constants";
    }
    throw std::logic_error("to_string: bad ExperimentKind");
}

ExperimentKind kind_from_string(const std::string& name) {
    if (name == "limit_check") return ExperimentKind::LimitCheck;
    if (name == "iglehart_tail") return ExperimentKind::IglehartTail;
    if (name == "z_tail") return ExperimentKind::ZTail;
    if (name == "valley_stats") return ExperimentKind::ValleyStats;
    if (name == "occupation_tail") return ExperimentKind::OccupationTail;
    if (name == "quenched_gate") return ExperimentKind::QuenchedGate;
    if (name == "interarrival_diag") return ExperimentKind::InterarrivalDiag;
    if (name == "good_env") return ExperimentKind::GoodEnv;
    if (name == "simulate") return ExperimentKind::Simulate;
    if (name == "constants") return ExperimentKind::Constants;
    throw ConfigError("unknown experiment kind '" + name + "'");
}

EnvironmentModel model_from_json(const Json& desc) {
    if (!desc.is_object() || !desc.contains("family")) {
        throw ConfigError("model: need an object with a family field");
    }
    const std::string fam = desc.at("family").get<std::string>();
    try {
        if (fam == "beta") {
            return EnvironmentModel::create(
                BetaParams{desc.at("alpha").get<double>(), desc.at("beta").get<double>()});
        }
        if (fam == "atoms") {
            DiscreteAtoms atoms;
            atoms.omega = desc.at("omega").get<std::vector<double>>();
            atoms.prob = desc.at("prob").get<std::vector<double>>();
            return EnvironmentModel::create(std::move(atoms));
        }
    } catch (const Json::exception& ex) {
        throw ConfigError(std::string("model: ") + ex.what());
    }
    throw ConfigError("model: unknown family '" + fam + "'");
}

ExperimentConfig parse_config(const Json& file_json) {
    if (!file_json.is_object()) throw ConfigError("config root must be an object");
    static const char* allowed[] = {"model",  "kind",   "seed",   "n",     "replicates", "budget",
                                    "workers", "fast",  "left_mode", "effort", "ladder",
                                    "c_log",  "alpha",  "gamma",  "tolerance", "out"};
    for (auto it = file_json.begin(); it != file_json.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) known = known || it.key() == key;
        if (!known) throw ConfigError("config: unknown key '" + it.key() + "'");
    }

    ExperimentConfig cfg;
    if (!file_json.contains("seed")) throw ConfigError("config: seed is mandatory");
    if (!file_json.contains("kind")) throw ConfigError("config: kind is mandatory");
    if (!file_json.contains("model")) throw ConfigError("config: model is mandatory");
    try {
        cfg.seed = file_json.at("seed").get<std::uint64_t>();
        cfg.kind = kind_from_string(file_json.at("kind").get<std::string>());
        cfg.model = model_from_json(file_json.at("model"));
        if (file_json.contains("n")) {
            if (file_json.at("n").is_array()) {
                cfg.ns = file_json.at("n").get<std::vector<std::int64_t>>();
            } else {
                cfg.ns = {file_json.at("n").get<std::int64_t>()};
            }
        }
        cfg.replicates = file_json.value("replicates", std::size_t{0});
        cfg.budget = file_json.value("budget", cfg.budget);
        cfg.workers = file_json.value("workers", cfg.workers);
        cfg.fast = file_json.value("fast", cfg.fast);
        if (file_json.contains("left_mode")) {
            const std::string mode = file_json.at("left_mode").get<std::string>();
            if (mode == "conditioned") {
                cfg.conditioned_left = true;
            } else if (mode != "iid") {
                throw ConfigError("config: left_mode must be 'iid' or 'conditioned'");
            }
        }
        cfg.effort = file_json.value("effort", cfg.effort);
        if (file_json.contains("ladder")) {
            cfg.ladder = file_json.at("ladder").get<std::vector<double>>();
        }
        cfg.c_log = file_json.value("c_log", cfg.c_log);
        cfg.alpha_exp = file_json.value("alpha", cfg.alpha_exp);
        cfg.gamma = file_json.value("gamma", cfg.gamma);
        cfg.tolerance = file_json.value("tolerance", cfg.tolerance);
        cfg.out_dir = file_json.value("out", std::string{});
    } catch (const Json::exception& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }

    for (std::int64_t n : cfg.ns) {
        if (n < 1) throw ConfigError("config: n entries must be positive");
    }
    if (cfg.workers == 0) throw ConfigError("config: workers must be at least 1");
    if (cfg.budget == 0) throw ConfigError("config: budget must be positive");

    if (cfg.kind != ExperimentKind::Constants && cfg.replicates == 0) {
        throw ConfigError("config: replicates must be at least 1");
    }
    const bool needs_n = cfg.kind == ExperimentKind::LimitCheck ||
                         cfg.kind == ExperimentKind::Simulate ||
                         cfg.kind == ExperimentKind::ValleyStats ||
                         cfg.kind == ExperimentKind::InterarrivalDiag;
    if (needs_n && cfg.ns.empty()) throw ConfigError("config: this experiment kind needs n");
    if (cfg.kind == ExperimentKind::GoodEnv) {
        if (cfg.ladder.empty()) throw ConfigError("config: good_env needs a nonempty t ladder");
        for (std::size_t i = 0; i < cfg.ladder.size(); ++i) {
            if (cfg.ladder[i] < 3.0) throw ConfigError("config: ladder entries must be >= 3");
            if (i > 0 && cfg.ladder[i] <= cfg.ladder[i - 1]) {
                throw ConfigError("config: ladder must be strictly increasing");
            }
        }
    }
    if (cfg.kind == ExperimentKind::InterarrivalDiag) {
        if (cfg.model.kappa() < 1.0) {
            throw ConfigError("config: interarrival diagnostic needs kappa >= 1");
        }
    }

    // resolved config: defaults made explicit so outputs are self-describing
    Json resolved = file_json;
    resolved["kind"] = to_string(cfg.kind);
    resolved["replicates"] = cfg.replicates;
    resolved["budget"] = cfg.budget;
    resolved["workers"] = cfg.workers;
    resolved["fast"] = cfg.fast;
    resolved["left_mode"] = cfg.conditioned_left ? "conditioned" : "iid";
    resolved["effort"] = cfg.effort;
    resolved["n"] = cfg.ns;
    cfg.raw = std::move(resolved);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& ex) {
        throw ConfigError("config '" + path + "': " + ex.what());
    }
    return parse_config(j);
}

RunRecord run_simulate(const ExperimentConfig& cfg) {
    const double t0 = now_seconds();
    RunRecord rec = make_record(cfg);
    const std::int64_t n = cfg.ns.front();
    const std::size_t count = cfg.replicates;
    const auto mode = cfg.conditioned_left ? RealizedEnvironment::LeftMode::ConditionedNonneg
                                           : RealizedEnvironment::LeftMode::Iid;

    struct Slot {
        std::uint64_t tau = 0;
        std::uint64_t windows = 0;
        std::uint64_t failures = 0;
        std::int64_t min_pos = 0;
        bool truncated = false;
        double wall_ms = 0.0;
    };
    std::vector<Slot> slots(count);
    for_each_replicate(count, cfg.workers, [&](std::size_t r) {
        const double r0 = now_seconds();
        RealizedEnvironment env(cfg.model, cfg.seed, r, mode);
        Rng rng = make_stream(cfg.seed, StreamPurpose::Walk, r);
        const TauRunResult res = cfg.fast ? sample_tau_fast(env, n, cfg.budget, rng)
                                          : sample_tau_direct(env, n, cfg.budget, rng);
        slots[r] = {res.tau,         res.windows, res.failures,
                    res.min_position, res.truncated, (now_seconds() - r0) * 1e3};
    });

    std::vector<double> taus;
    taus.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        const Slot& s = slots[r];
        if (s.truncated) {
            ++rec.censored;
        } else {
            taus.push_back(static_cast<double>(s.tau));
        }
        if (r < kRowCap) {
            // wall_ms is the one nondeterministic field; reproducibility
            // comparisons key on everything else
            rec.rows.push_back(Json{{"id", r},
                                    {"n", n},
                                    {"tau", s.tau},
                                    {"truncated", s.truncated},
                                    {"windows", s.windows},
                                    {"failures", s.failures},
                                    {"min_position", s.min_pos},
                                    {"wall_ms", s.wall_ms}});
        }
    }
    std::sort(taus.begin(), taus.end());
    rec.summary["n"] = n;
    rec.summary["replicates"] = count;
    rec.summary["censored"] = rec.censored;
    rec.summary["fast"] = cfg.fast;
    if (!taus.empty()) {
        MeanVar mv;
        for (double t : taus) mv.add(t);
        rec.summary["tau_mean"] = mv.mean;
        rec.summary["tau_mean_se"] = mv.std_error();
        rec.summary["tau_median"] = quantile_sorted(taus, 0.5);
        rec.summary["tau_q90"] = quantile_sorted(taus, 0.9);
        rec.summary["tau_max"] = taus.back();
    }
    rec.wall_seconds = now_seconds() - t0;
    return rec;
}

RunRecord run_limit_check(const ExperimentConfig& cfg) {
    const double t0 = now_seconds();
    RunRecord rec = make_record(cfg);
    const double kappa = cfg.model.kappa();
    const LimitConstants constants =
        compute_constants(cfg.model, std::max<std::size_t>(cfg.effort, 100000), cfg.seed);

    const std::size_t per_n = cfg.replicates;
    const std::size_t total = cfg.ns.size() * per_n;
    struct Slot {
        std::uint64_t tau = 0;
        bool truncated = false;
    };
    std::vector<Slot> slots(total);
    for_each_replicate(total, cfg.workers, [&](std::size_t idx) {
        const std::int64_t n = cfg.ns[idx / per_n];
        RealizedEnvironment env(cfg.model, cfg.seed, idx, RealizedEnvironment::LeftMode::Iid);
        Rng rng = make_stream(cfg.seed, StreamPurpose::Walk, idx);
        const TauRunResult res = cfg.fast ? sample_tau_fast(env, n, cfg.budget, rng)
                                          : sample_tau_direct(env, n, cfg.budget, rng);
        slots[idx] = {res.tau, res.truncated};
    });
    for (std::size_t idx = 0; idx < total; ++idx) {
        if (slots[idx].truncated) ++rec.censored;
        if (idx < kRowCap) {
            rec.rows.push_back(Json{{"id", idx},
                                    {"n", cfg.ns[idx / per_n]},
                                    {"tau", slots[idx].tau},
                                    {"truncated", slots[idx].truncated}});
        }
    }

    const auto t_grid = linspace(-2.0, 2.0, 41);
    const bool kappa_is_one = std::fabs(kappa - 1.0) <= 1e-9;
    Json per_n_summary = Json::array();
    double last_cf = pos_inf;
    double last_ratio_dev = pos_inf;
    bool last_experimental = false;

    for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
        const std::int64_t n = cfg.ns[i];
        const TheoremPrediction pred = theorem_prediction(constants, n);
        std::vector<double> xs;
        std::vector<double> taus;
        xs.reserve(per_n);
        for (std::size_t r = 0; r < per_n; ++r) {
            const Slot& s = slots[i * per_n + r];
            if (s.truncated) continue;
            const double tau = static_cast<double>(s.tau);
            taus.push_back(tau);
            xs.push_back((tau - pred.centering) / pred.normalization);
        }
        Json block{{"n", n},
                   {"kept", xs.size()},
                   {"experimental", pred.experimental},
                   {"centering", pred.centering},
                   {"normalization", pred.normalization},
                   {"law", law_json(pred.law)}};
        if (xs.size() >= 10) {
            const double cf = cf_distance(xs, pred.law, t_grid);
            block["cf_distance"] = cf;
            block["cf_null_band"] = 4.0 / std::sqrt(static_cast<double>(xs.size()));
            block["ks_distance"] = ks_one_sample(
                xs, [&](double y) { return stable_cdf(pred.law, y); });
            last_cf = cf;
            last_experimental = pred.experimental;
        }
        if (kappa_is_one && !taus.empty()) {
            const double denom = static_cast<double>(n) * std::log(static_cast<double>(n));
            const double ratio = median(taus) / denom;
            const double target = 2.0 / cfg.model.rho_log_at_kappa();
            block["ratio_n_log_n"] = ratio;
            block["ratio_target_quadrature"] = target;
            block["ratio_rel_dev"] = std::fabs(ratio / target - 1.0);
            last_ratio_dev = std::fabs(ratio / target - 1.0);
            if (cfg.model.is_beta()) {
                // closed form printed for reference; it disagrees with the
                // quadrature value for E[rho log rho] and is not asserted
                const double b = cfg.model.beta_params().beta;
                const double closed = boost::math::beta(b, b) / (2.0 * b);
                block["alt_closed_form_rho_log"] = closed;
                block["alt_closed_form_ratio_target"] = 2.0 / closed;
            }
        }
        per_n_summary.push_back(std::move(block));
    }

    rec.summary["kappa"] = kappa;
    rec.summary["per_n"] = per_n_summary;
    rec.summary["censored"] = rec.censored;
    rec.summary["constants"] = Json{{"c_k", estimate_json(constants.c_k)},
                                    {"c_u", estimate_json(constants.c_u)},
                                    {"c_t", estimate_json(constants.c_t)},
                                    {"c_i", estimate_json(constants.c_i)},
                                    {"v", constants.v},
                                    {"theorem_scale", constants.theorem_scale},
                                    {"centering", constants.centering_desc}};

    // gates pin the shipped tolerances at the largest n of the ladder
    if (kappa_is_one) {
        set_gate(rec, "ratio_within_30pct", last_ratio_dev <= 0.30);
    } else if (kappa > 1.0 && !last_experimental) {
        set_gate(rec, "cf_distance_below_0.1", last_cf < 0.1);
    } else {
        rec.summary["note"] = "kappa < 1 predictions are experimental; no gate applied";
    }
    rec.wall_seconds = now_seconds() - t0;
    return rec;
}

RunRecord run_iglehart_tail(const ExperimentConfig& cfg) {
    const double t0 = now_seconds();
    RunRecord rec = make_record(cfg);
    const double kappa = cfg.model.kappa();
    const std::size_t total = std::max<std::size_t>(cfg.effort, 1000);
    const std::size_t batches = cfg.replicates;

    std::vector<double> grid;
    if (!cfg.ladder.empty()) {
        grid = cfg.ladder;
    } else {
        const double h_max =
            std::max(2.0, std::log(static_cast<double>(total) / 100.0) / kappa);
        for (double h = 1.0; h <= h_max + 1e-9; h += 0.25) grid.push_back(h);
    }
    const std::size_t gsz = grid.size();

    // hist[b] counts excursions whose height exceeds exactly the first b
    // grid levels; exceedance counts come back as suffix sums
    std::vector<std::vector<std::uint64_t>> hist(batches,
                                                 std::vector<std::uint64_t>(gsz + 1, 0));
    std::vector<std::uint64_t> lengths(batches, 0);
    for_each_replicate(batches, cfg.workers, [&](std::size_t r) {
        Rng rng = make_stream(cfg.seed, StreamPurpose::Excursions, r);
        const std::size_t mine = total / batches + (r < total % batches ? 1 : 0);
        Excursion exc;
        std::uint64_t len_sum = 0;
        for (std::size_t k = 0; k < mine; ++k) {
            sample_excursion_into(cfg.model, rng, exc);
            const std::size_t b = static_cast<std::size_t>(
                std::lower_bound(grid.begin(), grid.end(), exc.height) - grid.begin());
            ++hist[r][b];
            len_sum += static_cast<std::uint64_t>(exc.length());
        }
        lengths[r] = len_sum;
    });

    std::vector<std::uint64_t> exceed(gsz, 0);
    std::uint64_t len_total = 0;
    for (std::size_t r = 0; r < batches; ++r) {
        std::uint64_t running = 0;
        for (std::size_t b = gsz + 1; b-- > 1;) {
            running += hist[r][b];
            exceed[b - 1] += running;
        }
        len_total += lengths[r];
        if (r < kRowCap) {
            rec.rows.push_back(Json{{"id", r},
                                    {"count", total / batches + (r < total % batches ? 1 : 0)},
                                    {"hist", hist[r]},
                                    {"length_sum", lengths[r]}});
        }
    }

    // fit only resolved, genuinely-tail points: 100+ hits and survival < 0.1
    std::vector<double> fit_h, fit_logp, survival(gsz, 0.0);
    for (std::size_t j = 0; j < gsz; ++j) {
        survival[j] = static_cast<double>(exceed[j]) / static_cast<double>(total);
        if (exceed[j] >= 100 && survival[j] < 0.1) {
            fit_h.push_back(grid[j]);
            fit_logp.push_back(std::log(survival[j]));
        }
    }
    rec.summary["kappa"] = kappa;
    rec.summary["excursions"] = total;
    rec.summary["grid"] = grid;
    rec.summary["survival"] = survival;
    rec.summary["e1_mean"] = static_cast<double>(len_total) / static_cast<double>(total);
    if (fit_h.size() >= 3) {
        const double slope = ls_slope(fit_h, fit_logp);
        rec.summary["slope"] = slope;
        rec.summary["fit_points"] = fit_h.size();
        // plateau estimate of the tail prefactor over the same range
        MeanVar ci;
        for (std::size_t k = 0; k < fit_h.size(); ++k) {
            ci.add(std::exp(fit_logp[k] + kappa * fit_h[k]));
        }
        rec.summary["c_i_plateau"] = ci.mean;
        set_gate(rec, "slope_minus_kappa_within_0.1", std::fabs(slope + kappa) <= 0.1);
    } else {
        rec.summary["fit_points"] = fit_h.size();
        set_gate(rec, "slope_minus_kappa_within_0.1", false);
    }
    rec.wall_seconds = now_seconds() - t0;
    return rec;
}

RunRecord run_z_tail(const ExperimentConfig& cfg) {
    const double t0 = now_seconds();
    RunRecord rec = make_record(cfg);
    const double kappa = cfg.model.kappa();
    const std::size_t count = cfg.replicates;

    struct Slot {
        double log_z = 0.0;
        double height = 0.0;
        std::int64_t e1 = 0;
        bool certified = false;
    };
    std::vector<Slot> slots(count);
    for_each_replicate(count, cfg.workers, [&](std::size_t r) {
        ConditionedLeftEnv left(cfg.model,
                                Rng(derive_key(cfg.seed, StreamPurpose::LeftEnvironment, r)));
        try {
            left.extend_until_certified(1e-12);
        } catch (const WindowTooSmall&) {
            // keep the window it managed to build; the record carries the flag
        }
        Rng rng = make_stream(cfg.seed, StreamPurpose::Excursions, r);
        const Excursion exc = sample_excursion(cfg.model, rng);
        ConditionedLeftPath snap = left.snapshot();
        std::vector<double> omegas = std::move(snap.path.omega);
        omegas.insert(omegas.end(), exc.omega.begin(), exc.omega.end());
        const PotentialPath path = potential_from_omegas(snap.path.left, std::move(omegas));
        const ExcursionRecord fr =
            excursion_functionals(path, 0, exc.length(), LeftTailPolicy::WindowOnly);
        slots[r] = {fr.log_z, fr.height, exc.length(), fr.left_certified};
    });

    std::vector<double> zs;
    zs.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        const Slot& s = slots[r];
        if (s.certified) {
            zs.push_back(std::exp(s.log_z));
        } else {
            ++rec.censored;
        }
        if (r < kRowCap) {
            rec.rows.push_back(Json{{"id", r},
                                    {"log_z", s.log_z},
                                    {"height", s.height},
                                    {"e1", s.e1},
                                    {"certified", s.certified}});
        }
    }
    std::sort(zs.begin(), zs.end());

    const LimitConstants constants =
        compute_constants(cfg.model, std::max<std::size_t>(cfg.effort, 100000), cfg.seed);
    const PlateauStudy study = plateau_study(zs, kappa, 50);
    rec.summary["kappa"] = kappa;
    rec.summary["replicates"] = count;
    rec.summary["censored"] = rec.censored;
    rec.summary["c_u"] = estimate_json(constants.c_u);
    if (study.usable) {
        rec.summary["grid"] = study.t;
        rec.summary["plateau"] = study.value;
        rec.summary["plateau_mean"] = study.mean;
        rec.summary["plateau_max_rel_dev"] = study.max_rel_dev;
        rec.summary["plateau_over_c_u"] = study.mean / constants.c_u.value;
        set_gate(rec, "plateau_flat_within_20pct", study.max_rel_dev <= 0.20);
        set_gate(rec, "plateau_within_25pct_of_c_u",
                 std::fabs(study.mean / constants.c_u.value - 1.0) <= 0.25);
    } else {
        set_gate(rec, "plateau_flat_within_20pct", false);
        set_gate(rec, "plateau_within_25pct_of_c_u", false);
    }
    rec.wall_seconds = now_seconds() - t0;
    return rec;
}

RunRecord run_valley_stats(const ExperimentConfig& cfg) {
    const double t0 = now_seconds();
    RunRecord rec = make_record(cfg);
    const double kappa = cfg.model.kappa();
    const std::int64_t n = cfg.ns.front();
    const std::size_t count = cfg.replicates;

    Rng drift_rng = make_stream(cfg.seed, StreamPurpose::Constants, 101);
    const double drift = estimate_drift_per_excursion(
        cfg.model, std::max<std::size_t>(cfg.effort, 10000), drift_rng);
    const ValleyParams params{kappa, cfg.gamma, drift};
    const double h_n = critical_height(n, kappa);

    // independent estimate of q_n = P(H >= h_n), never touched by the
    // replicate streams
    const std::size_t q_batch = std::max<std::size_t>(cfg.effort, 100000);
    double q_ind = 0.0;
    {
        Rng rng = make_stream(cfg.seed, StreamPurpose::Constants, 202);
        Excursion exc;
        std::size_t hits = 0;
        for (std::size_t k = 0; k < q_batch; ++k) {
            sample_excursion_into(cfg.model, rng, exc);
            if (exc.height >= h_n) ++hits;
        }
        q_ind = static_cast<double>(hits) / static_cast<double>(q_batch);
    }
    const double q_se = std::sqrt(std::max(q_ind * (1.0 - q_ind), 0.0) /
                                  static_cast<double>(q_batch));

    struct Slot {
        std::int64_t k_n = 0;
        double q_hat = 0.0;
        bool no_event = false;
    };
    std::vector<Slot> slots(count);
    for_each_replicate(count, cfg.workers, [&](std::size_t r) {
        Rng rng = make_stream(cfg.seed, StreamPurpose::Excursions, r);
        std::vector<ExcursionRecord> records(static_cast<std::size_t>(n));
        Excursion exc;
        std::int64_t epoch = 0;
        for (auto& record : records) {
            sample_excursion_into(cfg.model, rng, exc);
            record.start = epoch;
            record.end = epoch + exc.length();
            record.height = exc.height;
            record.t_h = epoch + exc.t_h;
            epoch = record.end;
        }
        const ValleyDecomposition dec = decompose(records, n, params);
        slots[r] = {dec.k_n, dec.q_n_hat, dec.no_event};
    });

    MeanVar k_stats;
    std::size_t no_count = 0;
    for (std::size_t r = 0; r < count; ++r) {
        const Slot& s = slots[r];
        k_stats.add(static_cast<double>(s.k_n));
        if (s.no_event) ++no_count;
        if (r < kRowCap) {
            rec.rows.push_back(Json{{"id", r},
                                    {"k_n", s.k_n},
                                    {"q_hat", s.q_hat},
                                    {"no_event", s.no_event}});
        }
    }
    const double expected = static_cast<double>(n) * q_ind;
    const double ratio = expected > 0.0 ? k_stats.mean / expected : pos_inf;
    double ratio_se = 0.0;
    if (expected > 0.0 && k_stats.mean > 0.0) {
        ratio_se = ratio * std::sqrt(std::pow(k_stats.std_error() / k_stats.mean, 2) +
                                     std::pow(q_se / q_ind, 2));
    }
    const double no_freq = static_cast<double>(no_count) / static_cast<double>(count);

    rec.summary["n"] = n;
    rec.summary["h_n"] = h_n;
    rec.summary["drift_per_excursion"] = drift;
    rec.summary["q_independent"] = q_ind;
    rec.summary["q_independent_se"] = q_se;
    rec.summary["k_n_mean"] = k_stats.mean;
    rec.summary["k_n_mean_se"] = k_stats.std_error();
    rec.summary["ratio_k_over_nq"] = ratio;
    rec.summary["ratio_se"] = ratio_se;
    rec.summary["no_event_frequency"] = no_freq;
    set_gate(rec, "ratio_in_0.9_1.1", ratio >= 0.9 && ratio <= 1.1);
    set_gate(rec, "no_event_at_least_0.95", no_freq >= 0.95);
    rec.wall_seconds = now_seconds() - t0;
    return rec;
}

RunRecord run_occupation_tail(const ExperimentConfig& cfg) {
    const double t0 = now_seconds();
    RunRecord rec = make_record(cfg);
    const double kappa = cfg.model.kappa();
    const std::size_t count = cfg.replicates;

    struct Slot {
        std::uint64_t tau = 0;
        std::int64_t e1 = 0;
        bool truncated = false;
    };
    std::vector<Slot> slots(count);
    for_each_replicate(count, cfg.workers, [&](std::size_t r) {
        RealizedEnvironment env(cfg.model, cfg.seed, r,
                                RealizedEnvironment::LeftMode::ConditionedNonneg);
        Rng rng = make_stream(cfg.seed, StreamPurpose::Walk, r);
        const std::int64_t e1 = env.next_ladder_epoch(0);
        const TauRunResult res = cfg.fast ? sample_tau_fast(env, e1, cfg.budget, rng)
                                          : sample_tau_direct(env, e1, cfg.budget, rng);
        slots[r] = {res.tau, e1, res.truncated};
    });

    std::vector<double> taus;
    taus.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        const Slot& s = slots[r];
        if (s.truncated) {
            ++rec.censored;
        } else {
            taus.push_back(static_cast<double>(s.tau));
        }
        if (r < kRowCap) {
            rec.rows.push_back(Json{
                {"id", r}, {"e1", s.e1}, {"tau", s.tau}, {"truncated", s.truncated}});
        }
    }
    std::sort(taus.begin(), taus.end());

    const LimitConstants constants =
        compute_constants(cfg.model, std::max<std::size_t>(cfg.effort, 100000), cfg.seed);
    // censored rows sit above every retained t (their tau exceeded the
    // budget), so they join the numerator of each survival estimate
    const PlateauStudy study = plateau_study(taus, kappa, 50, rec.censored);

    rec.summary["kappa"] = kappa;
    rec.summary["replicates"] = count;
    rec.summary["censored"] = rec.censored;
    rec.summary["censored_fraction"] =
        static_cast<double>(rec.censored) / static_cast<double>(count);
    rec.summary["c_t"] = estimate_json(constants.c_t);
    if (study.usable) {
        rec.summary["grid"] = study.t;
        rec.summary["plateau"] = study.value;
        rec.summary["plateau_mean"] = study.mean;
        rec.summary["plateau_max_rel_dev"] = study.max_rel_dev;
        rec.summary["plateau_over_c_t"] = study.mean / constants.c_t.value;
        set_gate(rec, "plateau_in_0.7_1.3_of_c_t",
                 study.mean / constants.c_t.value >= 0.7 &&
                     study.mean / constants.c_t.value <= 1.3);
    } else {
        set_gate(rec, "plateau_in_0.7_1.3_of_c_t", false);
    }
    rec.wall_seconds = now_seconds() - t0;
    return rec;
}

RunRecord run_quenched_gate(const ExperimentConfig& cfg) {
    const double t0 = now_seconds();
    RunRecord rec = make_record(cfg);
    const std::size_t count = cfg.replicates;

    struct Slot {
        std::int64_t len = 0;
        double err_exit = 0.0;
        double err_mean = 0.0;
        double err_var = 0.0;
    };
    std::vector<Slot> slots(count);
    for_each_replicate(count, cfg.workers, [&](std::size_t w) {
        Rng rng = make_stream(cfg.seed, StreamPurpose::WindowGen, w);
        const std::int64_t len =
            std::min<std::int64_t>(200, 2 + static_cast<std::int64_t>(rng.uniform() * 199.0));
        WindowEnvironment env;
        env.left = 0;
        env.boundary = WindowEnvironment::Boundary::ReflectLeft;
        env.omegas.resize(static_cast<std::size_t>(len) + 1);
        for (auto& w_site : env.omegas) w_site = cfg.model.sample_omega(rng);
        const std::int64_t x = std::min<std::int64_t>(
            len - 1, 1 + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(len - 1)));
        const std::int64_t a = std::min<std::int64_t>(
            len - 1, static_cast<std::int64_t>(rng.uniform() * static_cast<double>(len)));

        const double got_exit = exit_probability(env, 0, x, len);
        const double got_mean = expected_hitting_time(env, a, len);
        const double got_var = hitting_time_variance(env, a, len);

        const auto want_exit =
            oracle::exit_probability(env.omegas, static_cast<std::size_t>(x));
        const auto want = oracle::tau_moments(env.omegas, static_cast<std::size_t>(a));

        Slot s;
        s.len = len;
        s.err_exit = rel_err(got_exit, static_cast<double>(want_exit), 1.0);
        s.err_mean = rel_err(got_mean, static_cast<double>(want.mean),
                             static_cast<double>(want.mean));
        s.err_var = rel_err(got_var, static_cast<double>(want.var),
                            static_cast<double>(want.mean * want.mean));
        slots[w] = s;
    });

    double max_exit = 0.0, max_mean = 0.0, max_var = 0.0;
    for (std::size_t w = 0; w < count; ++w) {
        const Slot& s = slots[w];
        max_exit = std::max(max_exit, s.err_exit);
        max_mean = std::max(max_mean, s.err_mean);
        max_var = std::max(max_var, s.err_var);
        if (w < kRowCap) {
            rec.rows.push_back(Json{{"id", w},
                                    {"len", s.len},
                                    {"err_exit", s.err_exit},
                                    {"err_mean", s.err_mean},
                                    {"err_var", s.err_var}});
        }
    }
    rec.summary["windows"] = count;
    rec.summary["max_rel_err_exit"] = max_exit;
    rec.summary["max_rel_err_mean"] = max_mean;
    rec.summary["max_rel_err_var"] = max_var;
    rec.summary["tolerance"] = cfg.tolerance;
    set_gate(rec, "exit_within_tolerance", max_exit <= cfg.tolerance);
    set_gate(rec, "mean_within_tolerance", max_mean <= cfg.tolerance);
    set_gate(rec, "variance_within_tolerance", max_var <= cfg.tolerance);
    rec.wall_seconds = now_seconds() - t0;
    return rec;
}

RunRecord run_interarrival_diag(const ExperimentConfig& cfg) {
    const double t0 = now_seconds();
    RunRecord rec = make_record(cfg);
    const double kappa = cfg.model.kappa();
    const std::size_t per_n = cfg.replicates;
    const std::size_t total = cfg.ns.size() * per_n;

    struct Slot {
        std::uint64_t tau_ia = 0;
        std::uint64_t tau_total = 0;
        std::int64_t deep = 0;
        bool truncated = false;
    };
    std::vector<Slot> slots(total);
    for_each_replicate(total, cfg.workers, [&](std::size_t idx) {
        const std::int64_t n_exc = cfg.ns[idx / per_n];
        const double h_n = critical_height(n_exc, kappa);
        RealizedEnvironment env(cfg.model, cfg.seed, idx,
                                RealizedEnvironment::LeftMode::ConditionedNonneg);
        Rng rng = make_stream(cfg.seed, StreamPurpose::Walk, idx);

        Slot s;
        std::int64_t e = 0;
        for (std::int64_t k = 0; k < n_exc; ++k) {
            const std::int64_t e_next = env.next_ladder_epoch(e);
            const double base = env.v_at(e);
            double height = 0.0;
            for (std::int64_t x = e + 1; x <= e_next; ++x) {
                height = std::max(height, env.v_at(x) - base);
            }
            const CrossingPlan plan = plan_crossing(env, e, e_next);
            const CrossingSample cs =
                cross_with_plan(plan, env, cfg.budget - s.tau_total, rng);
            s.tau_total += cs.steps;
            if (height < h_n) {
                s.tau_ia += cs.steps;
            } else {
                ++s.deep;
            }
            if (cs.truncated || s.tau_total >= cfg.budget) {
                s.truncated = true;
                break;
            }
            e = e_next;
        }
        slots[idx] = s;
    });

    Json per_n_summary = Json::array();
    std::vector<double> iqrs;
    bool subtime_ok = true;
    bool equality_ok = true;
    for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
        const std::int64_t n_exc = cfg.ns[i];
        std::vector<double> ias;
        std::size_t censored_n = 0;
        for (std::size_t r = 0; r < per_n; ++r) {
            const Slot& s = slots[i * per_n + r];
            if (s.tau_ia > s.tau_total) subtime_ok = false;
            if (s.deep == 0 && s.tau_ia != s.tau_total) equality_ok = false;
            if (s.truncated) {
                ++censored_n;
                continue;
            }
            ias.push_back(static_cast<double>(s.tau_ia));
        }
        rec.censored += censored_n;
        Json block{{"n", n_exc}, {"kept", ias.size()}, {"censored", censored_n}};
        if (ias.size() >= 8) {
            MeanVar mv;
            for (double v : ias) mv.add(v);
            const double norm = std::pow(static_cast<double>(n_exc), 1.0 / kappa);
            std::vector<double> xs;
            xs.reserve(ias.size());
            for (double v : ias) xs.push_back((v - mv.mean) / norm);
            std::sort(xs.begin(), xs.end());
            const double iqr = quantile_sorted(xs, 0.75) - quantile_sorted(xs, 0.25);
            iqrs.push_back(iqr);
            block["iqr_normalized"] = iqr;
            block["tau_ia_mean"] = mv.mean;
        }
        per_n_summary.push_back(std::move(block));
    }
    for (std::size_t idx = 0; idx < total && idx < kRowCap; ++idx) {
        const Slot& s = slots[idx];
        rec.rows.push_back(Json{{"id", idx},
                                {"n", cfg.ns[idx / per_n]},
                                {"tau_ia", s.tau_ia},
                                {"tau_total", s.tau_total},
                                {"deep_count", s.deep},
                                {"truncated", s.truncated}});
    }

    bool shrinking = iqrs.size() == cfg.ns.size() && iqrs.size() >= 2;
    if (shrinking) {
        for (std::size_t i = 1; i < iqrs.size(); ++i) shrinking = shrinking && iqrs[i] < iqrs[i - 1];
    }
    rec.summary["kappa"] = kappa;
    rec.summary["per_n"] = per_n_summary;
    set_gate(rec, "tau_ia_subtime", subtime_ok);
    set_gate(rec, "tau_ia_equals_tau_when_no_valley", equality_ok);
    set_gate(rec, "iqr_shrinking", shrinking);
    rec.wall_seconds = now_seconds() - t0;
    return rec;
}

RunRecord run_good_env_diagnostic(const ExperimentConfig& cfg) {
    const double t0 = now_seconds();
    RunRecord rec = make_record(cfg);
    const double kappa = cfg.model.kappa();

    const double alpha_lo = std::max(0.0, 1.0 - kappa);
    const double alpha_hi = std::min(1.0, 2.0 - kappa);
    const double alpha = cfg.alpha_exp > 0.0 ? cfg.alpha_exp : 0.5 * (alpha_lo + alpha_hi);
    if (!(alpha > alpha_lo && alpha < alpha_hi)) {
        throw ConfigError("good_env: alpha must lie in (max(0,1-kappa), min(1,2-kappa))");
    }

    const std::size_t per_t = cfg.replicates;
    const std::size_t total = cfg.ladder.size() * per_t;
    struct Slot {
        std::uint64_t attempts = 0;
        std::int64_t e1 = 0;
        double height = 0.0;
        bool fail_e1 = false;
        bool fail_fluct = false;
        bool fail_rminus = false;
    };
    std::vector<Slot> slots(total);
    for_each_replicate(total, cfg.workers, [&](std::size_t idx) {
        const double t = cfg.ladder[idx / per_t];
        const double log_t = std::log(t);
        const double h_t = critical_height(static_cast<std::int64_t>(std::llround(t)), kappa);
        Rng rng = make_stream(cfg.seed, StreamPurpose::Excursions, idx);

        Excursion exc;
        Slot s;
        do {
            sample_excursion_into(cfg.model, rng, exc);
            ++s.attempts;
            if (s.attempts > 50000000ull) {
                throw BudgetExhausted("good_env: conditioning on H >= h_t is too rare here");
            }
        } while (exc.height < h_t);

        s.e1 = exc.length();
        s.height = exc.height;
        s.fail_e1 = !(static_cast<double>(s.e1) <= cfg.c_log * log_t);

        const std::size_t th = static_cast<std::size_t>(exc.t_h);
        const double fall_before = max_fall(exc.v, 0, th);
        const double rise_after = max_rise(exc.v, th, static_cast<std::size_t>(exc.length()));
        s.fail_fluct = !(std::max(fall_before, rise_after) <= alpha * log_t);

        // left side of the origin, i.i.d.: r_minus = sum_{k<=0} e^{-V(k)},
        // scanned down with early exit once the threshold is already blown
        const double log_threshold = 4.0 * std::log(log_t) + alpha * log_t;
        LogSumAcc acc;
        acc.add(0.0);
        TailCertificate cert(1e-6);
        double v = 0.0;
        bool over = false;
        for (std::int64_t depth = 0; depth < (std::int64_t{1} << 20); ++depth) {
            const double w_draw = cfg.model.sample_omega(rng);
            v -= std::log((1.0 - w_draw) / w_draw); // V one site further left
            const double term = -v;
            acc.add(term);
            cert.observe(term);
            if (acc.value() > log_threshold) {
                over = true;
                break;
            }
            if (cert.certified(acc.value())) break;
        }
        s.fail_rminus = over;
        slots[idx] = s;
    });

    Json per_t_summary = Json::array();
    std::vector<std::array<double, 3>> freqs;
    std::vector<std::array<double, 3>> ses;
    for (std::size_t i = 0; i < cfg.ladder.size(); ++i) {
        std::array<std::size_t, 3> fails{0, 0, 0};
        for (std::size_t r = 0; r < per_t; ++r) {
            const Slot& s = slots[i * per_t + r];
            fails[0] += s.fail_e1 ? 1 : 0;
            fails[1] += s.fail_fluct ? 1 : 0;
            fails[2] += s.fail_rminus ? 1 : 0;
        }
        std::array<double, 3> f{};
        std::array<double, 3> se{};
        for (int k = 0; k < 3; ++k) {
            f[k] = static_cast<double>(fails[k]) / static_cast<double>(per_t);
            se[k] = std::sqrt(std::max(f[k] * (1.0 - f[k]), 0.0) / static_cast<double>(per_t));
        }
        freqs.push_back(f);
        ses.push_back(se);
        per_t_summary.push_back(Json{{"t", cfg.ladder[i]},
                                     {"h_t", critical_height(static_cast<std::int64_t>(
                                                                 std::llround(cfg.ladder[i])),
                                                             kappa)},
                                     {"fail_e1", f[0]},
                                     {"fail_fluct", f[1]},
                                     {"fail_rminus", f[2]},
                                     {"se", std::vector<double>(se.begin(), se.end())}});
    }
    for (std::size_t idx = 0; idx < total && idx < kRowCap; ++idx) {
        const Slot& s = slots[idx];
        rec.rows.push_back(Json{{"id", idx},
                                {"t", cfg.ladder[idx / per_t]},
                                {"attempts", s.attempts},
                                {"e1", s.e1},
                                {"height", s.height},
                                {"fail_e1", s.fail_e1},
                                {"fail_fluct", s.fail_fluct},
                                {"fail_rminus", s.fail_rminus}});
    }

    // the claim is a limit; what we check is the trend, with two pooled
    // standard errors of slack so finite-sample noise cannot flip the gate
    bool trend_ok = true;
    for (std::size_t i = 1; i < freqs.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            const double slack = 2.0 * (ses[i - 1][k] + ses[i][k]);
            if (freqs[i][k] > freqs[i - 1][k] + slack) trend_ok = false;
        }
    }
    rec.summary["kappa"] = kappa;
    rec.summary["alpha"] = alpha;
    rec.summary["c_log"] = cfg.c_log;
    rec.summary["per_t"] = per_t_summary;
    set_gate(rec, "failure_frequencies_nonincreasing", trend_ok);
    rec.wall_seconds = now_seconds() - t0;
    return rec;
}

RunRecord run_constants(const ExperimentConfig& cfg) {
    const double t0 = now_seconds();
    RunRecord rec = make_record(cfg);
    const LimitConstants constants = compute_constants(cfg.model, cfg.effort, cfg.seed);
    rec.summary["kappa"] = constants.kappa;
    rec.summary["e1_mean"] = estimate_json(constants.e1_mean);
    rec.summary["exp_kv_e1"] = estimate_json(constants.exp_kv_e1);
    rec.summary["rho_log_moment_at_kappa"] = constants.rho_log;
    rec.summary["c_i"] = estimate_json(constants.c_i);
    rec.summary["c_f"] = estimate_json(constants.c_f);
    rec.summary["c_k"] = estimate_json(constants.c_k);
    rec.summary["c_u"] = estimate_json(constants.c_u);
    rec.summary["c_t"] = estimate_json(constants.c_t);
    rec.summary["speed"] = constants.v;
    rec.summary["theorem_scale"] = constants.theorem_scale;
    rec.summary["centering"] = constants.centering_desc;

    // cross-method view of C_K wherever more than one route exists
    Json methods = Json::object();
    if (cfg.model.is_beta()) {
        methods["beta_closed_form"] =
            estimate_json(estimate_c_k(cfg.model, CkMethod::BetaClosedForm));
    }
    if (std::fabs(constants.kappa - 1.0) <= 1e-6) {
        methods["goldie_k1"] = estimate_json(estimate_c_k(cfg.model, CkMethod::GoldieK1));
        if (cfg.model.is_beta()) {
            const double b = cfg.model.beta_params().beta;
            methods["alt_closed_form_rho_log"] = boost::math::beta(b, b) / (2.0 * b);
        }
    }
    methods["tail_regression"] = estimate_json(
        estimate_c_k(cfg.model, CkMethod::TailRegression, std::max<std::size_t>(cfg.effort / 5, 50000), cfg.seed));
    rec.summary["c_k_methods"] = methods;
    rec.wall_seconds = now_seconds() - t0;
    return rec;
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case ExperimentKind::LimitCheck: return run_limit_check(cfg);
        case ExperimentKind::IglehartTail: return run_iglehart_tail(cfg);
        case ExperimentKind::ZTail: return run_z_tail(cfg);
        case ExperimentKind::ValleyStats: return run_valley_stats(cfg);
        case ExperimentKind::OccupationTail: return run_occupation_tail(cfg);
        case ExperimentKind::QuenchedGate: return run_quenched_gate(cfg);
        case ExperimentKind::InterarrivalDiag: return run_interarrival_diag(cfg);
        case ExperimentKind::GoodEnv: return run_good_env_diagnostic(cfg);
        case ExperimentKind::Simulate: return run_simulate(cfg);
        case ExperimentKind::Constants: return run_constants(cfg);
    }
    throw std::logic_error("run_experiment: bad kind");
}

void write_outputs(const RunRecord& record, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path base = fs::path(out_dir);

    {
        std::ofstream jsonl(base / (record.kind + "_replicates.jsonl"));
        jsonl << Json{{"schema", "valleywalk.replicates.v1"},
                      {"kind", record.kind},
                      {"digest", record.digest},
                      {"rows", record.rows.size()}}
                     .dump()
              << '\n';
        for (const Json& row : record.rows) jsonl << row.dump() << '\n';
    }
    {
        std::ofstream csv(base / (record.kind + "_summary.csv"));
        csv << "# valleywalk.summary.v1 kind=" << record.kind << " digest=" << record.digest
            << '\n';
        csv << "key,value\n";
        std::vector<std::pair<std::string, std::string>> kv;
        flatten_into(record.summary, "", kv);
        for (const auto& [key, value] : kv) {
            std::string clean = value;
            for (char& c : clean) {
                if (c == ',') c = ';';
            }
            csv << key << ',' << clean << '\n';
        }
    }
    {
        std::ofstream run(base / (record.kind + "_run.json"));
        run << Json{{"schema", "valleywalk.run.v1"},
                    {"kind", record.kind},
                    {"digest", record.digest},
                    {"config", record.config},
                    {"summary", record.summary},
                    {"censored", record.censored},
                    {"wall_seconds", record.wall_seconds},
                    {"gates_passed", record.gates_passed}}
                   .dump(2)
            << '\n';
    }
}

} // namespace valleywalk
