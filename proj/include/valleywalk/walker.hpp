#ifndef VALLEYWALK_WALKER_HPP
#define VALLEYWALK_WALKER_HPP

#include "valleywalk/env_model.hpp"
#include "valleywalk/potential.hpp"
#include "valleywalk/quenched.hpp"
#include "valleywalk/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace valleywalk {

struct WalkOutcome {
    std::uint64_t tau = 0;
    bool truncated = false;
    std::int64_t min_position = 0;
};

// Nearest-neighbour walk driven by an arbitrary omega(position) provider.
// P(step right) = omega(pos); uniform() is open (0,1) so omega == 1 steps
// right surely and omega == 0 steps left surely.
template <class OmegaFn>
WalkOutcome walk_until(OmegaFn&& omega_at, std::int64_t start, std::int64_t target,
                       std::uint64_t budget, Rng& rng) {
    WalkOutcome out;
    out.min_position = start;
    std::int64_t pos = start;
    while (pos != target) {
        if (out.tau >= budget) {
            out.truncated = true;
            break;
        }
        pos += rng.uniform() < omega_at(pos) ? 1 : -1;
        ++out.tau;
        if (pos < out.min_position) out.min_position = pos;
    }
    return out;
}

// One replicate's quenched environment on Z, materialized lazily. Each site's
// omega is a pure function of (seed, replicate, site), so revisits always see
// the same value; the memo arrays just avoid re-deriving it. Sites left of the
// origin come either from the same i.i.d. law or from the nonnegative-potential
// conditioning.
class RealizedEnvironment {
  public:
    enum class LeftMode { Iid, ConditionedNonneg };

    RealizedEnvironment(const EnvironmentModel& model, std::uint64_t seed,
                        std::uint64_t replicate, LeftMode mode = LeftMode::Iid);

    double omega_at(std::int64_t x);
    double v_at(std::int64_t x); // potential anchored V(0) = 0
    LeftMode left_mode() const { return mode_; }

    // next weak descending ladder epoch strictly right of `from`
    std::int64_t next_ladder_epoch(std::int64_t from);

    // omegas on [from, to] repackaged for the quenched-formula routines,
    // translated so the window starts at local coordinate 0
    WindowEnvironment window(std::int64_t from, std::int64_t to);

  private:
    void ensure_right(std::int64_t x);
    void ensure_left(std::int64_t x);

    const EnvironmentModel* model_;
    LeftMode mode_;
    std::uint64_t right_key_;
    std::uint64_t left_key_;
    std::vector<double> omega_pos_; // site i at index i
    std::vector<double> v_pos_;     // V(i), one entry past omega_pos_
    std::vector<double> omega_neg_; // site -1-i at index i
    std::vector<double> v_neg_;     // V(-1-i)
    std::optional<ConditionedLeftEnv> cond_left_;
};

WalkOutcome simulate_hitting_time(RealizedEnvironment& env, std::int64_t start,
                                  std::int64_t target, std::uint64_t budget, Rng& rng);

// window variant used by the oracle-comparison tests; honors the boundary mode
WalkOutcome simulate_hitting_time(const WindowEnvironment& env, std::int64_t start,
                                  std::int64_t target, std::uint64_t budget, Rng& rng);

// steps spent at positions <= z between the first visits to x and y (walk
// started at x); throws BudgetExhausted if y is not reached in time
std::uint64_t measure_left_time(RealizedEnvironment& env, std::int64_t z, std::int64_t x,
                                std::int64_t y, std::uint64_t budget, Rng& rng);

// Cached ingredients for drawing tau(to) from `from` by the geometric
// failure/success decomposition. Read-only once built, shareable.
struct CrossingPlan {
    std::int64_t from = 0;
    std::int64_t to = 0;
    double omega0 = 0.0;
    double log_p_fail = 0.0;       // log P(attempt fails)
    double p_left_given_fail = 1.0;
    std::optional<HTransformPair> pair; // absent for width-1 windows
};

CrossingPlan plan_crossing(RealizedEnvironment& env, std::int64_t from, std::int64_t to);

struct CrossingSample {
    std::uint64_t steps = 0;
    std::uint64_t failures = 0;
    bool truncated = false;
};

// Draws tau(to) as sum of N ~ Geometric failures plus one success. Left
// digressions walk the realized environment below `from`, so the draw is from
// the exact quenched law of the window.
CrossingSample cross_with_plan(const CrossingPlan& plan, RealizedEnvironment& env,
                               std::uint64_t budget, Rng& rng);

struct TauRunResult {
    std::uint64_t tau = 0;
    bool truncated = false;
    std::uint64_t windows = 0;
    std::uint64_t failures = 0; // accelerated runs only
    std::int64_t min_position = 0;
    std::vector<std::uint64_t> crossing_steps; // per ladder window, if requested
};

// tau(n) assembled window-by-window along the ladder epochs
TauRunResult sample_tau_fast(RealizedEnvironment& env, std::int64_t n, std::uint64_t budget,
                             Rng& rng, bool collect_crossings = false);

// tau(n) by plain stepping; crossing_steps split at the same ladder epochs
TauRunResult sample_tau_direct(RealizedEnvironment& env, std::int64_t n, std::uint64_t budget,
                               Rng& rng, bool collect_crossings = false);

} // namespace valleywalk

#endif
