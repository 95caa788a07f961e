#include "valleywalk/walker.hpp"

#include "valleywalk/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace valleywalk {

namespace {

constexpr std::int64_t kMaxLadderScan = std::int64_t{1} << 24;

double log_rho_of(double w) {
    if (w >= 1.0) return neg_inf;
    return std::log1p(-w) - std::log(w);
}

} // namespace

RealizedEnvironment::RealizedEnvironment(const EnvironmentModel& model, std::uint64_t seed,
                                         std::uint64_t replicate, LeftMode mode)
    : model_(&model),
      mode_(mode),
      right_key_(derive_key(seed, StreamPurpose::Environment, replicate)),
      left_key_(derive_key(seed, StreamPurpose::LeftEnvironment, replicate)) {
    v_pos_.push_back(0.0);
    if (mode_ == LeftMode::ConditionedNonneg) {
        cond_left_.emplace(model, Rng(left_key_));
    }
}

void RealizedEnvironment::ensure_right(std::int64_t x) {
    while (static_cast<std::int64_t>(omega_pos_.size()) <= x) {
        const std::int64_t s = static_cast<std::int64_t>(omega_pos_.size());
        Rng r = site_rng(right_key_, s);
        const double w = model_->sample_omega(r);
        omega_pos_.push_back(w);
        if (s >= 1) v_pos_.push_back(v_pos_.back() + log_rho_of(w));
    }
}

void RealizedEnvironment::ensure_left(std::int64_t x) {
    // iid mode only; the conditioned mode delegates to cond_left_
    while (-static_cast<std::int64_t>(omega_neg_.size()) - 1 >= x) {
        const std::int64_t s = -static_cast<std::int64_t>(omega_neg_.size()) - 1;
        Rng r = site_rng(left_key_, s);
        const double w = model_->sample_omega(r);
        // V(s) = V(s+1) - log rho_{s+1}
        const double lr_up = s == -1 ? log_rho_of(omega_at(0)) : log_rho_of(omega_neg_.back());
        const double v_up = s == -1 ? 0.0 : v_neg_.back();
        omega_neg_.push_back(w);
        v_neg_.push_back(v_up - lr_up);
    }
}

double RealizedEnvironment::omega_at(std::int64_t x) {
    if (mode_ == LeftMode::ConditionedNonneg && x <= 0) return cond_left_->omega_at(x);
    if (x >= 0) {
        ensure_right(x);
        return omega_pos_[static_cast<std::size_t>(x)];
    }
    ensure_left(x);
    return omega_neg_[static_cast<std::size_t>(-x - 1)];
}

double RealizedEnvironment::v_at(std::int64_t x) {
    if (x >= 0) {
        // v_pos_[x] sums log rho over sites 1..x, which is V(x) in both left
        // modes: the conditioning only reshapes sites <= 0 and V(0) = 0 anyway
        ensure_right(x);
        return v_pos_[static_cast<std::size_t>(x)];
    }
    if (mode_ == LeftMode::ConditionedNonneg) return cond_left_->v_at(x);
    ensure_left(x);
    return v_neg_[static_cast<std::size_t>(-x - 1)];
}

std::int64_t RealizedEnvironment::next_ladder_epoch(std::int64_t from) {
    const double level = v_at(from);
    for (std::int64_t x = from + 1; x - from <= kMaxLadderScan; ++x) {
        if (v_at(x) <= level) return x;
    }
    throw WindowTooSmall("next_ladder_epoch: no descending ladder point within scan cap");
}

WindowEnvironment RealizedEnvironment::window(std::int64_t from, std::int64_t to) {
    WindowEnvironment w;
    w.left = 0;
    w.boundary = WindowEnvironment::Boundary::OpenLeft;
    w.omegas.resize(static_cast<std::size_t>(to - from + 1));
    for (std::int64_t x = from; x <= to; ++x) {
        w.omegas[static_cast<std::size_t>(x - from)] = omega_at(x);
    }
    return w;
}

WalkOutcome simulate_hitting_time(RealizedEnvironment& env, std::int64_t start,
                                  std::int64_t target, std::uint64_t budget, Rng& rng) {
    return walk_until([&env](std::int64_t x) { return env.omega_at(x); }, start, target, budget,
                      rng);
}

WalkOutcome simulate_hitting_time(const WindowEnvironment& env, std::int64_t start,
                                  std::int64_t target, std::uint64_t budget, Rng& rng) {
    if (env.boundary != WindowEnvironment::Boundary::ReflectLeft) {
        throw std::invalid_argument(
            "simulate_hitting_time(window): walk needs a reflecting left edge");
    }
    return walk_until(
        [&env](std::int64_t x) { return x == env.left ? 1.0 : env.omega_at(x); }, start, target,
        budget, rng);
}

std::uint64_t measure_left_time(RealizedEnvironment& env, std::int64_t z, std::int64_t x,
                                std::int64_t y, std::uint64_t budget, Rng& rng) {
    if (z > x || x > y) throw std::invalid_argument("measure_left_time: need z <= x <= y");
    if (x == y) return 0;
    std::uint64_t count = x <= z ? 1 : 0;
    std::int64_t pos = x;
    std::uint64_t steps = 0;
    while (pos != y) {
        if (steps >= budget) throw BudgetExhausted("measure_left_time: budget ran out");
        pos += rng.uniform() < env.omega_at(pos) ? 1 : -1;
        ++steps;
        if (pos <= z) ++count;
    }
    return count;
}

CrossingPlan plan_crossing(RealizedEnvironment& env, std::int64_t from, std::int64_t to) {
    if (to <= from) throw std::invalid_argument("plan_crossing: need from < to");
    CrossingPlan plan;
    plan.from = from;
    plan.to = to;
    plan.omega0 = env.omega_at(from);
    const std::int64_t width = to - from;
    if (width == 1) {
        // single-cell window: every failed attempt is one left digression
        plan.log_p_fail = std::log1p(-plan.omega0);
        plan.p_left_given_fail = 1.0;
        return plan;
    }
    const WindowEnvironment wenv = env.window(from, to);
    plan.pair = build_h_transforms(wenv, width);
    plan.log_p_fail = std::log1p(-std::exp(plan.pair->log_one_minus_p));
    const double h1 = std::exp(plan.pair->log_h[1]);
    const double fail_left = 1.0 - plan.omega0;
    const double fail_right = plan.omega0 * h1;
    plan.p_left_given_fail =
        fail_left + fail_right > 0.0 ? fail_left / (fail_left + fail_right) : 1.0;
    return plan;
}

CrossingSample cross_with_plan(const CrossingPlan& plan, RealizedEnvironment& env,
                               std::uint64_t budget, Rng& rng) {
    CrossingSample out;
    const std::int64_t width = plan.to - plan.from;

    // N ~ Geometric(1-p) on {0,1,...} by inversion; each failure costs at
    // least 2 steps, so an N past the budget truncates immediately
    const double n_fail = std::floor(std::log(rng.uniform()) / plan.log_p_fail);
    if (!(n_fail < static_cast<double>(budget))) {
        out.steps = budget;
        out.truncated = true;
        return out;
    }
    const auto failures = static_cast<std::uint64_t>(n_fail);
    out.failures = failures;

    const auto original = [&env](std::int64_t x) { return env.omega_at(x); };
    for (std::uint64_t i = 0; i < failures; ++i) {
        if (out.steps >= budget) {
            out.truncated = true;
            return out;
        }
        ++out.steps; // the first step of the attempt
        WalkOutcome leg;
        if (rng.uniform() < plan.p_left_given_fail) {
            // left digression runs in the untransformed environment below `from`
            leg = walk_until(original, plan.from - 1, plan.from, budget - out.steps, rng);
        } else {
            const HTransformPair& pair = *plan.pair;
            leg = walk_until(
                [&pair](std::int64_t x) { return pair.omega_hat[static_cast<std::size_t>(x)]; },
                1, 0, budget - out.steps, rng);
        }
        out.steps += leg.tau;
        if (leg.truncated) {
            out.truncated = true;
            return out;
        }
    }

    if (out.steps >= budget) {
        out.truncated = true;
        return out;
    }
    ++out.steps; // success starts with the step to `from`+1
    if (width > 1) {
        const HTransformPair& pair = *plan.pair;
        const WalkOutcome leg = walk_until(
            [&pair](std::int64_t x) { return pair.omega_bar[static_cast<std::size_t>(x)]; }, 1,
            width, budget - out.steps, rng);
        out.steps += leg.tau;
        out.truncated = leg.truncated;
    }
    return out;
}

TauRunResult sample_tau_fast(RealizedEnvironment& env, std::int64_t n, std::uint64_t budget,
                             Rng& rng, bool collect_crossings) {
    if (n < 0) throw std::invalid_argument("sample_tau_fast: n must be nonnegative");
    TauRunResult out;
    std::int64_t cur = 0;
    while (cur < n) {
        std::int64_t next = env.next_ladder_epoch(cur);
        if (next > n) next = n;
        const CrossingPlan plan = plan_crossing(env, cur, next);
        const CrossingSample cs = cross_with_plan(plan, env, budget - out.tau, rng);
        out.tau += cs.steps;
        out.failures += cs.failures;
        ++out.windows;
        if (collect_crossings) out.crossing_steps.push_back(cs.steps);
        if (cs.truncated) {
            out.truncated = true;
            break;
        }
        cur = next;
    }
    return out;
}

TauRunResult sample_tau_direct(RealizedEnvironment& env, std::int64_t n, std::uint64_t budget,
                               Rng& rng, bool collect_crossings) {
    if (n < 0) throw std::invalid_argument("sample_tau_direct: n must be nonnegative");
    TauRunResult out;
    std::vector<std::int64_t> epochs;
    if (collect_crossings) {
        for (std::int64_t e = 0; e < n;) {
            e = std::min(env.next_ladder_epoch(e), n);
            epochs.push_back(e);
        }
    }
    std::size_t next_epoch = 0;
    std::uint64_t last_mark = 0;
    std::int64_t pos = 0;
    while (pos != n) {
        if (out.tau >= budget) {
            out.truncated = true;
            break;
        }
        pos += rng.uniform() < env.omega_at(pos) ? 1 : -1;
        ++out.tau;
        if (pos < out.min_position) out.min_position = pos;
        if (collect_crossings && next_epoch < epochs.size() && pos == epochs[next_epoch]) {
            out.crossing_steps.push_back(out.tau - last_mark);
            last_mark = out.tau;
            ++next_epoch;
            ++out.windows;
        }
    }
    if (!collect_crossings) out.windows = out.truncated ? 0 : 1;
    return out;
}

} // namespace valleywalk
