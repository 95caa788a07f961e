#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "valleywalk/env_model.hpp"
#include "valleywalk/errors.hpp"
#include "valleywalk/quenched.hpp"
#include "valleywalk/stats.hpp"
#include "valleywalk/walker.hpp"

#include <cmath>
#include <vector>

using namespace valleywalk;

TEST_CASE("walk_until on a deterministic conveyor") {
    Rng rng(1);
    auto out = walk_until([](std::int64_t) { return 1.0; }, 0, 12, 1000, rng);
    CHECK(out.tau == 12);
    CHECK_FALSE(out.truncated);
    CHECK(out.min_position == 0);

    auto back = walk_until([](std::int64_t) { return 0.0; }, 5, 0, 1000, rng);
    CHECK(back.tau == 5);
    CHECK(back.min_position == 0);
}

TEST_CASE("walk_until respects its budget") {
    Rng rng(2);
    auto out = walk_until([](std::int64_t) { return 0.5; }, 0, 1000000, 300, rng);
    CHECK(out.truncated);
    CHECK(out.tau == 300);
}

TEST_CASE("realized environment is memoized and reproducible") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    RealizedEnvironment env(model, 42, 7);
    // revisits see identical values, in any visit order
    double w_far = env.omega_at(500);
    double w_neg = env.omega_at(-300);
    for (std::int64_t x = -300; x <= 500; x += 13) (void)env.omega_at(x);
    CHECK(env.omega_at(500) == w_far);
    CHECK(env.omega_at(-300) == w_neg);

    // a second instance with the same key replays the same environment
    RealizedEnvironment env2(model, 42, 7);
    bool same = true;
    for (std::int64_t x = -50; x <= 50; ++x) same = same && env2.omega_at(x) == env.omega_at(x);
    CHECK(same);

    // different replicate, different environment
    RealizedEnvironment env3(model, 42, 8);
    bool differ = false;
    for (std::int64_t x = 0; x <= 20 && !differ; ++x)
        differ = env3.omega_at(x) != env.omega_at(x);
    CHECK(differ);
}

TEST_CASE("potential increments track the omegas") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    RealizedEnvironment env(model, 9, 0);
    CHECK(env.v_at(0) == 0.0);
    for (std::int64_t x = -40; x <= 40; ++x) {
        if (x == 0) continue;
        double rho = (1.0 - env.omega_at(x)) / env.omega_at(x);
        CHECK(env.v_at(x) - env.v_at(x - 1) == doctest::Approx(std::log(rho)).epsilon(1e-12));
    }
}

TEST_CASE("conditioned left mode keeps the left potential nonnegative") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    RealizedEnvironment env(model, 11, 3, RealizedEnvironment::LeftMode::ConditionedNonneg);
    for (std::int64_t x = 0; x >= -500; --x) REQUIRE(env.v_at(x) >= 0.0);
    // right side is untouched by the conditioning
    CHECK(env.v_at(0) == 0.0);
}

TEST_CASE("ladder epochs match a direct scan of the potential") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    RealizedEnvironment env(model, 13, 1);
    std::int64_t e = 0;
    for (int k = 0; k < 10; ++k) {
        std::int64_t next = env.next_ladder_epoch(e);
        CHECK(next > e);
        for (std::int64_t x = e + 1; x < next; ++x) CHECK(env.v_at(x) > env.v_at(e));
        CHECK(env.v_at(next) <= env.v_at(e));
        e = next;
    }
}

TEST_CASE("window extraction translates coordinates") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    RealizedEnvironment env(model, 17, 2);
    auto win = env.window(5, 12);
    CHECK(win.left == 0);
    CHECK(win.right() == 7);
    for (std::int64_t j = 0; j <= 7; ++j)
        CHECK(win.omega_at(j) == env.omega_at(5 + j));
}

TEST_CASE("parity invariant: tau(n) and n have the same parity") {
    // every step is +-1, so tau(n) = n + 2 * (number of left steps); both
    // samplers must satisfy this exactly, including the accelerated one that
    // assembles tau from geometric failure counts
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    for (std::uint64_t rep = 0; rep < 6; ++rep) {
        RealizedEnvironment env(model, 23, rep);
        Rng rd = make_stream(23, StreamPurpose::Walk, 1000 + rep);
        Rng rf = make_stream(23, StreamPurpose::Walk, 2000 + rep);
        auto d = sample_tau_direct(env, 151, 1u << 30, rd);
        auto f = sample_tau_fast(env, 151, 1u << 30, rf);
        REQUIRE_FALSE(d.truncated);
        REQUIRE_FALSE(f.truncated);
        CHECK(d.tau % 2 == 151 % 2);
        CHECK(f.tau % 2 == 151 % 2);
    }
}

TEST_CASE("direct and accelerated samplers agree in law on a shared environment") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    RealizedEnvironment env(model, 31, 4);
    const std::int64_t n = 120;
    const int m = 4000;
    std::vector<double> direct, fast;
    Rng rd = make_stream(31, StreamPurpose::Walk, 1);
    Rng rf = make_stream(31, StreamPurpose::Walk, 2);
    for (int i = 0; i < m; ++i) {
        auto d = sample_tau_direct(env, n, 1u << 30, rd);
        auto f = sample_tau_fast(env, n, 1u << 30, rf);
        REQUIRE_FALSE(d.truncated);
        REQUIRE_FALSE(f.truncated);
        direct.push_back((double)d.tau);
        fast.push_back((double)f.tau);
    }
    double d = ks_two_sample(direct, fast);
    CHECK(d < ks_two_sample_threshold(m, m, 1e-4));
}

TEST_CASE("accelerated sampler matches the exact window mean") {
    // single ladder window: mean of cross_with_plan draws against the
    // closed-form expected crossing time of that window
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    RealizedEnvironment env(model, 37, 6);
    std::int64_t e0 = 0, e1 = env.next_ladder_epoch(0);
    while (e1 - e0 < 3) { // pick a window with an interior
        e0 = e1;
        e1 = env.next_ladder_epoch(e0);
    }
    auto plan = plan_crossing(env, e0, e1);
    Rng rng = make_stream(37, StreamPurpose::Walk, 9);
    MeanVar mv;
    for (int i = 0; i < 30000; ++i) {
        auto s = cross_with_plan(plan, env, 1u << 30, rng);
        REQUIRE_FALSE(s.truncated);
        mv.add((double)s.steps);
    }
    // exact quenched mean: reflected window far to the left stands in for
    // the full environment; 60 extra sites push the error below the MC noise
    auto win = env.window(e0 - 60, e1);
    win.boundary = WindowEnvironment::Boundary::ReflectLeft;
    double want = expected_hitting_time(win, 60, 60 + (e1 - e0));
    CHECK(std::abs(mv.mean - want) < 5.0 * mv.std_error());
}

TEST_CASE("width-one windows bypass the transform machinery") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    std::uint64_t rep = 0;
    RealizedEnvironment env(model, 41, rep);
    while (env.next_ladder_epoch(0) != 1) env = RealizedEnvironment(model, 41, ++rep);
    auto plan = plan_crossing(env, 0, 1);
    CHECK_FALSE(plan.pair.has_value());
    Rng rng = make_stream(41, StreamPurpose::Walk, 3);
    MeanVar mv;
    for (int i = 0; i < 30000; ++i) mv.add((double)cross_with_plan(plan, env, 1u << 30, rng).steps);
    auto win = env.window(-60, 1);
    win.boundary = WindowEnvironment::Boundary::ReflectLeft;
    double want = expected_hitting_time(win, 60, 61);
    CHECK(std::abs(mv.mean - want) < 5.0 * mv.std_error());
}

TEST_CASE("hitting-time simulation against the exact window mean") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    Rng gen = make_stream(43, StreamPurpose::WindowGen, 0);
    std::vector<double> om(10);
    for (auto& w : om) w = model.sample_omega(gen);
    WindowEnvironment win;
    win.left = 0;
    win.omegas = om;
    win.boundary = WindowEnvironment::Boundary::ReflectLeft;
    double want = expected_hitting_time(win, 0, 9);
    Rng rng(5);
    MeanVar mv;
    for (int i = 0; i < 30000; ++i) {
        auto out = simulate_hitting_time(win, 0, 9, 1u << 30, rng);
        REQUIRE_FALSE(out.truncated);
        mv.add((double)out.tau);
    }
    CHECK(std::abs(mv.mean - want) < 5.0 * mv.std_error());
}

TEST_CASE("budget truncation reports instead of spinning") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    RealizedEnvironment env(model, 47, 0);
    Rng rng = make_stream(47, StreamPurpose::Walk, 0);
    auto out = sample_tau_direct(env, 100000, 500, rng);
    CHECK(out.truncated);
    CHECK(out.tau <= 502); // stopped at the budget, not far past it
    CHECK(out.tau >= 400);

    Rng rng2 = make_stream(47, StreamPurpose::Walk, 1);
    auto fast = sample_tau_fast(env, 100000, 500, rng2);
    CHECK(fast.truncated);
}

TEST_CASE("left time measurement stays consistent with a manual walk") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    // same environment, same walk stream: replay by hand and count
    RealizedEnvironment env(model, 53, 2);
    Rng walk = make_stream(53, StreamPurpose::Walk, 5);
    std::uint64_t got = measure_left_time(env, 0, 0, 40, 1u << 30, walk);

    RealizedEnvironment env2(model, 53, 2);
    Rng replay = make_stream(53, StreamPurpose::Walk, 5);
    std::int64_t pos = 0;
    std::uint64_t steps_left = 0;
    while (pos != 40) {
        if (pos <= 0) ++steps_left;
        pos += replay.uniform() < env2.omega_at(pos) ? 1 : -1;
    }
    CHECK(got == steps_left);
}

TEST_CASE("min position tracks the walk's leftmost point") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    for (std::uint64_t rep = 0; rep < 4; ++rep) {
        RealizedEnvironment env(model, 59, rep);
        Rng rng = make_stream(59, StreamPurpose::Walk, rep);
        auto out = sample_tau_direct(env, 60, 1u << 30, rng);
        CHECK(out.min_position <= 0);
        CHECK(out.min_position >= -10000);
    }
}

TEST_CASE("crossing step collection splits tau at the ladder epochs") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    RealizedEnvironment env(model, 61, 1);
    Rng rng = make_stream(61, StreamPurpose::Walk, 0);
    auto out = sample_tau_direct(env, 200, 1u << 30, rng, true);
    REQUIRE_FALSE(out.truncated);
    CHECK(out.crossing_steps.size() == out.windows);
    std::uint64_t total = 0;
    for (auto s : out.crossing_steps) total += s;
    CHECK(total == out.tau);
}
