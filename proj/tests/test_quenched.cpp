#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "valleywalk/env_model.hpp"
#include "valleywalk/errors.hpp"
#include "valleywalk/quenched.hpp"
#include "valleywalk/rng.hpp"
#include "valleywalk/stats.hpp"
#include "valleywalk/window_oracle.hpp"

#include <cmath>
#include <vector>

using namespace valleywalk;

namespace {

double omega_for_rho(double r) { return 1.0 / (1.0 + r); }

WindowEnvironment window_of(std::int64_t left, std::vector<double> omegas,
                            WindowEnvironment::Boundary b) {
    WindowEnvironment env;
    env.left = left;
    env.omegas = std::move(omegas);
    env.boundary = b;
    return env;
}

// Plain inline walk on a window; absorbed at `a` or `b`, reports (hit_b, steps).
struct WalkResult {
    bool hit_b = false;
    std::int64_t steps = 0;
};

WalkResult walk_window(const WindowEnvironment& env, std::int64_t x, std::int64_t a, std::int64_t b,
                       Rng& rng) {
    WalkResult r;
    while (x != a && x != b) {
        bool reflected = env.boundary == WindowEnvironment::Boundary::ReflectLeft && x == env.left;
        double w = reflected ? 1.0 : env.omega_at(x);
        x += (rng.uniform() < w) ? 1 : -1;
        ++r.steps;
    }
    r.hit_b = (x == b);
    return r;
}

} // namespace

TEST_CASE("tridiagonal solve against a dense elimination") {
    Rng rng(33);
    const std::size_t n = 7;
    std::vector<long double> lo(n), di(n), up(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        di[i] = 2.0L + rng.uniform();
        lo[i] = i == 0 ? 0.0L : -(long double)rng.uniform();
        up[i] = i + 1 == n ? 0.0L : -(long double)rng.uniform();
        rhs[i] = (long double)rng.uniform(-2.0, 2.0);
    }
    auto x = oracle::solve_tridiagonal(lo, di, up, rhs);
    // residual check row by row
    for (std::size_t i = 0; i < n; ++i) {
        long double r = di[i] * x[i] - rhs[i];
        if (i > 0) r += lo[i] * x[i - 1];
        if (i + 1 < n) r += up[i] * x[i + 1];
        CHECK(std::abs((double)r) < 1e-15);
    }
}

TEST_CASE("exit probability of the fair walk is linear") {
    auto env = window_of(0, std::vector<double>(11, 0.5), WindowEnvironment::Boundary::OpenLeft);
    CHECK(exit_probability(env, 0, 3, 10) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(exit_probability(env, 0, 0, 10) == 0.0);
    CHECK(exit_probability(env, 0, 10, 10) == 1.0);
    CHECK(exit_probability(env, 2, 6, 9) == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("exit probability of the biased walk matches the geometric form") {
    // constant rho = 1/2: P_x(hit b first) = (1 - r^{x-a}) / (1 - r^{b-a})
    double w = omega_for_rho(0.5);
    auto env = window_of(0, std::vector<double>(9, w), WindowEnvironment::Boundary::OpenLeft);
    double want = (1.0 - std::pow(0.5, 2)) / (1.0 - std::pow(0.5, 8));
    CHECK(exit_probability(env, 0, 2, 8) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("a wall inside the window seals the exit computation") {
    std::vector<double> om(7, 0.5);
    om[3] = 1.0; // never steps left from site 3
    auto env = window_of(0, om, WindowEnvironment::Boundary::OpenLeft);
    CHECK(exit_probability(env, 0, 4, 6) == 1.0);
    // left of the wall, the problem reduces to the window ending at the wall
    CHECK(exit_probability(env, 0, 2, 6) ==
          doctest::Approx(exit_probability(env, 0, 2, 3)).epsilon(1e-12));
}

TEST_CASE("exit probability agrees with the linear-system oracle") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    Rng rng = make_stream(101, StreamPurpose::WindowGen, 0);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t len = 3 + (std::size_t)(rng.uniform() * 57.0);
        std::vector<double> om(len + 1);
        for (auto& w : om) w = model.sample_omega(rng);
        auto env = window_of(0, om, WindowEnvironment::Boundary::OpenLeft);
        std::size_t x = 1 + (std::size_t)(rng.uniform() * (double)(len - 1));
        double got = exit_probability(env, 0, (std::int64_t)x, (std::int64_t)len);
        double want = (double)oracle::exit_probability(om, x);
        CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("escape probability under a constant drift") {
    // rho = 1/2 everywhere: P_x(never hit 0) = 1 - (1/2)^x
    double w = omega_for_rho(0.5);
    auto env = window_of(0, std::vector<double>(120, w), WindowEnvironment::Boundary::OpenLeft);
    CHECK(escape_probability(env, 0, 1) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(escape_probability(env, 0, 3) == doctest::Approx(7.0 / 8.0).epsilon(1e-10));
    CHECK(escape_probability(env, 0, 0) == 0.0);
}

TEST_CASE("escape probability against direct simulation") {
    double w = omega_for_rho(0.5);
    auto env = window_of(0, std::vector<double>(120, w), WindowEnvironment::Boundary::OpenLeft);
    double p = escape_probability(env, 0, 2);
    Rng rng(7);
    int escaped = 0;
    const int trials = 20000;
    for (int i = 0; i < trials; ++i) {
        // hitting 60 first is escape to all intents: the return probability
        // from there is 2^-58
        auto res = walk_window(env, 2, 0, 60, rng);
        escaped += res.hit_b ? 1 : 0;
    }
    double se = std::sqrt(p * (1.0 - p) / trials);
    CHECK(std::abs((double)escaped / trials - p) < 5.0 * se);
}

TEST_CASE("escape probability needs a certifiable right tail") {
    // fair walk: sum e^{V} grows linearly, never certifies, and indeed the
    // true escape probability is 0; the window must refuse rather than guess
    auto env = window_of(0, std::vector<double>(200, 0.5), WindowEnvironment::Boundary::OpenLeft);
    CHECK_THROWS_AS(escape_probability(env, 0, 3), TruncationUncertified);
}

TEST_CASE("hitting time mean and variance on hand-checked windows") {
    // reflecting wall at 0, fair site in the middle: E = 4, Var = 8
    auto env =
        window_of(0, std::vector<double>{0.5, 0.5, 0.5}, WindowEnvironment::Boundary::ReflectLeft);
    CHECK(expected_hitting_time(env, 0, 2) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(hitting_time_variance(env, 0, 2) == doctest::Approx(8.0).epsilon(1e-10));

    // adjacent sites under reflection: one deterministic step
    CHECK(expected_hitting_time(env, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hitting_time_variance(env, 0, 1) == doctest::Approx(0.0).epsilon(1e-12));

    // all walls: a deterministic march of length b - a
    auto det = window_of(0, std::vector<double>(6, 1.0), WindowEnvironment::Boundary::ReflectLeft);
    CHECK(expected_hitting_time(det, 0, 5) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(hitting_time_variance(det, 0, 5) == doctest::Approx(0.0).epsilon(1e-12));

    // interior wall: solved by hand via the first-step equations
    auto walled = window_of(0, std::vector<double>{0.5, 0.5, 1.0, 0.5, 0.5},
                            WindowEnvironment::Boundary::ReflectLeft);
    CHECK(expected_hitting_time(walled, 0, 4) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("hitting moments agree with the linear-system oracle") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    Rng rng = make_stream(55, StreamPurpose::WindowGen, 1);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t len = 2 + (std::size_t)(rng.uniform() * 40.0);
        std::vector<double> om(len + 1);
        for (auto& w : om) w = model.sample_omega(rng);
        auto env = window_of(0, om, WindowEnvironment::Boundary::ReflectLeft);
        auto want = oracle::tau_moments(om, 0);
        double m = expected_hitting_time(env, 0, (std::int64_t)len);
        double v = hitting_time_variance(env, 0, (std::int64_t)len);
        CHECK(m == doctest::Approx((double)want.mean).epsilon(1e-9));
        CHECK(v == doctest::Approx((double)want.var).epsilon(1e-8));
    }
}

TEST_CASE("hitting moments against direct simulation") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    Rng rng = make_stream(56, StreamPurpose::WindowGen, 2);
    std::vector<double> om(9);
    for (auto& w : om) w = model.sample_omega(rng);
    auto env = window_of(0, om, WindowEnvironment::Boundary::ReflectLeft);
    double mean = expected_hitting_time(env, 0, 8);
    double var = hitting_time_variance(env, 0, 8);
    MeanVar mc;
    for (int i = 0; i < 40000; ++i) {
        auto res = walk_window(env, 0, -1, 8, rng); // a = -1 unreachable under reflection
        mc.add((double)res.steps);
    }
    CHECK(std::abs(mc.mean - mean) < 5.0 * mc.std_error());
    // variance of the sample variance: loose 10 percent band is plenty here
    CHECK(mc.variance() == doctest::Approx(var).epsilon(0.1));
}

TEST_CASE("conditioned kernels of the flat valley in closed form") {
    // omega = 1/2 on [0,4]: h(x) = (4-x)/4 by gambler's ruin
    auto env = window_of(0, std::vector<double>(5, 0.5), WindowEnvironment::Boundary::OpenLeft);
    auto pair = build_h_transforms(env, 4);
    CHECK(pair.e1 == 4);
    CHECK(pair.h(0) == 1.0);
    CHECK(pair.h(1) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(pair.h(2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pair.h(3) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(pair.log_h[4] == neg_inf);
    CHECK(pair.g(4) == 1.0);
    CHECK(pair.log_g[0] == neg_inf);

    // failure kernel: omega_hat_x = omega h(x+1)/h(x)
    CHECK(pair.omega_hat[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(pair.omega_hat[2] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(pair.omega_hat[3] == 0.0); // exact boundary clamp
    // success kernel: omega_bar_x = omega g(x+1)/g(x)
    CHECK(pair.omega_bar[1] == 1.0); // exact boundary clamp
    CHECK(pair.omega_bar[2] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(pair.omega_bar[3] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    // modified potentials
    CHECK(pair.v_hat[0] == 0.0);
    CHECK(pair.v_hat[1] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(pair.v_hat[2] == doctest::Approx(std::log(6.0)).epsilon(1e-12));
    CHECK(pair.v_hat[3] == pos_inf);
    CHECK(pair.v_bar_rel[1] == 0.0);
    CHECK(pair.v_bar_rel[2] == doctest::Approx(-std::log(3.0)).epsilon(1e-12));
    CHECK(pair.v_bar_rel[3] == doctest::Approx(-std::log(6.0)).epsilon(1e-12));

    // single-attempt success probability: first step right, then win from 1
    CHECK(std::exp(pair.log_one_minus_p) == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
    CHECK(pair.log_m2eh == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("one minus p ties out against the oracle exit probability") {
    auto model = EnvironmentModel::create(BetaParams{3.0, 1.5});
    Rng rng = make_stream(77, StreamPurpose::WindowGen, 3);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t e1 = 2 + (std::size_t)(rng.uniform() * 15.0);
        std::vector<double> om(e1 + 1);
        for (auto& w : om) w = model.sample_omega(rng);
        auto env = window_of(0, om, WindowEnvironment::Boundary::OpenLeft);
        auto pair = build_h_transforms(env, (std::int64_t)e1);
        double want = om[0] * (double)oracle::exit_probability(om, 1);
        CHECK(std::exp(pair.log_one_minus_p) == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("degenerate valleys are refused") {
    auto env = window_of(0, std::vector<double>(3, 0.5), WindowEnvironment::Boundary::OpenLeft);
    CHECK_THROWS_AS(build_h_transforms(env, 1), DegenerateValley);
}

TEST_CASE("failure moments match direct simulation of attempts") {
    // deep geometric left tail, then a modest valley on [0, 5]
    std::vector<double> om;
    for (int i = 0; i < 70; ++i) om.push_back(omega_for_rho(1.0 / 3.0));
    std::vector<double> valley = {0.6, 0.4, 0.45, 0.6, 0.55, 0.5};
    for (double w : valley) om.push_back(w);
    auto env = window_of(-70, om, WindowEnvironment::Boundary::OpenLeft);
    auto pair = build_h_transforms(env, 5);
    auto fm = failure_moments(env, pair);
    CHECK(fm.left_certified);

    Rng rng(99);
    MeanVar dur, dur2;
    int successes = 0, attempts = 0;
    for (int i = 0; i < 60000; ++i) {
        // one attempt: leave 0, walk until the first return to 0 or arrival at 5
        std::int64_t x = 0, steps = 0;
        for (;;) {
            double w = env.omega_at(x);
            x += (rng.uniform() < w) ? 1 : -1;
            ++steps;
            if (x == 0 || x == 5) break;
            REQUIRE(x > -65); // never plausibly reaches the window edge
        }
        ++attempts;
        if (x == 5) {
            ++successes;
        } else {
            dur.add((double)steps);
            dur2.add((double)steps * (double)steps);
        }
    }
    double p_succ = (double)successes / attempts;
    double se_p = std::sqrt(p_succ * (1.0 - p_succ) / attempts);
    CHECK(std::abs(p_succ - fm.one_minus_p) < 5.0 * se_p);
    CHECK(std::abs(dur.mean - fm.mean) < 5.0 * dur.std_error());
    CHECK(std::abs(dur2.mean - fm.second) < 5.0 * dur2.std_error());
}

TEST_CASE("success mean bound in closed form and against the true mean") {
    // flat valley, e1 = 2: the sum collapses to a single term
    auto env2 = window_of(0, std::vector<double>(3, 0.5), WindowEnvironment::Boundary::OpenLeft);
    auto pair2 = build_h_transforms(env2, 2);
    CHECK(success_mean_bound(pair2) == doctest::Approx(4.0).epsilon(1e-12));
    // and the true conditioned mean is exactly 2 (two forced right steps)
    std::vector<double> bar2 = {1.0, pair2.omega_bar[1], 0.5};
    CHECK((double)oracle::tau_moments(bar2, 0).mean == doctest::Approx(2.0).epsilon(1e-12));

    // flat valley, e1 = 4: bound 10 versus true mean 6
    auto env4 = window_of(0, std::vector<double>(5, 0.5), WindowEnvironment::Boundary::OpenLeft);
    auto pair4 = build_h_transforms(env4, 4);
    CHECK(success_mean_bound(pair4) == doctest::Approx(10.0).epsilon(1e-12));
    std::vector<double> bar4 = {1.0, pair4.omega_bar[1], pair4.omega_bar[2], pair4.omega_bar[3],
                                0.5};
    CHECK((double)oracle::tau_moments(bar4, 0).mean == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(success_mean_bound(pair4) >= (double)oracle::tau_moments(bar4, 0).mean);
}

TEST_CASE("conditioned kernels split the walk measure correctly") {
    // P(first excursion fails) * E[F] recovered by simulating the hat chain
    std::vector<double> om;
    for (int i = 0; i < 70; ++i) om.push_back(omega_for_rho(1.0 / 3.0));
    for (double w : {0.55, 0.35, 0.5, 0.65, 0.5}) om.push_back(w);
    auto env = window_of(-70, om, WindowEnvironment::Boundary::OpenLeft);
    auto pair = build_h_transforms(env, 4);

    // simulate the failure-conditioned chain directly from its kernels: the
    // first step goes right with probability omega_0 h(1)/p (conditioning on
    // the return), interior sites use omega_hat, sites below zero keep the
    // original omega because any path from there must cross 0 anyway
    Rng rng(1234);
    const double p_fail = 1.0 - std::exp(pair.log_one_minus_p);
    MeanVar dur;
    for (int i = 0; i < 60000; ++i) {
        std::int64_t x = 0, steps = 0;
        for (;;) {
            double w;
            if (steps == 0)
                w = env.omega_at(0) * pair.h(1) / p_fail;
            else if (x > 0)
                w = pair.omega_hat[(std::size_t)x];
            else
                w = env.omega_at(x);
            x += (rng.uniform() < w) ? 1 : -1;
            ++steps;
            if (x == 0) break;
            REQUIRE(x < 4);
            REQUIRE(x > -65);
        }
        dur.add((double)steps);
    }
    auto fm = failure_moments(env, pair);
    CHECK(std::abs(dur.mean - fm.mean) < 5.0 * dur.std_error());
}
