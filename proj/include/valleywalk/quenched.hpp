#ifndef VALLEYWALK_QUENCHED_HPP
#define VALLEYWALK_QUENCHED_HPP

// Exact computations in a fixed environment window: exit and escape
// probabilities, hitting-time mean and variance, and the two conditioned
// kernels (failure / success) for a single valley. Everything runs in the
// log domain; e^{V} never appears raw in a contract.

#include "valleywalk/logsum.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace valleywalk {

// Finite proxy for a doubly infinite environment. Two readings of the left
// edge: ReflectLeft turns site `left` into a wall (omega there treated as 1,
// making every left-running sum finite and the results exact for the
// reflected chain); OpenLeft keeps the chain unrestricted and instead
// certifies that the window already carries the infinite sums to tolerance.
struct WindowEnvironment {
    enum class Boundary { ReflectLeft, OpenLeft };

    std::int64_t left = 0;
    std::vector<double> omegas; // omega at sites left, left+1, ...
    Boundary boundary = Boundary::OpenLeft;

    std::int64_t right() const { return left + static_cast<std::int64_t>(omegas.size()) - 1; }
    bool contains(std::int64_t x) const { return x >= left && x <= right(); }
    double omega_at(std::int64_t x) const { return omegas[static_cast<std::size_t>(x - left)]; }
};

// P_{x,omega}(tau(b) < tau(a)) for a <= x <= b.
double exit_probability(const WindowEnvironment& env, std::int64_t a, std::int64_t x,
                        std::int64_t b);

// P_{x,omega}(tau(a) = infinity) for x >= a; needs the right tail of
// sum_{k>=a} e^{V(k)} certified inside the window.
double escape_probability(const WindowEnvironment& env, std::int64_t a, std::int64_t x);

// E_{a,omega}[tau(b)]; can overflow to +inf for monstrous windows, which is
// reported as the +inf sentinel rather than an error.
double expected_hitting_time(const WindowEnvironment& env, std::int64_t a, std::int64_t b);

// Var_{a,omega}(tau(b)).
double hitting_time_variance(const WindowEnvironment& env, std::int64_t a, std::int64_t b);

// Conditioned kernels on a valley [0, e1] (sites are window-absolute; the
// valley start is pinned at 0 to match the anchoring V(0) = 0).
//
// h(x) = P_{x,omega}(tau(0) < tau(e1)) drives the failure kernel
// omega_hat_x = omega_x h(x+1)/h(x); g = 1-h drives the success kernel.
// The modified potentials are stored as:
//   v_hat  on [0, e1-1], anchored v_hat[0] = 0; v_hat[e1-1] = +inf exactly
//          (omega_hat at e1-1 is exactly 0: a failing walk never steps to e1).
//   v_bar_rel on [1, e1-1], anchored at site 1 (the success walk never
//          returns to 0, so its potential is only defined up to that anchor).
struct HTransformPair {
    std::int64_t e1 = 0;
    std::vector<double> omega;     // original omega on [0, e1]
    std::vector<double> log_h;     // on [0, e1]; log_h[0] = 0, log_h[e1] = -inf
    std::vector<double> log_g;     // on [0, e1]; log_g[0] = -inf, log_g[e1] = 0
    std::vector<double> omega_hat; // [1, e1-1] valid; [0] unused
    std::vector<double> omega_bar; // [1, e1-1] valid; [0] unused
    std::vector<double> v_hat;     // [0, e1-1]
    std::vector<double> v_bar_rel; // [1, e1-1] valid; [0] unused
    double log_one_minus_p = 0.0;  // log omega_0 - log sum_{0<=x<e1} e^{V(x)}
    double log_m2eh = 0.0;         // log sum_{0<=x<e1} e^{V(x)} = log(M2 e^H)

    double h(std::int64_t x) const { return std::exp(log_h[static_cast<std::size_t>(x)]); }
    double g(std::int64_t x) const { return std::exp(log_g[static_cast<std::size_t>(x)]); }
};

// Requires env to cover [0, e1] and e1 >= 2 (DegenerateValley otherwise;
// single-step valleys have no interior and are handled in closed form by the
// crossing sampler).
HTransformPair build_h_transforms(const WindowEnvironment& env, std::int64_t e1);

struct FailureMoments {
    double mean = 0.0;          // E_omega[F], F the attempt duration given failure
    double second = 0.0;        // E_omega[F^2], same conditioning
    double one_minus_p = 0.0;   // success probability of a single attempt
    bool left_certified = false;
};

// Left sums run over env sites below 0: certified truncation under OpenLeft,
// exact under ReflectLeft (but note the reflected left side is NOT the
// object the annealed formulas integrate over; see the module docs).
FailureMoments failure_moments(const WindowEnvironment& env, const HTransformPair& pair,
                               double rel_tol = 1e-12);

// Upper bound on E_omega[G], the duration of the successful crossing:
// 2 * sum_{0<=i<=j<e1} exp(Vbar(j) - Vbar(i)). An inequality, not a moment.
double success_mean_bound(const HTransformPair& pair);

} // namespace valleywalk

#endif
