#include "valleywalk/quenched.hpp"

#include "valleywalk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace valleywalk {

namespace {

// omega == 1 is a wall: log rho = -inf, and every sum running past the wall
// dies. The streaming loops below reset their accumulators there, which
// reproduces the exact wall limit (rho -> 0) without special-casing NaNs.
double log_rho_site(double w) {
    if (w >= 1.0) return neg_inf;
    return std::log1p(-w) - std::log(w);
}

void check_window(const WindowEnvironment& env, std::int64_t a, std::int64_t b) {
    if (!env.contains(a) || !env.contains(b) || a >= b) {
        throw std::invalid_argument("quenched: bad [a, b] range for window");
    }
}

// V on [from, to] anchored V(from) = 0.
std::vector<double> rel_potential(const WindowEnvironment& env, std::int64_t from,
                                  std::int64_t to) {
    std::vector<double> v(static_cast<std::size_t>(to - from + 1));
    v[0] = 0.0;
    for (std::int64_t x = from + 1; x <= to; ++x) {
        v[static_cast<std::size_t>(x - from)] =
            v[static_cast<std::size_t>(x - from - 1)] + log_rho_site(env.omega_at(x));
    }
    return v;
}

// Downward scan of sum_{j < anchor} e^{-V(j)} with V(anchor) = 0. Stops when
// the geometric certificate fires, a wall seals the rest exactly, or the
// window runs out. Optionally keeps the V values for the second pass the
// variance and R- computations need.
struct LeftScan {
    double log_sum = neg_inf;  // over j in [bottom, anchor-1]
    std::vector<double> v;     // V(j), ascending j in [bottom, anchor-1]; empty unless collected
    std::int64_t bottom = 0;
    bool sealed = false;
    bool certified = false;
};

LeftScan scan_left_tail(const WindowEnvironment& env, std::int64_t anchor, double rel_tol,
                        bool collect_values) {
    LeftScan out;
    out.bottom = anchor;
    LogSumAcc acc;
    // when the caller derives secondary series (C_j^2 terms, R-) from the
    // collected stretch, scan three extra decades so their own certificates
    // have room to fire
    TailCertificate cert(collect_values ? rel_tol * 1e-3 : rel_tol);
    double v_cur = 0.0; // V(j) while descending
    for (std::int64_t j = anchor - 1; j >= env.left; --j) {
        const double lr = log_rho_site(env.omega_at(j + 1));
        if (lr == neg_inf) { // wall at j+1: V(j) = +inf, nothing below survives
            out.sealed = true;
            out.certified = true;
            break;
        }
        v_cur -= lr;
        acc.add(-v_cur);
        cert.observe(-v_cur);
        if (collect_values) out.v.push_back(v_cur);
        out.bottom = j;
        if (cert.certified(acc.value())) {
            out.certified = true;
            break;
        }
    }
    if (collect_values) std::reverse(out.v.begin(), out.v.end());
    out.log_sum = acc.value();
    return out;
}

} // namespace

double exit_probability(const WindowEnvironment& env, std::int64_t a, std::int64_t x,
                        std::int64_t b) {
    check_window(env, a, b);
    if (x < a || x > b) throw std::invalid_argument("exit_probability: x outside [a, b]");
    if (x == a) return 0.0;
    if (x == b) return 1.0;
    const auto v = rel_potential(env, a, b);
    LogSumAcc num;
    LogSumAcc den;
    for (std::int64_t k = a; k < b; ++k) {
        const double vk = v[static_cast<std::size_t>(k - a)];
        if (k < x) num.add(vk);
        den.add(vk);
    }
    return std::exp(num.value() - den.value());
}

double escape_probability(const WindowEnvironment& env, std::int64_t a, std::int64_t x) {
    if (!env.contains(a) || !env.contains(x) || x < a) {
        throw std::invalid_argument("escape_probability: need a <= x inside window");
    }
    if (x == a) return 0.0;
    LogSumAcc num;
    LogSumAcc den;
    TailCertificate cert(1e-12);
    bool certified = false;
    double v_cur = 0.0;
    for (std::int64_t k = a; k <= env.right(); ++k) {
        if (k > a) v_cur += log_rho_site(env.omega_at(k));
        if (v_cur == neg_inf) { // wall: the tail beyond is exactly zero
            certified = true;
            break;
        }
        if (k < x) num.add(v_cur);
        den.add(v_cur);
        cert.observe(v_cur);
        if (k >= x && cert.certified(den.value())) {
            certified = true;
            break;
        }
    }
    if (!certified) {
        throw TruncationUncertified("escape_probability: right tail not certified inside window");
    }
    return std::exp(num.value() - den.value());
}

double expected_hitting_time(const WindowEnvironment& env, std::int64_t a, std::int64_t b) {
    check_window(env, a, b);
    LogSumAcc total; // sum over j in [a, b) of T_j, the j -> j+1 crossing times

    if (env.boundary == WindowEnvironment::Boundary::ReflectLeft) {
        // exact recursion from the wall: T_L = 1, T_j = 1/omega_j + rho_j T_{j-1}
        double log_t = 0.0;
        for (std::int64_t j = env.left + 1; j < b; ++j) {
            const double w = env.omega_at(j);
            log_t = log_add(-std::log(w), log_rho_site(w) + log_t);
            if (j >= a) total.add(log_t);
        }
        if (a == env.left) total.add(0.0); // T_L itself
        return std::exp(total.value());
    }

    // open left: T_j = 1 + 2 e^{V(j)} sum_{l<j} e^{-V(l)}, left tail certified
    const LeftScan left = scan_left_tail(env, a, 1e-12, false);
    if (!left.certified) {
        throw TruncationUncertified("expected_hitting_time: left tail not certified");
    }
    LogSumAcc d; // sum_{l<j} e^{-V(l)}, anchored at a; resets at walls
    d.add(left.log_sum);
    double v_cur = 0.0;
    for (std::int64_t j = a; j < b; ++j) {
        if (j > a) v_cur += log_rho_site(env.omega_at(j));
        if (v_cur == neg_inf) { // wall at j: this crossing is one deterministic step
            total.add(0.0);
            v_cur = 0.0;
            d = LogSumAcc();
            d.add(0.0); // e^{-V(j)} with the new anchor
            continue;
        }
        total.add(log_add(0.0, std::numbers::ln2 + v_cur + d.value()));
        d.add(-v_cur);
    }
    return std::exp(total.value());
}

double hitting_time_variance(const WindowEnvironment& env, std::int64_t a, std::int64_t b) {
    check_window(env, a, b);

    // Var_{a}(tau(b)) = 4 sum_{a<=k<b} e^{V(k)} sum_{j<k} (e^{V(j)}+e^{V(j+1)}) C_j^2
    // with C_j = sum_{l<=j} e^{-V(l)}; streamed in one upward pass.
    const bool reflect = env.boundary == WindowEnvironment::Boundary::ReflectLeft;

    LogSumAcc c;   // C_p
    LogSumAcc inner; // sum over j < p of (e^{V(j)}+e^{V(j+1)}) C_j^2
    LogSumAcc var;
    std::int64_t start = 0;
    double v_cur = 0.0;

    if (reflect) {
        start = env.left;
    } else {
        LeftScan left = scan_left_tail(env, a, 1e-12, true);
        if (!left.certified) {
            throw TruncationUncertified("hitting_time_variance: left tail not certified");
        }
        // replay the collected stretch upward to build C_j and the j-terms,
        // then certify the j-term remainder below the stretch
        std::vector<double> terms;
        terms.reserve(left.v.size());
        for (std::size_t idx = 0; idx < left.v.size(); ++idx) {
            const double vj = left.v[idx];
            c.add(-vj);
            const double vj1 = idx + 1 < left.v.size() ? left.v[idx + 1] : 0.0; // V(a) = 0
            const double term = log_add(vj, vj1) + 2.0 * c.value();
            terms.push_back(term);
            inner.add(term);
        }
        if (!left.sealed && !terms.empty()) {
            TailCertificate cert(1e-12);
            for (auto it = terms.rbegin(); it != terms.rend(); ++it) cert.observe(*it);
            if (!cert.certified(inner.value())) {
                throw TruncationUncertified("hitting_time_variance: inner left sum not certified");
            }
        }
        start = a;
    }

    for (std::int64_t p = start; p < b; ++p) {
        if (p > start) v_cur += log_rho_site(env.omega_at(p));
        const bool wall = (reflect && p == env.left) || v_cur == neg_inf;
        if (wall) {
            // crossing from a wall is deterministic; restart the anchor here
            v_cur = 0.0;
            c = LogSumAcc();
            inner = LogSumAcc();
        } else if (p >= a) {
            var.add(v_cur + inner.value());
        }
        c.add(-v_cur);
        if (p + 1 < b) {
            const double v_next = v_cur + log_rho_site(env.omega_at(p + 1));
            inner.add(log_add(v_cur, v_next) + 2.0 * c.value());
        }
    }
    return 4.0 * std::exp(var.value());
}

HTransformPair build_h_transforms(const WindowEnvironment& env, std::int64_t e1) {
    if (!env.contains(0) || !env.contains(e1) || e1 < 1) {
        throw std::invalid_argument("build_h_transforms: window must cover [0, e1]");
    }
    if (e1 < 2) throw DegenerateValley("build_h_transforms: e1 < 2 leaves no interior");
    for (std::int64_t x = 1; x < e1; ++x) {
        const double w = env.omega_at(x);
        if (!(w > 0.0 && w < 1.0)) {
            throw std::invalid_argument("build_h_transforms: interior omega must lie in (0,1)");
        }
    }

    HTransformPair pair;
    pair.e1 = e1;
    const std::size_t n = static_cast<std::size_t>(e1) + 1;
    pair.omega.resize(n);
    for (std::int64_t x = 0; x <= e1; ++x) pair.omega[static_cast<std::size_t>(x)] = env.omega_at(x);

    const auto v = rel_potential(env, 0, e1);
    // sums run over k in [0, e1): prefix[i] includes v[i], so g(x), the
    // chance of reaching e1 before 0, needs prefix[x-1], and the full mass
    // sits at prefix[e1-1]
    const auto prefix = log_prefix_sums(std::span<const double>(v.data(), static_cast<std::size_t>(e1)));
    const auto suffix = log_suffix_sums(std::span<const double>(v.data(), static_cast<std::size_t>(e1)));
    const double total = prefix[static_cast<std::size_t>(e1 - 1)];

    pair.log_h.resize(n);
    pair.log_g.resize(n);
    for (std::int64_t x = 0; x < e1; ++x) {
        pair.log_h[static_cast<std::size_t>(x)] = suffix[static_cast<std::size_t>(x)] - total;
    }
    pair.log_h[static_cast<std::size_t>(e1)] = neg_inf; // success never returns to 0 from e1
    pair.log_g[0] = neg_inf;                            // failure never reaches e1 from 0
    for (std::int64_t x = 1; x <= e1; ++x) {
        pair.log_g[static_cast<std::size_t>(x)] = prefix[static_cast<std::size_t>(x - 1)] - total;
    }

    pair.omega_hat.assign(n, 0.0);
    pair.omega_bar.assign(n, 0.0);
    pair.v_hat.resize(n - 1);
    pair.v_bar_rel.assign(n - 1, 0.0);
    pair.v_hat[0] = 0.0;

    for (std::int64_t x = 1; x < e1; ++x) {
        const std::size_t i = static_cast<std::size_t>(x);
        const double w = pair.omega[i];
        const double log_w = std::log(w);
        const double log_1mw = std::log1p(-w);
        const double log_rho = log_1mw - log_w;

        pair.omega_hat[i] = w * std::exp(pair.log_h[i + 1] - pair.log_h[i]);
        pair.omega_bar[i] = w * std::exp(pair.log_g[i + 1] - pair.log_g[i]);

        // harmonic-ratio forms: no cancellation even when h or g is tiny
        const double log_rho_hat = log_1mw + pair.log_h[i - 1] - log_w - pair.log_h[i + 1];
        pair.v_hat[i] = pair.v_hat[i - 1] + log_rho_hat;
        if (x >= 2) {
            const double log_rho_bar = log_1mw + pair.log_g[i - 1] - log_w - pair.log_g[i + 1];
            pair.v_bar_rel[i] = pair.v_bar_rel[i - 1] + log_rho_bar;
            if (log_rho_bar > log_rho + 1e-6) {
                throw std::logic_error("build_h_transforms: success potential rose faster than V");
            }
        }
        if (log_rho_hat < log_rho - 1e-6) {
            throw std::logic_error("build_h_transforms: failure potential rose slower than V");
        }
    }
    // exact boundary kernels: the failing walk never steps to e1, the
    // succeeding walk never steps back to 0
    pair.omega_hat[static_cast<std::size_t>(e1 - 1)] = 0.0;
    pair.omega_bar[1] = 1.0;

    pair.log_m2eh = total;
    pair.log_one_minus_p = std::log(pair.omega[0]) - total;
    return pair;
}

namespace {

// One step of the single-crossing moment pair
//   a_x = 1 + r (1 + a_prev)
//   s_x = (1 + r) + 2 r (a_prev + a_x + a_prev a_x) + r s_prev
// in log domain, where r is the mean number of returns before the crossing
// completes (rho for an upward crossing of the plain chain, 1/rho_hat for a
// downward crossing of the conditioned one). r = 0, i.e. log_r = -inf, makes
// a = 1 and s = 1 exactly, which is how walls and the reflecting edge enter.
void crossing_moment_step(double log_r, double& log_a, double& log_s) {
    const double log_a_new = log_add(0.0, log_r + log_add(0.0, log_a));
    LogSumAcc mix; // a_prev + a_new + a_prev * a_new
    mix.add(log_a);
    mix.add(log_a_new);
    mix.add(log_a + log_a_new);
    LogSumAcc s_new;
    s_new.add(log_add(0.0, log_r));
    s_new.add(std::numbers::ln2 + log_r + mix.value());
    s_new.add(log_r + log_s);
    log_a = log_a_new;
    log_s = s_new.value();
}

} // namespace

FailureMoments failure_moments(const WindowEnvironment& env, const HTransformPair& pair,
                               double rel_tol) {
    const std::int64_t e1 = pair.e1;
    const bool reflect = env.boundary == WindowEnvironment::Boundary::ReflectLeft;

    // The scan fixes where the left recurrence may start: at a wall, at the
    // reflecting edge, or once everything further out is certified negligible.
    // Truncating the sweep at `bottom` drops terms of order e^{V(-1)-V(bottom)},
    // which the certificate keeps three decades under rel_tol.
    const LeftScan left = scan_left_tail(env, 0, rel_tol, true);
    if (!reflect && !left.certified) {
        throw TruncationUncertified("failure_moments: left tail not certified");
    }

    FailureMoments out;
    out.left_certified = left.certified || reflect; // reflected sums truncate exactly
    const double w0 = pair.omega[0];

    // A failed attempt either steps to -1 (always a failure) and ends with one
    // upward crossing -1 -> 0, or steps to 1 and fails with probability h(1),
    // in which case the rest is one downward crossing 1 -> 0 of the
    // h-transformed chain. Either way F = 1 + a single-crossing duration.

    // upward crossing of the plain chain, swept from the bottom
    double log_a = neg_inf, log_s = neg_inf;
    for (std::int64_t x = left.bottom; x <= -1; ++x) {
        const double log_rho =
            (reflect && x == env.left) ? neg_inf : log_rho_site(env.omega_at(x));
        crossing_moment_step(log_rho, log_a, log_s);
    }

    // downward crossing of the conditioned chain, swept from the top; the
    // exact omega_hat(e1-1) = 0 seeds a = s = 1 there
    double log_ah = neg_inf, log_sh = neg_inf;
    for (std::int64_t y = e1 - 1; y >= 1; --y) {
        const double wh = pair.omega_hat[static_cast<std::size_t>(y)];
        const double log_inv_rho = wh == 0.0 ? neg_inf : std::log(wh) - std::log1p(-wh);
        crossing_moment_step(log_inv_rho, log_ah, log_sh);
    }

    out.one_minus_p = std::exp(pair.log_one_minus_p);
    const double p_fail = 1.0 - out.one_minus_p;
    const double h1 = -std::expm1(-pair.log_m2eh); // P_1(hit 0 before e1)
    const double a_l = std::exp(log_a), s_l = std::exp(log_s);
    const double a_h = std::exp(log_ah), s_h = std::exp(log_sh);
    out.mean = ((1.0 - w0) * (1.0 + a_l) + w0 * h1 * (1.0 + a_h)) / p_fail;
    out.second =
        ((1.0 - w0) * (1.0 + 2.0 * a_l + s_l) + w0 * h1 * (1.0 + 2.0 * a_h + s_h)) / p_fail;
    return out;
}

double success_mean_bound(const HTransformPair& pair) {
    // 2 [ 1 + sum_{1<=i<=j<=e1-1} e^{Vbar(j)-Vbar(i)} ], streamed over j
    LogSumAcc acc;
    LogSumAcc c_bar; // sum_{i<=j} e^{-Vbar(i)}
    for (std::int64_t j = 1; j < pair.e1; ++j) {
        const double vb = pair.v_bar_rel[static_cast<std::size_t>(j)];
        c_bar.add(-vb);
        acc.add(vb + c_bar.value());
    }
    return 2.0 * std::exp(log_add(0.0, acc.value()));
}

} // namespace valleywalk
