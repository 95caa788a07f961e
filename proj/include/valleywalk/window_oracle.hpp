#ifndef VALLEYWALK_WINDOW_ORACLE_HPP
#define VALLEYWALK_WINDOW_ORACLE_HPP

// Ground-truth reference for finite reflected windows, used by the
// quenched-check gate and the unit tests. Everything here goes through a
// generic tridiagonal solve of the first-step equations in long double;
// deliberately no log-domain tricks and no shared code with the production
// formulas, so the two routes stay independent.

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace valleywalk::oracle {

// lower[i] x_{i-1} + diag[i] x_i + upper[i] x_{i+1} = rhs[i], Thomas sweep
inline std::vector<long double> solve_tridiagonal(std::vector<long double> lower,
                                                  std::vector<long double> diag,
                                                  std::vector<long double> upper,
                                                  std::vector<long double> rhs) {
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n || n == 0) {
        throw std::invalid_argument("solve_tridiagonal: ragged bands");
    }
    for (std::size_t i = 1; i < n; ++i) {
        const long double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    std::vector<long double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
    }
    return x;
}

// omega[0..m] are the cells of sites a..b (m = b-a); a and b absorbing.
// Returns P_x(hit b before a) for the offset x in (0, m).
inline long double exit_probability(const std::vector<double>& omega, std::size_t x) {
    const std::size_t m = omega.size() - 1;
    if (x == 0) return 0.0L;
    if (x >= m) return 1.0L;
    const std::size_t n = m - 1; // unknowns p_1..p_{m-1}
    std::vector<long double> lo(n), di(n, 1.0L), up(n), rhs(n, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
        const long double w = omega[i + 1];
        lo[i] = i == 0 ? 0.0L : -(1.0L - w);
        up[i] = i + 1 == n ? 0.0L : -w;
        if (i + 1 == n) rhs[i] = w; // p_b = 1
    }
    return solve_tridiagonal(lo, di, up, rhs)[x - 1];
}

// omega[0..m] are the cells of sites L..b; site L reflects (its omega is
// treated as 1), b absorbs. Returns (E_x[tau(b)], Var_x(tau(b))) for the
// offset x in [0, m].
struct TauMoments {
    long double mean = 0.0L;
    long double var = 0.0L;
};

inline TauMoments tau_moments(const std::vector<double>& omega, std::size_t x) {
    const std::size_t m = omega.size() - 1;
    if (x >= m) return {0.0L, 0.0L};
    const std::size_t n = m; // unknowns u_0..u_{m-1}
    std::vector<long double> lo(n), di(n, 1.0L), up(n), rhs(n, 1.0L);
    for (std::size_t i = 0; i < n; ++i) {
        const long double w = i == 0 ? 1.0L : static_cast<long double>(omega[i]);
        lo[i] = i == 0 ? 0.0L : -(1.0L - w);
        up[i] = i + 1 == n ? 0.0L : -w; // u at b is 0
    }
    const auto u = solve_tridiagonal(lo, di, up, rhs);

    // second moments share the matrix; rhs_i = 1 + 2(w u_{i+1} + (1-w) u_{i-1})
    std::vector<long double> rhs2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const long double w = i == 0 ? 1.0L : static_cast<long double>(omega[i]);
        const long double right = i + 1 < n ? u[i + 1] : 0.0L;
        const long double left = i == 0 ? 0.0L : u[i - 1];
        rhs2[i] = 1.0L + 2.0L * (w * right + (1.0L - w) * left);
    }
    const auto s = solve_tridiagonal(lo, di, up, rhs2);
    return {u[x], s[x] - u[x] * u[x]};
}

} // namespace valleywalk::oracle

#endif
