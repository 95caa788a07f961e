#ifndef VALLEYWALK_QUADRATURE_HPP
#define VALLEYWALK_QUADRATURE_HPP

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace valleywalk {

// Integral of f over (0,1) where f may have integrable endpoint singularities
// (densities against rho^s blow up at either end once s leaves the central
// range). Each half is pushed to a semi-infinite axis by w = e^{-u} so the
// Gauss-Kronrod nodes cluster where the mass is.
template <class F>
double integrate_unit_interval(F&& f, double* err_out = nullptr) {
    using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
    const double log2 = std::log(2.0);
    double e1 = 0.0, e2 = 0.0;
    // Once w drops below the resolution of double, f(w) or f(1-w) would be
    // evaluated at the endpoint itself and can blow up even though the
    // transformed integrand f(.)*w tends to 0 for every integrable
    // singularity. Returning 0 there is exact to well under the tolerance.
    auto lower = [&](double u) {
        double w = std::exp(-u);
        if (w == 0.0) return 0.0;
        return f(w) * w;
    };
    auto upper = [&](double u) {
        double w = std::exp(-u);
        double x = 1.0 - w;
        if (x == 1.0) return 0.0;
        return f(x) * w;
    };
    double a = gk::integrate(lower, log2, std::numeric_limits<double>::infinity(), 12, 1e-12, &e1);
    double b = gk::integrate(upper, log2, std::numeric_limits<double>::infinity(), 12, 1e-12, &e2);
    if (err_out) *err_out = e1 + e2;
    return a + b;
}

} // namespace valleywalk

#endif
