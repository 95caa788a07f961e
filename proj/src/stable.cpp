#include "valleywalk/stable.hpp"

#include "valleywalk/errors.hpp"
#include "valleywalk/logsum.hpp"
#include "valleywalk/potential.hpp"
#include "valleywalk/stats.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace valleywalk {

namespace {

constexpr double kPi = std::numbers::pi;

// base CF at t >= 0 (negative t by conjugation in the caller)
std::complex<double> base_cf_pos(StableLaw::Form form, double index, double t) {
    if (t == 0.0) return {1.0, 0.0};
    if (form == StableLaw::Form::CA1) {
        return std::exp(std::complex<double>(-kPi * t / 2.0, -t * std::log(t)));
    }
    const double half = kPi * index / 2.0;
    const double c_abs = std::abs(std::cos(half));
    const double tv = std::tan(half);
    const double mag = c_abs * std::pow(t, index);
    // exp(-mag (1 - i tv)); on (1,2) this is exactly exp((-it)^index)
    return std::exp(std::complex<double>(-mag, mag * tv));
}

// Chambers-Mallows-Stuck draw for the fully skewed (beta = 1) unit law in
// Weron's parameterization, then rescaled into our normalization.
double base_sample(StableLaw::Form form, double index, Rng& rng) {
    const double u = kPi * (rng.uniform() - 0.5); // Uniform(-pi/2, pi/2)
    const double w = rng.exponential();
    if (form == StableLaw::Form::CA1) {
        const double half = kPi / 2.0;
        const double x = (2.0 / kPi) * ((half + u) * std::tan(u) -
                                        std::log((half * w * std::cos(u)) / (half + u)));
        // sigma = pi/2 with the index-1 scaling rule sigma X + (2/pi) sigma log sigma
        return half * x + std::log(half);
    }
    const double half = kPi * index / 2.0;
    const double tv = std::tan(half);
    const double b = std::atan(tv) / index;
    const double s = std::pow(1.0 + tv * tv, 0.5 / index);
    const double x = s * std::sin(index * (u + b)) / std::pow(std::cos(u), 1.0 / index) *
                     std::pow(std::cos(u - index * (u + b)) / w, (1.0 - index) / index);
    return std::pow(std::abs(std::cos(half)), 1.0 / index) * x;
}

double base_cdf(StableLaw::Form form, double index, double y) {
    const bool one_sided = form == StableLaw::Form::CA && index < 1.0;
    if (one_sided && y <= 0.0) return 0.0;

    // splice the power tail in before the inversion integral gets oscillatory
    constexpr double y_cut = 300.0;
    if (y <= -y_cut) return 0.0; // the skewed side is super-exponentially light
    if (y >= y_cut) {
        const double c_tail = form == StableLaw::Form::CA1
                                  ? 1.0
                                  : 1.0 / std::abs(std::tgamma(1.0 - index));
        return 1.0 - c_tail * std::pow(y, -index);
    }

    double t_max;
    if (form == StableLaw::Form::CA1) {
        t_max = 34.5 * 2.0 / kPi;
    } else {
        const double c_abs = std::abs(std::cos(kPi * index / 2.0));
        t_max = std::pow(34.5 / c_abs, 1.0 / index);
    }
    const auto integrand = [&](double t) {
        return std::imag(std::exp(std::complex<double>(0.0, -t * y)) *
                         base_cf_pos(form, index, t)) /
               t;
    };
    const double integral = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        integrand, 0.0, t_max, 15, 1e-10);
    return std::clamp(0.5 - integral / kPi, 0.0, 1.0);
}

} // namespace

std::complex<double> stable_cf(const StableLaw& law, double t) {
    const double u = law.scale * t;
    std::complex<double> base =
        u >= 0.0 ? base_cf_pos(law.form, law.index, u) : std::conj(base_cf_pos(law.form, law.index, -u));
    return std::exp(std::complex<double>(0.0, law.shift * t)) * base;
}

double stable_sample(const StableLaw& law, Rng& rng) {
    return law.scale * base_sample(law.form, law.index, rng) + law.shift;
}

std::vector<double> stable_sample(const StableLaw& law, std::size_t count, Rng& rng) {
    std::vector<double> out(count);
    for (double& x : out) x = stable_sample(law, rng);
    return out;
}

double stable_cdf(const StableLaw& law, double x) {
    return base_cdf(law.form, law.index, (x - law.shift) / law.scale);
}

double cf_distance(std::span<const double> samples, const StableLaw& law,
                   std::span<const double> t_grid) {
    double sup = 0.0;
    for (double t : t_grid) {
        sup = std::max(sup, std::abs(empirical_cf(samples, t) - stable_cf(law, t)));
    }
    return sup;
}

Estimate estimate_c_k(const EnvironmentModel& model, CkMethod method, std::size_t effort,
                      std::uint64_t seed) {
    const double kappa = model.kappa();

    if (method == CkMethod::GoldieK1) {
        if (std::abs(kappa - 1.0) > 1e-6) {
            throw MethodUnavailable("estimate_c_k: GoldieK1 needs kappa = 1");
        }
        return {1.0 / model.rho_log_at_kappa(), 0.0, Provenance::ClosedForm};
    }

    if (method == CkMethod::BetaClosedForm) {
        if (!model.is_beta()) {
            throw MethodUnavailable("estimate_c_k: BetaClosedForm needs a Beta family");
        }
        // For a Beta(alpha, beta) environment the perpetuity fixed point is
        // explicit: 1/(1+R) is Beta(kappa, beta) distributed, hence
        // P(R > x) ~ x^{-kappa} / (kappa B(kappa, beta)). At kappa = 1 this
        // reduces to beta = 1/E[rho log rho], Goldie's value, and away from 1
        // it matches the measured tail plateau (see the TailRegression path).
        const BetaParams bp = model.beta_params();
        return {1.0 / (kappa * boost::math::beta(kappa, bp.beta)), 0.0,
                Provenance::ClosedForm};
    }

    // tail regression on Kesten's series R = sum_k rho_0 ... rho_k
    if (effort < 1000) throw std::invalid_argument("estimate_c_k: effort too small");
    std::vector<double> rs(effort);
    for (std::size_t rep = 0; rep < effort; ++rep) {
        Rng rng = make_stream(seed, StreamPurpose::Perpetuity, rep);
        LogSumAcc acc;
        TailCertificate cert(1e-6);
        double log_prod = 0.0;
        for (int k = 0; k < (1 << 16); ++k) {
            const double w = model.sample_omega(rng);
            log_prod += std::log1p(-w) - std::log(w);
            acc.add(log_prod);
            cert.observe(log_prod);
            if (cert.certified(acc.value())) break;
        }
        rs[rep] = std::exp(acc.value());
    }
    std::sort(rs.begin(), rs.end());

    // plateau of x^kappa P(R > x) between the 90th percentile and the point
    // where only 10 samples remain
    const double x_lo = rs[static_cast<std::size_t>(0.90 * static_cast<double>(effort))];
    const double x_hi = rs[effort - 10];
    if (!(x_hi > x_lo)) throw std::invalid_argument("estimate_c_k: degenerate tail window");
    constexpr int kPoints = 25;
    MeanVar plateau;
    for (int i = 0; i < kPoints; ++i) {
        const double f = (static_cast<double>(i) + 0.5) / kPoints;
        const double x = x_lo * std::pow(x_hi / x_lo, f);
        const auto above = rs.end() - std::upper_bound(rs.begin(), rs.end(), x);
        const double p = static_cast<double>(above) / static_cast<double>(effort);
        plateau.add(std::pow(x, kappa) * p);
    }
    return {plateau.mean, std::sqrt(plateau.variance()), Provenance::MonteCarlo};
}

double LimitConstants::centering(double n) const {
    if (kappa > 1.0 + 1e-6) return n / v;
    if (kappa < 1.0 - 1e-6) return 0.0;
    return theorem_scale * n * std::log(n);
}

LimitConstants compute_constants(const EnvironmentModel& model, std::size_t excursions,
                                 std::uint64_t seed) {
    LimitConstants lc;
    lc.kappa = model.kappa();
    lc.rho_log = model.rho_log_at_kappa();

    Rng rng = make_stream(seed, StreamPurpose::Excursions, 0);
    MeanVar len_acc;
    MeanVar exp_acc;
    Excursion exc;
    for (std::size_t i = 0; i < excursions; ++i) {
        sample_excursion_into(model, rng, exc);
        len_acc.add(static_cast<double>(exc.length()));
        exp_acc.add(std::exp(lc.kappa * exc.v.back()));
    }
    lc.e1_mean = {len_acc.mean, len_acc.std_error(), Provenance::MonteCarlo};
    lc.exp_kv_e1 = {exp_acc.mean, exp_acc.std_error(), Provenance::MonteCarlo};

    const double one_minus = 1.0 - lc.exp_kv_e1.value;
    const double denom = lc.kappa * lc.rho_log * lc.e1_mean.value;
    const double rel_e1 = lc.e1_mean.se / lc.e1_mean.value;
    const double rel_1m = lc.exp_kv_e1.se / one_minus;

    lc.c_i = {one_minus * one_minus / denom,
              one_minus * one_minus / denom * std::sqrt(4.0 * rel_1m * rel_1m + rel_e1 * rel_e1),
              Provenance::MonteCarlo};
    lc.c_f = {one_minus / denom,
              one_minus / denom * std::sqrt(rel_1m * rel_1m + rel_e1 * rel_e1),
              Provenance::MonteCarlo};

    if (std::abs(lc.kappa - 1.0) <= 1e-6) {
        lc.c_k = estimate_c_k(model, CkMethod::GoldieK1, excursions, seed);
    } else if (model.is_beta()) {
        lc.c_k = estimate_c_k(model, CkMethod::BetaClosedForm, excursions, seed);
    } else {
        lc.c_k = estimate_c_k(model, CkMethod::TailRegression,
                              std::max<std::size_t>(1000, excursions / 5), seed);
    }

    const double rel_ck = lc.c_k.value > 0.0 ? lc.c_k.se / lc.c_k.value : 0.0;
    const double cu = lc.kappa * lc.rho_log * lc.e1_mean.value * lc.c_k.value * lc.c_k.value;
    lc.c_u = {cu, cu * std::sqrt(rel_e1 * rel_e1 + 4.0 * rel_ck * rel_ck), Provenance::Hybrid};
    const double ct_factor = std::pow(2.0, lc.kappa) * std::tgamma(lc.kappa + 1.0);
    lc.c_t = {ct_factor * lc.c_u.value, ct_factor * lc.c_u.se, Provenance::Hybrid};

    lc.v = model.speed();

    if (lc.kappa > 1.0 + 1e-6) {
        lc.theorem_scale =
            2.0 * std::pow(-kPi * lc.kappa * lc.kappa / std::sin(kPi * lc.kappa) *
                               lc.c_k.value * lc.c_k.value * lc.rho_log,
                           1.0 / lc.kappa);
        lc.centering_desc = "n/v";
    } else if (lc.kappa < 1.0 - 1e-6) {
        lc.theorem_scale = std::pow(
            std::tgamma(1.0 - lc.kappa) * lc.c_t.value / lc.e1_mean.value, 1.0 / lc.kappa);
        lc.centering_desc = "0";
    } else {
        lc.theorem_scale = 2.0 / lc.rho_log;
        lc.centering_desc = "(2/E[rho log rho]) * n * log(n)";
    }
    return lc;
}

TheoremPrediction theorem_prediction(const LimitConstants& constants, std::int64_t n) {
    TheoremPrediction pred;
    const double kappa = constants.kappa;
    const double nd = static_cast<double>(n);
    if (kappa > 1.0 + 1e-6) {
        pred.centering = nd / constants.v;
        pred.normalization = std::pow(nd, 1.0 / kappa);
        pred.law = {kappa, StableLaw::Form::CA, constants.theorem_scale, 0.0};
        return pred;
    }
    if (kappa < 1.0 - 1e-6) {
        // below index one there is no centering and the scale assembly is
        // less settled; emitted for exploration, not gated
        pred.centering = 0.0;
        pred.normalization = std::pow(nd, 1.0 / kappa);
        pred.law = {kappa, StableLaw::Form::CA, constants.theorem_scale, 0.0};
        pred.experimental = true;
        return pred;
    }
    const double s1 = constants.theorem_scale; // C_T / E[e1] = 2/E[rho log rho]
    const double gamma = boost::math::constants::euler<double>();
    pred.centering = s1 * nd * std::log(nd);
    pred.normalization = nd;
    // site count n corresponds to ~ n/E[e1] ladder crossings; the epoch-count
    // conversion contributes the -log E[e1] piece of the shift
    pred.law = {1.0, StableLaw::Form::CA1, s1,
                s1 * (1.0 - gamma - std::log(constants.e1_mean.value))};
    pred.experimental = true;
    return pred;
}

TheoremPrediction theorem_prediction(const EnvironmentModel& model, std::int64_t n,
                                     std::size_t excursions, std::uint64_t seed) {
    return theorem_prediction(compute_constants(model, excursions, seed), n);
}

} // namespace valleywalk
