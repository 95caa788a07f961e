#include "valleywalk/env_model.hpp"

#include "valleywalk/errors.hpp"
#include "valleywalk/logsum.hpp"
#include "valleywalk/quadrature.hpp"
#include "valleywalk/stats.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace valleywalk {

namespace {

double log_beta_fn(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

void validate_family(const Family& fam) {
    if (const auto* bp = std::get_if<BetaParams>(&fam)) {
        if (!(bp->alpha > 0.0) || !(bp->beta > 0.0))
            throw ConfigError("beta family needs positive shape parameters");
    } else if (const auto* da = std::get_if<DiscreteAtoms>(&fam)) {
        if (da->omega.empty() || da->omega.size() != da->prob.size())
            throw ConfigError("discrete family: atom/probability size mismatch");
        double tot = 0.0;
        for (std::size_t i = 0; i < da->omega.size(); ++i) {
            if (!(da->omega[i] > 0.0 && da->omega[i] < 1.0))
                throw ConfigError("discrete family: omega atoms must lie in (0,1)");
            if (!(da->prob[i] > 0.0)) throw ConfigError("discrete family: probabilities must be positive");
            tot += da->prob[i];
        }
        if (std::fabs(tot - 1.0) > 1e-12) throw ConfigError("discrete family: probabilities must sum to 1");
    } else {
        const auto& cf = std::get<CustomFamily>(fam);
        if (!cf.sample_omega || !cf.moment_rho)
            throw ConfigError("custom family needs both a sampler and a moment oracle");
    }
}

// Rationality probe via continued fractions: is x within tol of p/q, q <= 64?
bool near_small_rational(double x, int max_den, double tol) {
    double a = std::fabs(x);
    // walk the continued fraction of a, tracking convergent denominators
    long p0 = 1, q0 = 0, p1 = 0, q1 = 1; // convergents of the empty/first stage
    double r = a;
    for (int it = 0; it < 64; ++it) {
        double fl = std::floor(r);
        long ai = static_cast<long>(fl);
        long p2 = ai * p0 + p1;
        long q2 = ai * q0 + q1;
        if (q2 > max_den) break;
        if (q2 > 0 && std::fabs(a - static_cast<double>(p2) / static_cast<double>(q2)) <= tol)
            return true;
        p1 = p0; q1 = q0; p0 = p2; q0 = q2;
        double frac = r - fl;
        if (frac < 1e-15) break;
        r = 1.0 / frac;
    }
    return false;
}

void check_non_lattice(const DiscreteAtoms& atoms) {
    std::vector<double> logs;
    for (double w : atoms.omega) {
        double lr = std::log((1.0 - w) / w);
        if (std::fabs(lr) > 1e-14) logs.push_back(lr);
    }
    if (logs.empty())
        throw LatticeSupportError("log rho vanishes on every atom");
    if (logs.size() == 1)
        throw LatticeSupportError("single-atom log rho support is a lattice");
    for (std::size_t i = 0; i + 1 < logs.size(); ++i)
        for (std::size_t j = i + 1; j < logs.size(); ++j)
            if (!near_small_rational(logs[i] / logs[j], 64, 1e-9)) return;
    throw LatticeSupportError("pairwise log-rho ratios are all small rationals");
}

} // namespace

double family_moment_rho(const Family& fam, double s) {
    if (const auto* bp = std::get_if<BetaParams>(&fam)) {
        // E[rho^s] = B(alpha-s, beta+s) / B(alpha, beta)
        if (s >= bp->alpha || s <= -bp->beta) return pos_inf;
        return std::exp(log_beta_fn(bp->alpha - s, bp->beta + s) - log_beta_fn(bp->alpha, bp->beta));
    }
    if (const auto* da = std::get_if<DiscreteAtoms>(&fam)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < da->omega.size(); ++i) {
            double rho = (1.0 - da->omega[i]) / da->omega[i];
            acc += da->prob[i] * std::pow(rho, s);
        }
        return acc;
    }
    return std::get<CustomFamily>(fam).moment_rho(s);
}

double family_sample_omega(const Family& fam, Rng& rng) {
    if (const auto* bp = std::get_if<BetaParams>(&fam)) return rng.beta(bp->alpha, bp->beta);
    if (const auto* da = std::get_if<DiscreteAtoms>(&fam)) {
        double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < da->omega.size(); ++i) {
            acc += da->prob[i];
            if (u <= acc) return da->omega[i];
        }
        return da->omega.back();
    }
    Rng& r = rng;
    return std::get<CustomFamily>(fam).sample_omega(r);
}

double solve_kappa(const Family& fam, double tol) {
    auto log_moment = [&](double s) { return std::log(family_moment_rho(fam, s)); };

    // admissible upper end: stay below a divergence point and strictly below 2
    double hi = 2.0 - 1e-9;
    bool capped_by_divergence = false;
    if (const auto* bp = std::get_if<BetaParams>(&fam)) {
        if (bp->alpha <= 2.0) {
            hi = bp->alpha - 1e-9;
            capped_by_divergence = true;
        }
        if (hi <= 1e-6) throw DivergentMomentError("moment diverges throughout (0,2)");
    } else if (std::holds_alternative<CustomFamily>(fam)) {
        // probe for a finite region
        while (hi > 1e-6 && !std::isfinite(log_moment(hi))) {
            hi *= 0.5;
            capped_by_divergence = true;
        }
        if (hi <= 1e-6) throw DivergentMomentError("moment oracle diverges on all of (0,2)");
    }

    double lo = 1e-6;
    double flo = log_moment(lo);
    double fhi = log_moment(hi);
    if (!std::isfinite(fhi) && !capped_by_divergence)
        throw DivergentMomentError("moment diverges inside the root bracket");
    if (flo >= 0.0)
        throw NoRootError("E[rho^s] >= 1 already at s ~ 0; drift condition fails");
    if (fhi < 0.0) {
        if (capped_by_divergence)
            throw DivergentMomentError("moment diverges before E[rho^s] returns to 1");
        throw NoRootError("E[rho^s] stays below 1 on (0,2); no admissible root");
    }

    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = log_moment(mid);
        if (fm < 0.0) lo = mid; else hi = mid;
    }
    double kappa = 0.5 * (lo + hi);
    if (std::fabs(family_moment_rho(fam, kappa) - 1.0) > tol)
        throw NoRootError("bisection failed to meet the moment tolerance");
    return kappa;
}

EnvironmentModel EnvironmentModel::create(Family fam, double kappa_tol) {
    validate_family(fam);
    EnvironmentModel m(std::move(fam));
    // structural rejection first: on a lattice the tail framework is out
    // regardless of whether the moment equation happens to have a root
    if (const auto* da = std::get_if<DiscreteAtoms>(&m.family_)) check_non_lattice(*da);
    m.kappa_ = solve_kappa(m.family_, kappa_tol);
    m.fill_caches();

    if (m.rho_log_moment(0.0) >= 0.0)
        throw ConfigError("E[log rho] must be negative");

    // custom models: Monte Carlo self-check of the moment oracle at kappa
    if (std::holds_alternative<CustomFamily>(m.family_)) {
        Rng rng = make_stream(0x5e1f7e57u, StreamPurpose::SelfTest, 0);
        MeanVar mv;
        double k = *m.kappa_;
        for (int i = 0; i < 100000; ++i) {
            double w = m.sample_omega(rng);
            mv.add(std::pow((1.0 - w) / w, k));
        }
        double se = mv.std_error();
        if (se > 0.0 && std::fabs(mv.mean - 1.0) > 5.0 * se)
            throw ConfigError("custom sampler disagrees with its moment oracle at kappa");
    }
    return m;
}

EnvironmentModel EnvironmentModel::plumbing(Family fam) {
    validate_family(fam);
    EnvironmentModel m(std::move(fam));
    try {
        if (const auto* da = std::get_if<DiscreteAtoms>(&m.family_)) check_non_lattice(*da);
        m.kappa_ = solve_kappa(m.family_, 1e-8);
    } catch (const std::runtime_error&) {
        m.kappa_.reset();
    }
    m.fill_caches();
    return m;
}

void EnvironmentModel::fill_caches() {
    mean_rho_ = family_moment_rho(family_, 1.0);
    if (kappa_) rho_log_at_kappa_ = rho_log_moment(*kappa_);
}

void EnvironmentModel::override_kappa(double kappa) {
    if (!kappa_) throw MethodUnavailable("no solved root to check the override against");
    if (std::fabs(kappa - *kappa_) > 1e-6) {
        std::ostringstream os;
        os << "kappa override " << kappa << " is inconsistent with solved root " << *kappa_;
        throw ConfigError(os.str());
    }
    kappa_ = kappa;
    rho_log_at_kappa_ = rho_log_moment(kappa);
}

double EnvironmentModel::kappa() const {
    if (!kappa_) throw MethodUnavailable("model has no resolved kappa");
    return *kappa_;
}

double EnvironmentModel::rho_log_at_kappa() const {
    if (!kappa_) throw MethodUnavailable("model has no resolved kappa");
    return rho_log_at_kappa_;
}

double EnvironmentModel::moment_rho(double s) const { return family_moment_rho(family_, s); }

double EnvironmentModel::rho_log_moment(double s) const {
    if (const auto* bp = std::get_if<BetaParams>(&family_)) {
        if (kappa_ && std::fabs(s - *kappa_) < 1e-12) {
            // at the root the Beta moment ratio collapses to a digamma difference
            return boost::math::digamma(bp->alpha) - boost::math::digamma(bp->beta);
        }
        double a = bp->alpha, b = bp->beta;
        double lb = log_beta_fn(a, b);
        return integrate_unit_interval([a, b, s, lb](double w) {
            double log_rho = std::log1p(-w) - std::log(w);
            double log_density = (a - 1.0) * std::log(w) + (b - 1.0) * std::log1p(-w) - lb;
            return std::exp(s * log_rho + log_density) * log_rho;
        });
    }
    if (const auto* da = std::get_if<DiscreteAtoms>(&family_)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < da->omega.size(); ++i) {
            double rho = (1.0 - da->omega[i]) / da->omega[i];
            acc += da->prob[i] * std::pow(rho, s) * std::log(rho);
        }
        return acc;
    }
    // custom: differentiate the moment oracle
    const auto& cf = std::get<CustomFamily>(family_);
    double h = 1e-5 * std::max(1.0, std::fabs(s));
    return (cf.moment_rho(s + h) - cf.moment_rho(s - h)) / (2.0 * h);
}

double EnvironmentModel::speed() const {
    if (kappa_ && std::fabs(*kappa_ - 1.0) <= 1e-9) return 0.0; // boundary is exact
    double er = mean_rho_;
    if (er < 1.0) return (1.0 - er) / (1.0 + er);
    return 0.0; // sub-ballistic regime
}

std::vector<double> EnvironmentModel::sample_omega_block(std::uint64_t seed, std::uint64_t stream,
                                                         std::size_t count) const {
    Rng rng = make_stream(seed, StreamPurpose::Environment, stream);
    std::vector<double> out(count);
    for (auto& w : out) w = family_sample_omega(family_, rng);
    return out;
}

const BetaParams& EnvironmentModel::beta_params() const {
    if (const auto* bp = std::get_if<BetaParams>(&family_)) return *bp;
    throw MethodUnavailable("not a beta family model");
}

std::string EnvironmentModel::label() const {
    if (const auto* bp = std::get_if<BetaParams>(&family_)) {
        std::ostringstream os;
        os << "beta(" << bp->alpha << "," << bp->beta << ")";
        return os.str();
    }
    if (std::holds_alternative<DiscreteAtoms>(family_)) return "discrete";
    return std::get<CustomFamily>(family_).label;
}

} // namespace valleywalk
