#ifndef VALLEYWALK_STABLE_HPP
#define VALLEYWALK_STABLE_HPP

// Completely asymmetric stable laws (the tau-limit family), their samplers
// and characteristic functions, plus every constant the limit theorem needs:
// C_I, C_F, C_K, C_U, C_T, the walk speed, and the assembled predictions.

#include "valleywalk/env_model.hpp"
#include "valleywalk/rng.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace valleywalk {

// law = scale * BASE + shift, where BASE is the unit law of the given form.
// CA is the kappa != 1 family with CF exp(-|t|^k |cos(pi k/2)| (1 - i sgn(t)
// tan(pi k/2))); on (1,2) this is exactly the principal-value exp((-it)^k),
// below 1 it is the positive one-sided analogue. CA1 is the index-1 law with
// CF exp(-pi|t|/2 - i t log|t|).
struct StableLaw {
    enum class Form { CA, CA1 };

    double index = 1.5;
    Form form = Form::CA;
    double scale = 1.0;
    double shift = 0.0;
};

std::complex<double> stable_cf(const StableLaw& law, double t);

// Chambers-Mallows-Stuck draw of the base law, then the affine composition.
double stable_sample(const StableLaw& law, Rng& rng);
std::vector<double> stable_sample(const StableLaw& law, std::size_t count, Rng& rng);

// P(law <= x) by Gil-Pelaez inversion of the CF.
double stable_cdf(const StableLaw& law, double x);

// sup over the grid of |empirical CF - law CF|; the 4/sqrt(M) null band is
// the caller's to compare against.
double cf_distance(std::span<const double> samples, const StableLaw& law,
                   std::span<const double> t_grid);

enum class Provenance { ClosedForm, MonteCarlo, Hybrid };

struct Estimate {
    double value = 0.0;
    double se = 0.0;
    Provenance prov = Provenance::MonteCarlo;
};

enum class CkMethod { GoldieK1, TailRegression, BetaClosedForm };

// C_K, the tail constant of Kesten's perpetuity R = sum rho_0...rho_k:
//   GoldieK1        1/E[rho log rho], only at kappa = 1
//   BetaClosedForm  1/(kappa B(alpha, beta)), Beta families only
//   TailRegression  simulate R, fit the x^kappa P(R>x) plateau
// effort = Monte Carlo replicates for the regression path.
Estimate estimate_c_k(const EnvironmentModel& model, CkMethod method,
                      std::size_t effort = 200000, std::uint64_t seed = 0x9e3779b9u);

struct LimitConstants {
    double kappa = 0.0;
    Estimate e1_mean;          // E[e_1]
    Estimate exp_kv_e1;        // E[e^{kappa V(e_1)}]
    double rho_log = 0.0;      // E[rho^kappa log rho], quadrature
    Estimate c_i;
    Estimate c_f;
    Estimate c_k;
    Estimate c_u;              // kappa rho_log E[e1] c_k^2, by construction
    Estimate c_t;              // 2^kappa Gamma(kappa+1) c_u, by construction
    double v = 0.0;            // walk speed (0 for kappa <= 1)
    double theorem_scale = 0.0;
    std::string centering_desc;

    double centering(double n) const; // n/v, or scale * n log n at kappa <= 1
};

LimitConstants compute_constants(const EnvironmentModel& model, std::size_t excursions = 1000000,
                                 std::uint64_t seed = 0x9e3779b9u);

struct TheoremPrediction {
    double centering = 0.0;     // subtract this from tau(n)
    double normalization = 1.0; // then divide by this
    StableLaw law;              // and compare against this law
    bool experimental = false;  // kappa < 1 and kappa = 1 shift assemblies
};

TheoremPrediction theorem_prediction(const LimitConstants& constants, std::int64_t n);
TheoremPrediction theorem_prediction(const EnvironmentModel& model, std::int64_t n,
                                     std::size_t excursions = 1000000,
                                     std::uint64_t seed = 0x9e3779b9u);

} // namespace valleywalk

#endif
