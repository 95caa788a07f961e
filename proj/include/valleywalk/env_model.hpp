#ifndef VALLEYWALK_ENV_MODEL_HPP
#define VALLEYWALK_ENV_MODEL_HPP

// Environment model: the law of a single transition probability omega and
// the derived quantities of rho = (1-omega)/omega that the rest of the
// toolkit keys on, chiefly the root kappa of E[rho^s] = 1.

#include "valleywalk/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace valleywalk {

struct BetaParams {
    double alpha = 0.0;
    double beta = 0.0;
};

struct DiscreteAtoms {
    std::vector<double> omega; // values in (0,1)
    std::vector<double> prob;  // same length, positive, sums to 1
};

struct CustomFamily {
    std::function<double(Rng&)> sample_omega;    // one draw of omega
    std::function<double(double)> moment_rho;    // s -> E[rho^s], +inf if divergent
    std::string label = "custom";
};

using Family = std::variant<BetaParams, DiscreteAtoms, CustomFamily>;

double family_moment_rho(const Family& fam, double s);
double family_sample_omega(const Family& fam, Rng& rng);

// Root of E[rho^s] = 1 in (0,2), located by bisection on the convex map
// s -> log E[rho^s]. Throws NoRootError / DivergentMomentError.
double solve_kappa(const Family& fam, double tol = 1e-8);

class EnvironmentModel {
  public:
    // Full validation: kappa in (0,2) must exist, E[log rho] < 0, and for
    // discrete atoms the log-rho support must not sit on a lattice.
    static EnvironmentModel create(Family fam, double kappa_tol = 1e-8);

    // Partial construction for plumbing paths (sampling, speed) on models
    // that do not satisfy the root condition, e.g. point masses.
    static EnvironmentModel plumbing(Family fam);

    // Refuses an override that disagrees with the solved root.
    void override_kappa(double kappa);

    double kappa() const; // throws MethodUnavailable when unresolved
    std::optional<double> kappa_opt() const { return kappa_; }

    double moment_rho(double s) const;
    double rho_log_moment(double s) const; // E[rho^s log rho]
    double mean_rho() const { return mean_rho_; }
    double speed() const;

    double sample_omega(Rng& rng) const { return family_sample_omega(family_, rng); }
    std::vector<double> sample_omega_block(std::uint64_t seed, std::uint64_t stream,
                                           std::size_t count) const;

    const Family& family() const { return family_; }
    bool is_beta() const { return std::holds_alternative<BetaParams>(family_); }
    const BetaParams& beta_params() const; // throws MethodUnavailable otherwise
    std::string label() const;

  private:
    explicit EnvironmentModel(Family fam) : family_(std::move(fam)) {}
    void fill_caches();

    Family family_;
    std::optional<double> kappa_;
    double mean_rho_ = 0.0;
    double rho_log_at_kappa_ = 0.0; // E[rho^kappa log rho], cached when kappa known

  public:
    double rho_log_at_kappa() const;
};

} // namespace valleywalk

#endif
