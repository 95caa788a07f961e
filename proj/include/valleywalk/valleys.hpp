#ifndef VALLEYWALK_VALLEYS_HPP
#define VALLEYWALK_VALLEYS_HPP

// Deep-valley extraction at scale n: which excursions clear the critical
// height, where their padded supports sit, and whether those supports are
// disjoint (the separation event the annealed analysis needs).

#include "valleywalk/env_model.hpp"
#include "valleywalk/potential.hpp"
#include "valleywalk/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace valleywalk {

// max(0, log(n)/kappa - log log n); the clamp keeps small n usable.
double critical_height(std::int64_t n, double kappa);

// ceil((1+gamma)/(A*kappa) * log n) where A is the mean potential drop per
// excursion, E[-V(e1)].
std::int64_t valley_width(std::int64_t n, double kappa, double gamma, double drift_per_excursion);

// Monte Carlo estimate of A = E[-V(e1)] (no closed form in general).
double estimate_drift_per_excursion(const EnvironmentModel& model, std::size_t excursion_count,
                                    Rng& rng);

struct ValleyParams {
    double kappa = 0.0;
    double gamma = 1.0;
    double drift_per_excursion = 0.0; // A
};

struct Valley {
    std::int64_t sigma = 0; // excursion index of the deep one
    std::int64_t a = 0;     // left pad: start of excursion sigma - D_n
    std::int64_t b = 0;     // bottom: start of excursion sigma
    std::int64_t d = 0;     // right end: end of excursion sigma
    double height = 0.0;
    bool a_resolved = true; // false when sigma < D_n forced a clamp to the first record
};

struct ValleyDecomposition {
    std::int64_t n = 0;
    double h_n = 0.0;
    std::int64_t d_n_width = 0;
    double q_n_hat = 0.0; // in-sample frequency k_n / n
    std::vector<Valley> valleys;
    std::int64_t k_n = 0;
    bool no_event = false; // valleys sit strictly right of 0 and do not touch
};

// Scans the first n excursion records. Needs at least n of them.
ValleyDecomposition decompose(std::span<const ExcursionRecord> excursions, std::int64_t n,
                              const ValleyParams& params);

} // namespace valleywalk

#endif
