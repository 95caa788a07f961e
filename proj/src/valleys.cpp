#include "valleywalk/valleys.hpp"

#include "valleywalk/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace valleywalk {

double critical_height(std::int64_t n, double kappa) {
    if (n < 3) throw WindowTooSmall("critical_height: n must be at least 3");
    if (kappa <= 0.0) throw std::invalid_argument("critical_height: kappa must be positive");
    const double ln = std::log(static_cast<double>(n));
    return std::max(0.0, ln / kappa - std::log(ln));
}

std::int64_t valley_width(std::int64_t n, double kappa, double gamma, double drift_per_excursion) {
    if (n < 1) throw std::invalid_argument("valley_width: n must be positive");
    if (kappa <= 0.0 || gamma <= 0.0 || drift_per_excursion <= 0.0) {
        throw std::invalid_argument("valley_width: kappa, gamma and the drift must be positive");
    }
    const double w = (1.0 + gamma) / (drift_per_excursion * kappa) * std::log(static_cast<double>(n));
    return static_cast<std::int64_t>(std::ceil(w));
}

double estimate_drift_per_excursion(const EnvironmentModel& model, std::size_t excursion_count,
                                    Rng& rng) {
    if (excursion_count == 0) throw std::invalid_argument("estimate_drift_per_excursion: empty batch");
    Excursion ex;
    double sum = 0.0;
    for (std::size_t i = 0; i < excursion_count; ++i) {
        sample_excursion_into(model, rng, ex);
        sum -= ex.v.back();
    }
    return sum / static_cast<double>(excursion_count);
}

ValleyDecomposition decompose(std::span<const ExcursionRecord> excursions, std::int64_t n,
                              const ValleyParams& params) {
    if (n < 3) throw WindowTooSmall("decompose: n must be at least 3");
    if (std::cmp_less(excursions.size(), n)) {
        throw InsufficientExcursions("decompose: fewer excursion records than n");
    }

    ValleyDecomposition out;
    out.n = n;
    out.h_n = critical_height(n, params.kappa);
    out.d_n_width = valley_width(n, params.kappa, params.gamma, params.drift_per_excursion);

    for (std::int64_t i = 0; i < n; ++i) {
        const auto& rec = excursions[static_cast<std::size_t>(i)];
        if (rec.height < out.h_n) continue;
        Valley v;
        v.sigma = i;
        v.b = rec.start;
        v.d = rec.end;
        v.height = rec.height;
        if (i >= out.d_n_width) {
            v.a = excursions[static_cast<std::size_t>(i - out.d_n_width)].start;
            v.a_resolved = true;
        } else {
            // the pad would reach excursions we were not given; clamp and flag
            v.a = excursions[0].start;
            v.a_resolved = false;
        }
        out.valleys.push_back(v);
    }
    out.k_n = static_cast<std::int64_t>(out.valleys.size());
    out.q_n_hat = static_cast<double>(out.k_n) / static_cast<double>(n);

    out.no_event = true;
    for (std::size_t i = 0; i < out.valleys.size(); ++i) {
        if (!out.valleys[i].a_resolved || out.valleys[i].a <= 0) {
            out.no_event = false;
            break;
        }
        if (i + 1 < out.valleys.size() && out.valleys[i].d >= out.valleys[i + 1].a) {
            out.no_event = false;
            break;
        }
    }
    return out;
}

} // namespace valleywalk
