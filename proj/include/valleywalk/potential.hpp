#ifndef VALLEYWALK_POTENTIAL_HPP
#define VALLEYWALK_POTENTIAL_HPP

// Potential landscape of an environment realisation: V(0) = 0 and
// V(x) - V(x-1) = log rho_x. Ladder epochs cut the path into excursions;
// the functionals recorded per excursion drive everything downstream.

#include "valleywalk/env_model.hpp"
#include "valleywalk/logsum.hpp"
#include "valleywalk/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace valleywalk {

struct PotentialPath {
    std::int64_t left = 0;      // site of values[0]
    std::vector<double> values; // V at sites left, left+1, ...
    std::vector<double> omega;  // omega at matching sites; index 0 may be unset (NaN)

    std::int64_t right() const { return left + static_cast<std::int64_t>(values.size()) - 1; }
    double v_at(std::int64_t x) const { return values[static_cast<std::size_t>(x - left)]; }
    double omega_at(std::int64_t x) const { return omega[static_cast<std::size_t>(x - left)]; }
    bool contains(std::int64_t x) const { return x >= left && x <= right(); }
};

// V over sites 0..count with V(0)=0; omegas drawn at sites 1..count.
PotentialPath build_potential(const EnvironmentModel& model, std::size_t count, Rng& rng);

// Path from explicit omegas, anchored V(left) = 0. omegas[i] sits at site
// left+i; the entry at the left edge is carried but enters no increment.
PotentialPath potential_from_omegas(std::int64_t left, std::vector<double> omegas);

// Weak descending ladder epochs starting at from_site: e0 = from_site,
// e_{i+1} = min{ x > e_i : V(x) <= V(e_i) }. Only epochs inside the window.
std::vector<std::int64_t> ladder_epochs_forward(const PotentialPath& path, std::int64_t from_site);

// Backward counterpart: all k <= through_site with V(l) >= V(k) for every
// l < k inside the window. The window's left edge qualifies vacuously, so the
// first entry may be an artifact of truncation.
std::vector<std::int64_t> ladder_epochs_backward(const PotentialPath& path, std::int64_t through_site);

struct ExcursionRecord {
    std::int64_t start = 0; // e_i
    std::int64_t end = 0;   // e_{i+1}
    double height = 0.0;    // max of V - V(start) over [start, end]
    std::int64_t t_h = 0;   // leftmost site attaining the max
    double m1 = 0.0;        // sum_{k < t_h} exp(-(V(k)-V(start)))
    double m1_prime = 0.0;  // sum_{k < end} exp(-(V(k)-V(start)))
    double m2 = 0.0;        // sum_{start <= k < end} exp(V(k)-V(start)-height)
    double r_minus = 0.0;   // sum_{k <= start} exp(-(V(k)-V(start)))
    double log_z = 0.0;     // log(m1) + log(m2) + height
    bool left_certified = false;

    std::int64_t length() const { return end - start; }
};

enum class LeftTailPolicy {
    Certified,  // throw WindowTooSmall when the remainder bound fails
    WindowOnly, // sum what the window holds, report certification status
};

ExcursionRecord excursion_functionals(const PotentialPath& path, std::int64_t start,
                                      std::int64_t end,
                                      LeftTailPolicy policy = LeftTailPolicy::Certified,
                                      double rel_tol = 1e-12);

// One forward excursion of a fresh environment, stored relative to its start.
struct Excursion {
    std::vector<double> omega; // omega at local sites 1..length
    std::vector<double> v;     // v[0] = 0, ..., v[length] <= 0
    double height = 0.0;
    std::int64_t t_h = 0; // offset of first max

    std::int64_t length() const { return static_cast<std::int64_t>(omega.size()); }
};

void sample_excursion_into(const EnvironmentModel& model, Rng& rng, Excursion& out);
Excursion sample_excursion(const EnvironmentModel& model, Rng& rng);

struct ConditionedLeftPath {
    PotentialPath path;
    std::vector<std::int64_t> boundaries; // construction boundaries, ascending
};

// Environment to the left of the origin conditioned to keep V nonnegative:
// i.i.d. copies of the forward first excursion concatenated leftward. Exact,
// no rejection. Grows on demand; sites are immutable once materialised. Note
// the omega at the current left edge stays undefined until the next excursion
// arrives, so omega_at() may extend even when the site itself exists.
class ConditionedLeftEnv {
  public:
    ConditionedLeftEnv(const EnvironmentModel& model, Rng rng);

    double omega_at(std::int64_t x); // x <= 0, extends as needed
    double v_at(std::int64_t x);     // x <= 0
    std::int64_t left_edge() const { return left_; }
    const std::vector<std::int64_t>& boundaries() const { return boundaries_; }
    void extend_once();

    // Keep appending excursions until sum_{k <= -1} exp(-V(k)) carries a
    // geometric remainder bound below rel_tol; WindowTooSmall past max_sites.
    void extend_until_certified(double rel_tol, std::int64_t max_sites = 1 << 20);
    double log_left_sum() const { return left_acc_.value(); } // over k <= -1, as scanned

    ConditionedLeftPath snapshot() const;

  private:
    void scan_left_tail();

    const EnvironmentModel* model_;
    Rng rng_;
    Excursion scratch_;
    std::vector<double> omega_neg_;        // omega_neg_[i] = omega at site -i
    std::vector<double> v_neg_;            // v_neg_[i] = V(-i)
    std::vector<std::int64_t> boundaries_; // 0, e_{-1}, e_{-2}, ...
    std::int64_t left_ = 0;

    LogSumAcc left_acc_;
    std::optional<TailCertificate> left_cert_;
    double cert_tol_ = 0.0;
    std::int64_t scan_next_ = -1; // next site the tail scan will consume
};

ConditionedLeftPath sample_conditioned_left(const EnvironmentModel& model,
                                            std::size_t excursion_count, Rng& rng);

} // namespace valleywalk

#endif
