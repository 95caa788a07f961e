#include "valleywalk/potential.hpp"

#include "valleywalk/errors.hpp"
#include "valleywalk/logsum.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace valleywalk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// A forward excursion closes almost surely under negative drift; this cap
// turns a misconfigured model (plumbing-mode, drift >= 0) into an error
// instead of a hang.
constexpr std::int64_t kMaxExcursionLength = std::int64_t{1} << 24;

double log_rho_of(double w) { return std::log1p(-w) - std::log(w); }

} // namespace

PotentialPath build_potential(const EnvironmentModel& model, std::size_t count, Rng& rng) {
    PotentialPath path;
    path.left = 0;
    path.values.resize(count + 1);
    path.omega.resize(count + 1, kNaN);
    path.values[0] = 0.0;
    for (std::size_t i = 1; i <= count; ++i) {
        const double w = model.sample_omega(rng);
        path.omega[i] = w;
        path.values[i] = path.values[i - 1] + log_rho_of(w);
    }
    return path;
}

PotentialPath potential_from_omegas(std::int64_t left, std::vector<double> omegas) {
    if (omegas.empty()) throw std::invalid_argument("potential_from_omegas: no sites");
    PotentialPath path;
    path.left = left;
    path.omega = std::move(omegas);
    path.values.resize(path.omega.size());
    path.values[0] = 0.0;
    for (std::size_t i = 1; i < path.omega.size(); ++i) {
        path.values[i] = path.values[i - 1] + log_rho_of(path.omega[i]);
    }
    return path;
}

std::vector<std::int64_t> ladder_epochs_forward(const PotentialPath& path, std::int64_t from_site) {
    if (!path.contains(from_site)) throw std::invalid_argument("ladder_epochs_forward: site outside window");
    std::vector<std::int64_t> epochs{from_site};
    double level = path.v_at(from_site);
    for (std::int64_t x = from_site + 1; x <= path.right(); ++x) {
        const double v = path.v_at(x);
        if (v <= level) {
            epochs.push_back(x);
            level = v;
        }
    }
    return epochs;
}

std::vector<std::int64_t> ladder_epochs_backward(const PotentialPath& path, std::int64_t through_site) {
    if (!path.contains(through_site)) throw std::invalid_argument("ladder_epochs_backward: site outside window");
    std::vector<std::int64_t> epochs;
    double running_min = pos_inf;
    for (std::int64_t x = path.left; x <= through_site; ++x) {
        const double v = path.v_at(x);
        if (v <= running_min) epochs.push_back(x);
        running_min = std::min(running_min, v);
    }
    return epochs;
}

ExcursionRecord excursion_functionals(const PotentialPath& path, std::int64_t start,
                                      std::int64_t end, LeftTailPolicy policy, double rel_tol) {
    if (!path.contains(start) || !path.contains(end) || start >= end) {
        throw std::invalid_argument("excursion_functionals: bad [start, end] window");
    }
    const double base = path.v_at(start);

    ExcursionRecord rec;
    rec.start = start;
    rec.end = end;

    // Height and its leftmost witness; the endpoint can never win because
    // V(end) <= V(start) and start is scanned first.
    rec.height = 0.0;
    rec.t_h = start;
    for (std::int64_t k = start; k <= end; ++k) {
        const double rel = path.v_at(k) - base;
        if (rel > rec.height) {
            rec.height = rel;
            rec.t_h = k;
        }
    }

    LogSumAcc m2_acc;
    for (std::int64_t k = start; k < end; ++k) m2_acc.add(path.v_at(k) - base);
    const double log_m2 = m2_acc.value() - rec.height;

    // Left tail, shared by m1 / m1_prime / r_minus. Terms decay once V climbs,
    // so a geometric certificate applies.
    LogSumAcc left_acc;
    TailCertificate cert(rel_tol);
    bool certified = false;
    for (std::int64_t k = start - 1; k >= path.left; --k) {
        const double term = -(path.v_at(k) - base);
        left_acc.add(term);
        cert.observe(term);
        if (cert.certified(left_acc.value())) {
            certified = true;
            break;
        }
    }
    if (!certified && policy == LeftTailPolicy::Certified) {
        throw WindowTooSmall("excursion_functionals: left tail not certified inside window");
    }
    rec.left_certified = certified;
    const double log_left = left_acc.value();

    LogSumAcc m1_acc;
    m1_acc.add(log_left);
    for (std::int64_t k = start; k < rec.t_h; ++k) m1_acc.add(-(path.v_at(k) - base));
    const double log_m1 = m1_acc.value();

    LogSumAcc m1p_acc;
    m1p_acc.add(log_left);
    for (std::int64_t k = start; k < end; ++k) m1p_acc.add(-(path.v_at(k) - base));
    const double log_m1p = m1p_acc.value();

    rec.m1 = std::exp(log_m1);
    rec.m1_prime = std::exp(log_m1p);
    rec.m2 = std::exp(log_m2);
    rec.r_minus = std::exp(log_add(0.0, log_left));
    rec.log_z = log_m1 + log_m2 + rec.height;
    return rec;
}

void sample_excursion_into(const EnvironmentModel& model, Rng& rng, Excursion& out) {
    out.omega.clear();
    out.v.assign(1, 0.0);
    out.height = 0.0;
    out.t_h = 0;
    double cur = 0.0;
    while (true) {
        const double w = model.sample_omega(rng);
        cur += log_rho_of(w);
        out.omega.push_back(w);
        out.v.push_back(cur);
        if (cur <= 0.0) break;
        if (cur > out.height) {
            out.height = cur;
            out.t_h = static_cast<std::int64_t>(out.v.size()) - 1;
        }
        if (out.length() > kMaxExcursionLength) {
            throw WindowTooSmall("sample_excursion: no return to the start level; check the drift");
        }
    }
}

Excursion sample_excursion(const EnvironmentModel& model, Rng& rng) {
    Excursion out;
    sample_excursion_into(model, rng, out);
    return out;
}

ConditionedLeftEnv::ConditionedLeftEnv(const EnvironmentModel& model, Rng rng)
    : model_(&model), rng_(rng) {
    v_neg_.push_back(0.0);
    omega_neg_.push_back(kNaN);
    boundaries_.push_back(0);
    extend_once(); // materialises omega at the origin
}

void ConditionedLeftEnv::extend_once() {
    sample_excursion_into(*model_, rng_, scratch_);
    const std::int64_t len = scratch_.length();

    // The new excursion spans [left_-len, left_]. Its closing value is
    // scratch_.v[len] <= 0, so anchoring with base = V(left_) - v[len] keeps
    // every new value nonnegative even in floating point: base >= V(left_)
    // and the interior increments v[i] are positive.
    const double base = v_neg_[static_cast<std::size_t>(-left_)] - scratch_.v[static_cast<std::size_t>(len)];
    omega_neg_[static_cast<std::size_t>(-left_)] = scratch_.omega[static_cast<std::size_t>(len - 1)];

    for (std::int64_t s = left_ - 1; s >= left_ - len; --s) {
        const std::int64_t i = s - (left_ - len); // local offset in [0, len)
        v_neg_.push_back(base + scratch_.v[static_cast<std::size_t>(i)]);
        omega_neg_.push_back(i >= 1 ? scratch_.omega[static_cast<std::size_t>(i - 1)] : kNaN);
    }
    left_ -= len;
    boundaries_.push_back(left_);
}

double ConditionedLeftEnv::omega_at(std::int64_t x) {
    if (x > 0) throw std::invalid_argument("ConditionedLeftEnv::omega_at: positive site");
    while (x <= left_) extend_once(); // edge omega is pending, see header
    return omega_neg_[static_cast<std::size_t>(-x)];
}

double ConditionedLeftEnv::v_at(std::int64_t x) {
    if (x > 0) throw std::invalid_argument("ConditionedLeftEnv::v_at: positive site");
    while (x < left_) extend_once();
    return v_neg_[static_cast<std::size_t>(-x)];
}

void ConditionedLeftEnv::scan_left_tail() {
    while (scan_next_ >= left_) {
        const double term = -v_neg_[static_cast<std::size_t>(-scan_next_)];
        left_acc_.add(term);
        left_cert_->observe(term);
        --scan_next_;
    }
}

void ConditionedLeftEnv::extend_until_certified(double rel_tol, std::int64_t max_sites) {
    if (!left_cert_ || cert_tol_ != rel_tol) {
        left_cert_.emplace(rel_tol);
        cert_tol_ = rel_tol;
        left_acc_ = LogSumAcc();
        scan_next_ = -1;
    }
    while (true) {
        scan_left_tail();
        if (left_cert_->certified(left_acc_.value())) return;
        if (-left_ > max_sites) {
            throw WindowTooSmall("ConditionedLeftEnv: left sum not certified within site budget");
        }
        extend_once();
    }
}

ConditionedLeftPath ConditionedLeftEnv::snapshot() const {
    ConditionedLeftPath out;
    out.path.left = left_;
    const std::size_t n = v_neg_.size();
    out.path.values.resize(n);
    out.path.omega.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.path.values[i] = v_neg_[n - 1 - i];
        out.path.omega[i] = omega_neg_[n - 1 - i];
    }
    out.boundaries.assign(boundaries_.rbegin(), boundaries_.rend());
    return out;
}

ConditionedLeftPath sample_conditioned_left(const EnvironmentModel& model,
                                            std::size_t excursion_count, Rng& rng) {
    if (excursion_count == 0) throw std::invalid_argument("sample_conditioned_left: need at least one excursion");
    ConditionedLeftEnv env(model, Rng(rng.next()));
    for (std::size_t i = 1; i < excursion_count; ++i) env.extend_once();
    return env.snapshot();
}

} // namespace valleywalk
