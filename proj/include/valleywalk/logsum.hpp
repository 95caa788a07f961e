#ifndef VALLEYWALK_LOGSUM_HPP
#define VALLEYWALK_LOGSUM_HPP

// Log-domain accumulation. Potentials routinely leave the range where
// exp(V) is representable, so every sum of exp(V(k)) terms in this project
// goes through one of these helpers.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace valleywalk {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

// log(e^a + e^b) without leaving the log domain.
inline double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == neg_inf) return a; // covers both -inf and a == -inf
    return a + std::log1p(std::exp(b - a));
}

// log(e^a - e^b), requires a >= b. Returns -inf on a == b.
inline double log_sub(double a, double b) {
    if (b == neg_inf) return a;
    double d = b - a;
    if (d >= 0.0) return neg_inf;
    return a + std::log1p(-std::exp(d));
}

// Streaming max-shifted log-sum-exp.
class LogSumAcc {
  public:
    void add(double x) {
        if (x == neg_inf) return;
        if (x <= shift_) {
            sum_ += std::exp(x - shift_);
        } else if (shift_ == neg_inf) {
            shift_ = x;
            sum_ = 1.0;
        } else {
            sum_ = sum_ * std::exp(shift_ - x) + 1.0;
            shift_ = x;
        }
    }
    double value() const {
        if (shift_ == neg_inf) return neg_inf;
        return shift_ + std::log(sum_);
    }
    bool empty() const { return shift_ == neg_inf; }

  private:
    double shift_ = neg_inf;
    double sum_ = 0.0;
};

inline double log_sum_exp(std::span<const double> xs) {
    LogSumAcc acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

// prefix[i] = log sum of exp(xs[0..i])
inline std::vector<double> log_prefix_sums(std::span<const double> xs) {
    std::vector<double> out(xs.size());
    LogSumAcc acc;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        acc.add(xs[i]);
        out[i] = acc.value();
    }
    return out;
}

inline std::vector<double> log_suffix_sums(std::span<const double> xs) {
    std::vector<double> out(xs.size());
    LogSumAcc acc;
    for (std::size_t i = xs.size(); i-- > 0;) {
        acc.add(xs[i]);
        out[i] = acc.value();
    }
    return out;
}

// Certificate for truncating an infinite geometric-like tail. Terms are fed
// outward (in log domain). Two routes to a remainder bound:
//   termwise  a contracting streak of at least 16 consecutive down-ratios;
//             the streak resets on any up-tick, so early noise is forgotten
//             as soon as clean decay sets in. Tight for monotone tails.
//   blockwise decay of consecutive 64-term block peaks; this is what fires
//             on sampled potentials, where individual terms jitter upward
//             all the time but the block envelope still falls.
class TailCertificate {
  public:
    explicit TailCertificate(double rel_tol = 1e-12) : rel_tol_(rel_tol) {}

    void observe(double log_term) {
        if (seen_ && prev_ != neg_inf && log_term != neg_inf) {
            double r = log_term - prev_;
            if (r < 0.0) {
                ++streak_len_;
                if (r > streak_max_) streak_max_ = r;
            } else {
                streak_len_ = 0;
                streak_max_ = neg_inf;
            }
        }
        prev_ = log_term;
        seen_ = true;
        if (log_term > block_peak_) block_peak_ = log_term;
        if (++in_block_ == 64) {
            prev_peak_ = last_peak_;
            last_peak_ = block_peak_;
            block_peak_ = neg_inf;
            in_block_ = 0;
        }
    }

    bool certified(double log_acc) const {
        if (!seen_) return false; // nothing observed, nothing to extrapolate from
        const double budget = log_acc + std::log(rel_tol_);

        // remainder <= last_term * r / (1 - r) with r the worst ratio of the
        // current contracting streak
        if (streak_len_ >= 16 && streak_max_ < 0.0) {
            double log_bound = prev_ + streak_max_ - std::log1p(-std::exp(streak_max_));
            if (log_bound <= budget) return true;
        }

        // blockwise: peaks of the last two complete blocks contracting by
        // e^rb, and the current partial block not already above the envelope;
        // remainder <= 64 * peak * e^rb / (1 - e^rb)
        if (prev_peak_ != neg_inf && last_peak_ != neg_inf && block_peak_ <= last_peak_) {
            double rb = last_peak_ - prev_peak_;
            if (rb < 0.0) {
                double log_bound = std::log(64.0) + last_peak_ + rb - std::log1p(-std::exp(rb));
                if (log_bound <= budget) return true;
            }
        }
        return false;
    }

  private:
    double rel_tol_;
    double prev_ = neg_inf;
    bool seen_ = false;
    int streak_len_ = 0;          // consecutive ratios below zero, ending at prev_
    double streak_max_ = neg_inf; // worst (largest) ratio within the streak
    double prev_peak_ = neg_inf;  // peak of the block before last
    double last_peak_ = neg_inf;  // peak of the last complete block
    double block_peak_ = neg_inf; // running peak of the current block
    int in_block_ = 0;
};

} // namespace valleywalk

#endif
