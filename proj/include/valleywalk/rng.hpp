#ifndef VALLEYWALK_RNG_HPP
#define VALLEYWALK_RNG_HPP

// Self-contained PRNG stack. std::random distributions are implementation
// defined, which would make recorded runs compiler dependent; everything
// here is pinned down to the bit. Replicate i of a run always draws from
// stream (seed, purpose, i) regardless of which worker executes it.

#include <cmath>
#include <cstdint>

namespace valleywalk {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    Rng() : Rng(0x853c49e6748fea9bULL) {}

    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next() {
        std::uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return r;
    }

    // uniform on the open interval (0,1); safe to take logs of
    double uniform() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential() { return -std::log(uniform()); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    // Marsaglia-Tsang; shapes below one go through the boost trick
    double gamma(double shape) {
        if (shape < 1.0) {
            double g = gamma(shape + 1.0);
            return g * std::pow(uniform(), 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // strictly interior draw; redraws the (measure zero, fp-rounded) endpoints
    double beta(double a, double b) {
        for (;;) {
            double x = gamma(a);
            double y = gamma(b);
            double w = x / (x + y);
            if (w > 0.0 && w < 1.0) return w;
        }
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stream purposes keep independent phases of one run off each other's draws.
enum class StreamPurpose : std::uint64_t {
    Environment = 1,
    LeftEnvironment = 2,
    Walk = 3,
    Constants = 4,
    Excursions = 5,
    StableSampler = 6,
    Perpetuity = 7,
    SelfTest = 8,
    WindowGen = 9,
};

inline std::uint64_t derive_key(std::uint64_t seed, StreamPurpose purpose, std::uint64_t id) {
    std::uint64_t s = seed;
    (void)splitmix64(s);
    s += static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ULL;
    (void)splitmix64(s);
    s += id * 0xd1342543de82ef95ULL;
    return splitmix64(s);
}

inline Rng make_stream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t id) {
    return Rng(derive_key(seed, purpose, id));
}

// One cell of a lazily materialised environment: a fresh engine per site, so
// the value does not depend on the order in which sites are first visited.
inline Rng site_rng(std::uint64_t stream_key, std::int64_t site) {
    std::uint64_t s = stream_key;
    s += static_cast<std::uint64_t>(site) * 0x2545f4914f6cdd1dULL;
    return Rng(splitmix64(s));
}

} // namespace valleywalk

#endif
