#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtrl {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(what);
}

inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Deterministic random stream. All draws go through explicit conversions so
// results do not depend on the standard library's distribution internals.
class RandomStream {
public:
    RandomStream() : eng_(0) {}
    explicit RandomStream(uint64_t seed) : eng_(seed) {}
    RandomStream(uint64_t seed, const std::string& tag) : eng_(seed ^ fnv1a(tag)) {}

    uint64_t next_u64() { return eng_(); }

    // uniform in [0,1)
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    float uniformf(float lo, float hi) { return float(uniform(lo, hi)); }

    // uniform integer in [0, n)
    uint64_t uniform_index(uint64_t n) {
        // rejection sampling over the top bits keeps the draw unbiased
        if (n == 0) fail("uniform_index: empty range");
        uint64_t mask = ~uint64_t(0);
        uint64_t limit = mask - mask % n;
        uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + int(uniform_index(uint64_t(hi - lo + 1)));
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mtrl
