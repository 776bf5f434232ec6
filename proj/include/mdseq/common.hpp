#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdseq {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

/// Seedable RNG used by every stochastic operation. Wraps mt19937_64 and
/// draws normals via Box-Muller so that streams are reproducible for a
/// given seed independently of the standard library's distribution
/// implementations. State round-trips through a string for checkpointing.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    double uniform() {
        // in [0, 1)
        return (engine_() >> 11) * (1.0 / 9007199254740992.0);
    }

    double normal() {
        // Box-Muller, two uniforms per draw; no cached spare so that the
        // stream position is a pure function of the number of calls.
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        require(n > 0, "Rng::uniform_int: n must be positive");
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Sample an index from an (unnormalized is allowed) nonnegative weight
    /// vector by CDF inversion.
    int categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) {
            require(w >= 0.0 && std::isfinite(w), "Rng::categorical: bad weight");
            total += w;
        }
        require(total > 0.0, "Rng::categorical: all weights zero");
        const double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void deserialize(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
        require(!is.fail(), "Rng::deserialize: malformed state string");
    }

private:
    std::mt19937_64 engine_;
};

/// Shortest round-trip decimal formatting for doubles. Used everywhere a
/// float is written to a text artifact so that re-runs are byte-identical.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    return v;
}

/// FNV-1a 64-bit, used for provenance hashes of configs and checkpoints.
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[v & 0xf];
        v >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

}  // namespace mdseq
