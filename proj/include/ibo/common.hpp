#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibo {

enum class Errc {
    dimension_mismatch,
    invalid_argument,
    out_of_bounds,
    numerical_failure,
    parse_error,
    io_failure,
    training_diverged,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::dimension_mismatch: return "dimension_mismatch";
        case Errc::invalid_argument: return "invalid_argument";
        case Errc::out_of_bounds: return "out_of_bounds";
        case Errc::numerical_failure: return "numerical_failure";
        case Errc::parse_error: return "parse_error";
        case Errc::io_failure: return "io_failure";
        case Errc::training_diverged: return "training_diverged";
    }
    return "unknown";
}

/// Error with a stable machine-readable code alongside the human message.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Deterministic random stream with cheap independent substreams.
///
/// split(tag) derives from the stored seed, not the engine state, so a
/// substream does not depend on the parent's draw position. Real-valued draws
/// are generated in-house so results do not depend on the standard library's
/// distribution implementations.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {
        std::uint64_t s = seed;
        state0_ = detail::splitmix64(s);
        state1_ = detail::splitmix64(s);
        if (state0_ == 0 && state1_ == 0) state1_ = 1;
    }

    /// Derive an independent stream identified by (this stream's seed, tag).
    RngStream split(std::uint64_t tag) const {
        std::uint64_t s = seed_ ^ (0xd1342543de82ef95ULL * (tag + 1));
        return RngStream(detail::splitmix64(s));
    }

    std::uint64_t next_u64() {
        // xorshift128+
        std::uint64_t s1 = state0_;
        const std::uint64_t s0 = state1_;
        const std::uint64_t result = s0 + s1;
        state0_ = s0;
        s1 ^= s1 << 23;
        state1_ = s1 ^ s0 ^ (s1 >> 18) ^ (s0 >> 5);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n).
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Standard normal draw (Box-Muller, cached spare).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Sample an index with probability proportional to weights[i].
    std::size_t sample_weighted(const Eigen::VectorXd& weights) {
        const double total = weights.sum();
        if (!(total > 0.0) || !std::isfinite(total))
            throw Error(Errc::invalid_argument, "weighted sampling requires positive finite total weight");
        double u = uniform() * total;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u <= 0.0) return static_cast<std::size_t>(i);
        }
        return static_cast<std::size_t>(weights.size() - 1);
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state0_ = 0, state1_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// A point in the normalized [0,1]^d search box.
struct ConfigPoint {
    Eigen::VectorXd coords;

    ConfigPoint() = default;
    explicit ConfigPoint(Eigen::VectorXd c) : coords(std::move(c)) {}

    int dim() const { return static_cast<int>(coords.size()); }

    bool in_unit_box(double tol = 1e-12) const {
        for (Eigen::Index i = 0; i < coords.size(); ++i)
            if (!(coords[i] >= -tol && coords[i] <= 1.0 + tol)) return false;
        return true;
    }
};

/// Normalized task variable; the target task is t = 1.
struct TaskValue {
    double t = 1.0;

    TaskValue() = default;
    explicit TaskValue(double v) : t(v) {}

    void validate() const {
        if (!(t >= 0.0 && t <= 1.0))
            throw Error(Errc::invalid_argument, "task value must lie in [0,1], got " + std::to_string(t));
    }
};

/// One evaluated (configuration, task) pair: objective value and wall cost.
struct Observation {
    ConfigPoint x;
    TaskValue t;
    double y = 0.0;
    double cost = 0.0;

    void validate() const {
        t.validate();
        if (!std::isfinite(y)) throw Error(Errc::invalid_argument, "observation y must be finite");
        if (!(cost > 0.0)) throw Error(Errc::invalid_argument, "observation cost must be > 0");
        if (!x.in_unit_box()) throw Error(Errc::out_of_bounds, "observation config outside unit box");
    }
};

namespace stats {

inline double mean(const Eigen::VectorXd& v) { return v.size() ? v.mean() : 0.0; }

inline double stddev(const Eigen::VectorXd& v) {
    if (v.size() < 2) return 0.0;
    const double m = v.mean();
    return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size()));
}

/// Linear-interpolation quantile of an unsorted sample, q in [0,1].
inline double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw Error(Errc::invalid_argument, "quantile of empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

} // namespace stats

} // namespace ibo
