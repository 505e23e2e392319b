#ifndef TECHLAND_COMMON_HPP
#define TECHLAND_COMMON_HPP

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace techland {

using Rng = std::mt19937_64;
using DomainCode = std::string;

/// Bad input or configuration: the user can fix it without touching code.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major dense matrix; one row per node/document.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RowMatrixXd = RowMatrix<double>;

template <typename Scalar>
inline Scalar sigmoid(Scalar x) {
    if (x >= Scalar(0)) {
        return Scalar(1) / (Scalar(1) + std::exp(-x));
    }
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
}

/// log(max(p, floor)); keeps losses finite when a probability underflows.
template <typename Scalar>
inline Scalar clamped_log(Scalar p, Scalar floor = Scalar(1e-12)) {
    return std::log(p < floor ? floor : p);
}

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw InputError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

/// Derive an independent stream seed from a base seed and a salt.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) built from the top 53 bits; stable across standard libraries.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

/// Standard normal draw (Box-Muller), portable across standard libraries.
inline double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) {
        u1 = uniform01(rng);
    }
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Split `n` items into `groups` contiguous equal-count groups; the first
/// `n % groups` groups get one extra item. Returns group start offsets (size groups+1).
inline std::vector<std::size_t> equal_count_offsets(std::size_t n, std::size_t groups) {
    std::vector<std::size_t> offsets(groups + 1, 0);
    const std::size_t base = n / groups;
    const std::size_t extra = n % groups;
    for (std::size_t g = 0; g < groups; ++g) {
        offsets[g + 1] = offsets[g] + base + (g < extra ? 1 : 0);
    }
    return offsets;
}

} // namespace techland

#endif // TECHLAND_COMMON_HPP
