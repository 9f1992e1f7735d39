#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace coarsedim {

// ======================================================
// Error types
// ======================================================

/// Enumeration or pair budget was exceeded; the message names the offender.
class BudgetExceeded : public std::runtime_error {
public:
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Fewer than two usable rows for a log-log fit.
class InsufficientData : public std::runtime_error {
public:
    explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

/// A certificate does not match the cloud it is being replayed against.
class CertificateInvalid : public std::runtime_error {
public:
    explicit CertificateInvalid(const std::string& what) : std::runtime_error(what) {}
};

/// Wedge aperture at or beyond sqrt(2): the cone reaches the perpendicular.
class ApertureTooWide : public std::runtime_error {
public:
    explicit ApertureTooWide(const std::string& what) : std::runtime_error(what) {}
};

// ======================================================
// Configuration
// ======================================================

/// Knobs shared by every operation. All defaults are desk-scale; budgets are
/// hard limits, not targets. Operations never mutate a Config.
struct Config {
    // Two points closer than rho_dedup in sup-norm are identified; the
    // lexicographically first one is kept.
    double rho_dedup = 1e-9;

    std::int64_t max_points = 10'000'000;
    std::int64_t max_pairs = 100'000'000;

    // Absolute tolerance on fitted log-log slopes.
    double fit_tolerance = 0.05;

    // A coordinate within this distance of an integer sits on a grid-cell
    // boundary and is counted in both adjacent cells.
    double integer_cell_tol = 1e-12;
    double unit_norm_tol = 1e-12;

    // Direction grid over the upper unit semicircle.
    int directions = 4096;
    std::vector<double> s_grid{1.0, 4.0, 16.0, 64.0};
    std::vector<double> eps_grid{0.8, 0.4, 0.2, 0.1, 0.05};

    // Farthest-point greedy is used for covering upper bounds up to this many
    // points; beyond it a hashed first-uncovered sweep keeps the cost linear.
    std::int64_t farthest_point_cap = 4096;

    int threads = 1;

    Config() = default;
};

// ======================================================
// Deterministic hashing / sampling
// ======================================================

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Uniform double in [0,1) from a 64-bit state.
inline double to_unit_double(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Shortest decimal string that round-trips the value.
inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

// ======================================================
// Parallel chunking with deterministic merges
// ======================================================

/// Runs fn(begin, end) on [0,n) split into contiguous chunks, one per thread.
/// Results must be merged by the caller in chunk order.
template <typename Fn>
void parallel_chunks(std::int64_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n < 4096) {
        fn(0, std::int64_t{0}, n);
        return;
    }
    int used = threads;
    if (static_cast<std::int64_t>(used) > n) used = static_cast<int>(n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(used));
    const std::int64_t step = (n + used - 1) / used;
    for (int t = 0; t < used; ++t) {
        const std::int64_t lo = t * step;
        const std::int64_t hi = std::min<std::int64_t>(n, lo + step);
        if (lo >= hi) break;
        pool.emplace_back([&fn, t, lo, hi] { fn(t, lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace coarsedim
