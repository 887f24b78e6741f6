#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rigidity/errors.hpp"

namespace rigidity {

inline constexpr double two_pi = 6.283185307179586476925286766559;

/// Fractional part in [0, 1). frac(-0.25) == 0.75.
[[nodiscard]] inline double frac(double x) {
    double f = x - std::floor(x);
    if (f >= 1.0) f -= 1.0; // floor rounding at negative epsilons
    return f;
}

/// Signed representative of x mod 1 in [-1/2, 1/2).
[[nodiscard]] inline double wrap_half(double x) {
    double f = frac(x + 0.5) - 0.5;
    return f;
}

/// Distance on the circle R/Z.
[[nodiscard]] inline double circle_dist(double a, double b) {
    return std::fabs(wrap_half(a - b));
}

/// Deterministic RNG. `stream` separates independent draws so that adding a
/// consumer never perturbs existing ones.
[[nodiscard]] inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    rng.discard(8);
    return rng;
}

/// Regularity grade: estimated Hölder exponent with its fit quality.
struct RegularityFit {
    double alpha = 0.0;
    double r2 = 0.0;
};

/// Least-squares fit y = slope*x + intercept with coefficient of determination.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

[[nodiscard]] inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw NumericalError("fit_line: need at least two samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw NumericalError("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0;
    const double mean_y = sy / n;
    double ss_tot = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pred = f.slope * x[i] + f.intercept;
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

/// Bisection for a strictly increasing continuous g on [lo, hi] with
/// g(lo) <= 0 <= g(hi); refines to |hi - lo| <= xtol.
template <typename G>
[[nodiscard]] double bisect_increasing(G&& g, double lo, double hi, double xtol = 1e-13) {
    double glo = g(lo);
    double ghi = g(hi);
    if (glo > 0.0 || ghi < 0.0)
        throw RootBracketError("bisect_increasing: no sign change on bracket");
    while (hi - lo > xtol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break; // resolution floor
        const double gm = g(mid);
        if (gm < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace rigidity
