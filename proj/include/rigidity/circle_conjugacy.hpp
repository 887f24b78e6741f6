#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rigidity/circle_periodic.hpp"
#include "rigidity/transfer_operator.hpp"

namespace rigidity {

/// Sampled orientation-preserving circle homeomorphism h with h(x+1) = h(x)+1,
/// stored as lifted values at the uniform grid j/n, strictly increasing,
/// samples.front() in [0,1) and samples.back() = samples.front() + 1 (up to the
/// route's wrap tolerance). When the grid is d-adic, degree/level record d and
/// k with n = d^k; scale-based regularity analysis needs them.
struct ConjugacyApprox {
    int degree = 0;
    int level = 0;
    std::vector<double> samples;

    [[nodiscard]] long intervals() const { return static_cast<long>(samples.size()) - 1; }

    /// Linear interpolation of the lift at t (any real), using h(t+1) = h(t)+1.
    [[nodiscard]] double eval(double t) const {
        const double K = std::floor(t);
        const double w = (t - K) * static_cast<double>(intervals());
        const long j = std::min(intervals() - 1, static_cast<long>(std::floor(w)));
        const double u = w - static_cast<double>(j);
        const double a = samples[static_cast<std::size_t>(j)];
        const double b = samples[static_cast<std::size_t>(j) + 1];
        return K + a + u * (b - a);
    }
};

namespace detail {

/// Smallest base d >= 2 with d^k = n for some k >= 1; {0,0} if none.
[[nodiscard]] inline std::pair<int, int> detect_level(long n) {
    for (int d = 2; d <= 9; ++d) {
        long v = d;
        int k = 1;
        while (v < n) {
            v *= d;
            ++k;
        }
        if (v == n) return {d, k};
    }
    return {0, 0};
}

} // namespace detail

/// The conjugacy h with f o h = h o E_d on the d-adic rationals of level k:
/// h(j/d^k) sweeps the level-k preimage tree of the anchor fixed point, in
/// circular order starting at the anchor. Exact up to root solving, so the
/// equivariance residual at sampled points is at solver noise.
template <CircleMapModel M>
[[nodiscard]] ConjugacyApprox symbolic_conjugacy(const M& m, int k,
                                                 long budget = default_circle_budget) {
    const double p0 = fixed_point_near_zero(m);
    auto pts = preimage_set(m, k, p0, budget);
    const long n = static_cast<long>(pts.size());
    auto anchor = std::lower_bound(pts.begin(), pts.end(), p0);
    if (anchor == pts.end() || *anchor != p0)
        throw NumericalError("symbolic_conjugacy: anchor fixed point missing from its own preimage set");
    const long r = anchor - pts.begin();
    ConjugacyApprox hc;
    hc.degree = m.degree();
    hc.level = k;
    hc.samples.resize(static_cast<std::size_t>(n) + 1);
    for (long j = 0; j < n; ++j) {
        const long idx = (r + j) % n;
        hc.samples[static_cast<std::size_t>(j)] = pts[static_cast<std::size_t>(idx)] + (idx < r ? 1.0 : 0.0);
    }
    hc.samples[static_cast<std::size_t>(n)] = p0 + 1.0;
    for (long j = 0; j < n; ++j)
        if (!(hc.samples[static_cast<std::size_t>(j)] < hc.samples[static_cast<std::size_t>(j) + 1]))
            throw NumericalError("symbolic_conjugacy: samples not strictly monotone");
    return hc;
}

namespace detail {

/// Periodic piecewise-linear interpolation through bin midpoint values.
[[nodiscard]] inline double density_interp(const DensityApprox& dens, double x) {
    const int N = dens.bins;
    const double u = frac(x) * static_cast<double>(N) - 0.5;
    const long i0 = static_cast<long>(std::floor(u));
    const double t = u - static_cast<double>(i0);
    const int a = static_cast<int>(((i0 % N) + N) % N);
    const int b = (a + 1) % N;
    const double v = (1.0 - t) * dens.weights[static_cast<std::size_t>(a)] +
                     t * dens.weights[static_cast<std::size_t>(b)];
    if (v < 1e-6) throw DensityVanishesError("ode_conjugacy: interpolated density below 1e-6");
    return v;
}

} // namespace detail

/// Conjugacy transporting the source measure to the target measure: RK4 solve
/// of z'(t) = omega_source(t) / omega_target(z) with z(0) = z0 on [0,1],
/// sampled at steps+1 uniform t. The solution is a degree-1 circle
/// homeomorphism precisely when the total masses agree, checked at t = 1.
[[nodiscard]] inline ConjugacyApprox ode_conjugacy(const DensityApprox& source,
                                                   const DensityApprox& target, double z0,
                                                   int steps, double wrap_tol = 1e-6) {
    if (steps < 2) throw std::invalid_argument("ode_conjugacy: need steps >= 2");
    auto rhs = [&](double t, double z) {
        return detail::density_interp(source, t) / detail::density_interp(target, z);
    };
    ConjugacyApprox hc;
    hc.samples.resize(static_cast<std::size_t>(steps) + 1);
    const double h = 1.0 / static_cast<double>(steps);
    double z = z0;
    hc.samples[0] = z;
    for (int s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(steps);
        const double k1 = rhs(t, z);
        const double k2 = rhs(t + 0.5 * h, z + 0.5 * h * k1);
        const double k3 = rhs(t + 0.5 * h, z + 0.5 * h * k2);
        const double k4 = rhs(t + h, z + h * k3);
        z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        hc.samples[static_cast<std::size_t>(s) + 1] = z;
    }
    if (std::fabs(hc.samples[static_cast<std::size_t>(steps)] - hc.samples[0] - 1.0) > wrap_tol)
        throw EndpointMismatchError("ode_conjugacy: z(1) - z(0) differs from 1 beyond wrap_tol");
    const auto [d, k] = detail::detect_level(steps);
    hc.degree = d;
    hc.level = k;
    return hc;
}

/// Least-squares Hoelder exponent: slope of log(max image length over the d^m
/// level-m intervals) against log(d^-m) for m = 2..k. The two coarsest scales
/// are dropped as transients.
[[nodiscard]] inline RegularityFit holder_exponent(const ConjugacyApprox& hc) {
    if (hc.degree < 2 || hc.level < 6)
        throw std::invalid_argument("holder_exponent: need a d-adic sample grid of level >= 6");
    std::vector<double> xs, ys;
    for (int m = 2; m <= hc.level; ++m) {
        long stride = 1;
        for (int i = 0; i < hc.level - m; ++i) stride *= hc.degree;
        const long nm = hc.intervals() / stride;
        double osc = 0.0;
        for (long j = 0; j < nm; ++j)
            osc = std::max(osc, hc.samples[static_cast<std::size_t>((j + 1) * stride)] -
                                    hc.samples[static_cast<std::size_t>(j * stride)]);
        xs.push_back(-static_cast<double>(m) * std::log(static_cast<double>(hc.degree)));
        ys.push_back(std::log(osc));
    }
    const auto fit = fit_line(xs, ys);
    return {fit.slope, fit.r2};
}

/// True iff every finest-level difference quotient of h lies in [1/C^2, C^2].
/// The window carries a 1e-9 relative cushion: quotients sit on root-solver
/// noise, while genuine violations are orders of magnitude outside.
[[nodiscard]] inline bool bilipschitz_certificate(const ConjugacyApprox& hc, double C) {
    const double lo = (1.0 / (C * C)) * (1.0 - 1e-9);
    const double hi = (C * C) * (1.0 + 1e-9);
    const double n = static_cast<double>(hc.intervals());
    for (long j = 0; j < hc.intervals(); ++j) {
        const double q = (hc.samples[static_cast<std::size_t>(j) + 1] -
                          hc.samples[static_cast<std::size_t>(j)]) * n;
        if (q < lo || q > hi) return false;
    }
    return true;
}

} // namespace rigidity
