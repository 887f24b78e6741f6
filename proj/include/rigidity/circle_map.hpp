#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <stdexcept>
#include <vector>

#include "rigidity/common.hpp"
#include "rigidity/errors.hpp"

namespace rigidity {

/// One harmonic of a periodic perturbation: a*sin(2*pi*k*x) + b*cos(2*pi*k*x).
struct TrigTerm {
    int k = 1;
    double a = 0.0; ///< sine amplitude
    double b = 0.0; ///< cosine amplitude
};

namespace detail {

inline double trig_sum(const std::vector<TrigTerm>& ts, double x) {
    double s = 0.0;
    for (const auto& t : ts) {
        const double w = two_pi * t.k * x;
        s += t.a * std::sin(w) + t.b * std::cos(w);
    }
    return s;
}

inline double trig_sum_d1(const std::vector<TrigTerm>& ts, double x) {
    double s = 0.0;
    for (const auto& t : ts) {
        const double w = two_pi * t.k * x;
        s += two_pi * t.k * (t.a * std::cos(w) - t.b * std::sin(w));
    }
    return s;
}

inline double trig_sum_d2(const std::vector<TrigTerm>& ts, double x) {
    double s = 0.0;
    for (const auto& t : ts) {
        const double w = two_pi * t.k * x;
        const double c = two_pi * t.k;
        s += -c * c * (t.a * std::sin(w) + t.b * std::cos(w));
    }
    return s;
}

inline double amp_sum(const std::vector<TrigTerm>& ts, int dorder) {
    double s = 0.0;
    for (const auto& t : ts) {
        double c = 1.0;
        for (int i = 0; i < dorder; ++i) c *= two_pi * t.k;
        s += c * std::hypot(t.a, t.b);
    }
    return s;
}

inline void validate_terms(const std::vector<TrigTerm>& ts) {
    for (const auto& t : ts)
        if (t.k < 1) throw std::invalid_argument("trig term frequency must be >= 1");
}

} // namespace detail

/// Lift of an expanding circle endomorphism in the trigonometric family:
/// F(x) = d*x + sum_k a_k sin(2 pi k x) + b_k cos(2 pi k x), with F(x+1) = F(x) + d.
class TrigLift {
public:
    TrigLift(int degree, std::vector<TrigTerm> terms) : d_(degree), terms_(std::move(terms)) {
        if (d_ < 2) throw std::invalid_argument("TrigLift: degree must be >= 2");
        detail::validate_terms(terms_);
    }

    [[nodiscard]] int degree() const { return d_; }

    [[nodiscard]] double lift(double x) const { return d_ * x + detail::trig_sum(terms_, x); }
    [[nodiscard]] double lift_d1(double x) const { return d_ + detail::trig_sum_d1(terms_, x); }
    [[nodiscard]] double lift_d2(double x) const { return detail::trig_sum_d2(terms_, x); }

    /// Upper bound on sup |F''| from the coefficient sums.
    [[nodiscard]] double second_derivative_bound() const { return detail::amp_sum(terms_, 2); }

    /// Upper bound on sup |F(x) - d*x|.
    [[nodiscard]] double perturbation_bound() const { return detail::amp_sum(terms_, 0); }

    [[nodiscard]] const std::vector<TrigTerm>& terms() const { return terms_; }

private:
    int d_;
    std::vector<TrigTerm> terms_;
};

/// Orientation preserving circle diffeomorphism H(x) = x + sum of harmonics,
/// used to build smooth-conjugate models. Requires the coefficient bound on
/// sup |H' - 1| to stay below 1 so that H is certifiably a diffeomorphism.
class TrigDiffeo {
public:
    explicit TrigDiffeo(std::vector<TrigTerm> terms) : terms_(std::move(terms)) {
        detail::validate_terms(terms_);
        slope_dev_ = detail::amp_sum(terms_, 1);
        if (slope_dev_ >= 1.0)
            throw std::invalid_argument("TrigDiffeo: derivative bound reaches zero slope");
    }

    [[nodiscard]] double value(double x) const { return x + detail::trig_sum(terms_, x); }
    [[nodiscard]] double d1(double x) const { return 1.0 + detail::trig_sum_d1(terms_, x); }
    [[nodiscard]] double d2(double x) const { return detail::trig_sum_d2(terms_, x); }

    [[nodiscard]] double min_slope() const { return 1.0 - slope_dev_; }
    [[nodiscard]] double max_slope() const { return 1.0 + slope_dev_; }
    [[nodiscard]] double second_bound() const { return detail::amp_sum(terms_, 2); }
    [[nodiscard]] double displacement_bound() const { return detail::amp_sum(terms_, 0); }

    /// H^{-1}(y) by guarded Newton; the global slope bound makes this a
    /// contraction-backed solve, accurate to ~1e-15.
    [[nodiscard]] double inverse(double y) const {
        double x = y;
        for (int it = 0; it < 64; ++it) {
            const double r = value(x) - y;
            const double step = r / d1(x);
            x -= step;
            if (std::fabs(step) < 1e-15) return x;
        }
        // Newton stalled (cannot happen for valid coefficients); fall back to bisection.
        const double b = displacement_bound() + 1e-9;
        return bisect_increasing([&](double t) { return value(t) - y; }, y - b, y + b, 1e-15);
    }

    [[nodiscard]] const std::vector<TrigTerm>& terms() const { return terms_; }

private:
    std::vector<TrigTerm> terms_;
    double slope_dev_;
};

/// Lift of the smooth-conjugate model g = H o f o H^{-1} for a trig base map f
/// and trig diffeo H. Same degree as f; derivatives come from the chain rule,
///   g'(x)  = H'(F(y)) F'(y) / H'(y),            y = H^{-1}(x),
///   g''(x) = [H''(F)F'^2 H'(y) + H'(F)F'' H'(y) - H'(F)F' H''(y)] / H'(y)^3.
class ConjugatedLift {
public:
    ConjugatedLift(TrigLift base, TrigDiffeo h) : f_(std::move(base)), h_(std::move(h)) {}

    [[nodiscard]] int degree() const { return f_.degree(); }

    [[nodiscard]] double lift(double x) const {
        const double y = h_.inverse(x);
        return h_.value(f_.lift(y));
    }

    [[nodiscard]] double lift_d1(double x) const {
        const double y = h_.inverse(x);
        return h_.d1(f_.lift(y)) * f_.lift_d1(y) / h_.d1(y);
    }

    [[nodiscard]] double lift_d2(double x) const {
        const double y = h_.inverse(x);
        const double Fy = f_.lift(y);
        const double F1 = f_.lift_d1(y);
        const double hy = h_.d1(y);
        const double num = h_.d2(Fy) * F1 * F1 * hy + h_.d1(Fy) * f_.lift_d2(y) * hy -
                           h_.d1(Fy) * F1 * h_.d2(y);
        return num / (hy * hy * hy);
    }

    [[nodiscard]] double second_derivative_bound() const {
        const double MF1 = f_.degree() + detail::amp_sum(f_.terms(), 1);
        const double SF = f_.second_derivative_bound();
        const double mH = h_.min_slope();
        const double MH = h_.max_slope();
        const double SH = h_.second_bound();
        return (SH * MF1 * MF1 * MH + MH * SF * MH + MH * MF1 * SH) / (mH * mH * mH);
    }

    [[nodiscard]] double perturbation_bound() const {
        return (1.0 + f_.degree()) * h_.displacement_bound() + f_.perturbation_bound();
    }

    [[nodiscard]] const TrigLift& base() const { return f_; }
    [[nodiscard]] const TrigDiffeo& conjugator() const { return h_; }

private:
    TrigLift f_;
    TrigDiffeo h_;
};

template <typename M>
concept CircleMapModel = requires(const M& m, double x) {
    { m.degree() } -> std::convertible_to<int>;
    { m.lift(x) } -> std::convertible_to<double>;
    { m.lift_d1(x) } -> std::convertible_to<double>;
    { m.lift_d2(x) } -> std::convertible_to<double>;
    { m.second_derivative_bound() } -> std::convertible_to<double>;
    { m.perturbation_bound() } -> std::convertible_to<double>;
};

/// Lift value F(x).
template <CircleMapModel M>
[[nodiscard]] double eval(const M& m, double x) {
    return m.lift(x);
}

/// F'(x) or F''(x).
template <CircleMapModel M>
[[nodiscard]] double derivative(const M& m, double x, int order = 1) {
    if (order == 1) return m.lift_d1(x);
    if (order == 2) return m.lift_d2(x);
    throw std::invalid_argument("derivative: order must be 1 or 2");
}

struct ExpansionCertificate {
    double lambda_min = 0.0; ///< certified lower bound on inf F'
    double lambda_max = 0.0; ///< certified upper bound on sup F'
    long grid_n = 0;
    bool ok = false;
};

/// Certified expansivity check: grid minimum of F' minus the Lipschitz slack
/// sup|F''| / grid_n. ok iff the resulting lower bound exceeds 1.
template <CircleMapModel M>
[[nodiscard]] ExpansionCertificate check_expanding(const M& m, long grid_n = 1L << 16) {
    if (grid_n < 2) throw std::invalid_argument("check_expanding: grid_n too small");
    const double slack = m.second_derivative_bound() / static_cast<double>(grid_n);
    double lo = m.lift_d1(0.0);
    double hi = lo;
    for (long i = 1; i < grid_n; ++i) {
        const double v = m.lift_d1(static_cast<double>(i) / static_cast<double>(grid_n));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    ExpansionCertificate c;
    c.lambda_min = lo - slack;
    c.lambda_max = hi + slack;
    c.grid_n = grid_n;
    c.ok = c.lambda_min > 1.0;
    return c;
}

template <CircleMapModel M>
[[nodiscard]] ExpansionCertificate require_expanding(const M& m, long grid_n = 1L << 16) {
    auto c = check_expanding(m, grid_n);
    if (!c.ok) throw NotExpandingError("map is not certifiably expanding");
    return c;
}

/// Bounded distortion constant C_f = exp(M / (1 - 1/lambda)) with
/// M = sup|F''| / inf F' and lambda the certified expansion bound; this equals
/// exp(sup|F''| / (lambda - 1)).
template <CircleMapModel M>
[[nodiscard]] double distortion_constant(const M& m, const ExpansionCertificate& cert) {
    if (!cert.ok) throw NotExpandingError("distortion_constant: certificate not expanding");
    return std::exp(m.second_derivative_bound() / (cert.lambda_min - 1.0));
}

/// Lift evaluated with the integer part split off, so trig terms always see a
/// reduced argument: F(K + w) = d*K + F(w). Keeps precision for iterated lifts.
template <CircleMapModel M>
[[nodiscard]] double lift_full(const M& m, double x) {
    const double K = std::floor(x);
    return m.degree() * K + m.lift(x - K);
}

/// n-fold composed lift F^n(x).
template <CircleMapModel M>
[[nodiscard]] double lift_pow(const M& m, double x, int n) {
    double v = x;
    for (int i = 0; i < n; ++i) v = lift_full(m, v);
    return v;
}

/// Derivative of the composed lift, as the product of F' along the orbit.
template <CircleMapModel M>
[[nodiscard]] double lift_pow_d1(const M& m, double x, int n) {
    double v = x;
    double p = 1.0;
    for (int i = 0; i < n; ++i) {
        const double w = frac(v);
        p *= m.lift_d1(w);
        v = lift_full(m, v);
    }
    return p;
}

/// Circle orbit x, f(x), ..., f^{n-1}(x) as points in [0,1).
template <CircleMapModel M>
[[nodiscard]] std::vector<double> circle_orbit(const M& m, double x, int n) {
    std::vector<double> o(static_cast<std::size_t>(n));
    double v = frac(x);
    for (int i = 0; i < n; ++i) {
        o[static_cast<std::size_t>(i)] = v;
        v = frac(m.lift(v));
    }
    return o;
}

/// Solves F^n(x) = target for the unique x in [lo, hi] (the composed lift is
/// strictly increasing). Bisection to 1e-13 plus one Newton polish.
template <CircleMapModel M>
[[nodiscard]] double solve_lift_pow(const M& m, int n, double target, double lo, double hi) {
    double x = bisect_increasing([&](double t) { return lift_pow(m, t, n) - target; }, lo, hi);
    const double g = lift_pow(m, x, n) - target;
    const double g1 = lift_pow_d1(m, x, n);
    if (g1 > 0.0) {
        const double polished = x - g / g1;
        if (polished >= lo && polished <= hi) x = polished;
    }
    return x;
}

/// The d preimages of circle point y under f, sorted ascending in [0,1).
/// The bracket is widened by 1e-7 on both sides so exact branch-boundary hits
/// (targets equal to F(0) or F(1) up to roundoff) still bracket a root; the
/// result is wrapped back into [0,1).
template <CircleMapModel M>
[[nodiscard]] std::vector<double> inverse_branches(const M& m, double y) {
    const double y0 = frac(y);
    const double F0 = m.lift(0.0);
    const int d = m.degree();
    std::vector<double> pre;
    pre.reserve(static_cast<std::size_t>(d));
    const long t0 = static_cast<long>(std::ceil(F0 - y0 - 1e-14));
    for (long t = t0; t < t0 + d; ++t) {
        const double target = y0 + static_cast<double>(t);
        const double x = solve_lift_pow(m, 1, target, -1e-7, 1.0 + 1e-7);
        pre.push_back(frac(x));
    }
    std::sort(pre.begin(), pre.end());
    return pre;
}

/// The fixed point of f reachable from 0: root of F(x) - x - round(F(0)),
/// wrapped into [0,1). Every map in the family has exactly d-1 fixed points;
/// this one anchors conjugacy constructions.
template <CircleMapModel M>
[[nodiscard]] double fixed_point_near_zero(const M& m) {
    const double mm = std::round(m.lift(0.0));
    const double W = (2.0 * m.perturbation_bound() + 1.0) / (m.degree() - 1.0) + 0.25;
    double x = bisect_increasing([&](double t) { return lift_full(m, t) - t - mm; }, -W, W);
    for (int it = 0; it < 3; ++it) { // polish so roots at integers wrap exactly
        const double step = (lift_full(m, x) - x - mm) / (m.lift_d1(frac(x)) - 1.0);
        if (!std::isfinite(step) || std::fabs(step) > 1e-7) break;
        x -= step;
    }
    return frac(x);
}

} // namespace rigidity
