#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rigidity/circle_map.hpp"
#include "rigidity/common.hpp"
#include "rigidity/errors.hpp"

namespace rigidity {

inline constexpr long default_circle_budget = 1L << 20;

/// One fixed point of f^n. `period` is the n it was enumerated at (orbits of
/// period properly dividing n reappear, with the same exponent).
struct PeriodicOrbit {
    int period = 1;
    double point = 0.0;      ///< circle coordinate in [0,1)
    double multiplier = 0.0; ///< |DF^n(point)|
    double exponent = 0.0;   ///< (1/n) log multiplier
};

namespace detail {

template <CircleMapModel M>
[[nodiscard]] long checked_branch_count(const M& m, int n, long budget) {
    if (n < 1) throw std::invalid_argument("period must be >= 1");
    long count = 1;
    for (int i = 0; i < n; ++i) {
        count *= m.degree();
        if (count > budget) throw BudgetExceededError("d^n exceeds period budget");
    }
    return count;
}

} // namespace detail

/// All d^n - 1 fixed points of f^n, found as the roots of the strictly
/// increasing G(x) = F^n(x) - x - m over the admissible integers m.
template <CircleMapModel M>
[[nodiscard]] std::vector<PeriodicOrbit> periodic_points(const M& m, int n,
                                                         long budget = default_circle_budget) {
    const long dn = detail::checked_branch_count(m, n, budget);
    const double Fn0 = lift_pow(m, 0.0, n);
    const long m0 = static_cast<long>(std::ceil(Fn0 - 1e-11));
    std::vector<PeriodicOrbit> out;
    out.reserve(static_cast<std::size_t>(dn - 1));
    for (long mm = m0; mm <= m0 + dn - 2; ++mm) {
        auto G = [&](double t) { return lift_pow(m, t, n) - t - static_cast<double>(mm); };
        double x = bisect_increasing(G, -1e-7, 1.0 + 1e-7);
        const double g1 = lift_pow_d1(m, x, n) - 1.0;
        if (g1 > 0.0) {
            const double polished = x - G(x) / g1;
            if (std::fabs(polished - x) < 1e-7) x = polished;
        }
        PeriodicOrbit orb;
        orb.period = n;
        orb.point = frac(x);
        double logmult = 0.0;
        for (double w : circle_orbit(m, orb.point, n)) logmult += std::log(m.lift_d1(w));
        orb.multiplier = std::exp(logmult);
        orb.exponent = logmult / n;
        out.push_back(orb);
    }
    std::sort(out.begin(), out.end(),
              [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.point < b.point; });
    return out;
}

struct ConstantDataStat {
    double mean = 0.0;
    double spread = 0.0; ///< max - min exponent
    double min_exponent = 0.0;
    double max_exponent = 0.0;
    double log_d_gap = 0.0; ///< |mean - log d|
    bool constant = false;  ///< spread < tol_cd
};

[[nodiscard]] inline ConstantDataStat constant_data_statistic(const std::vector<PeriodicOrbit>& orbits,
                                                              int degree, double tol_cd = 1e-6) {
    if (orbits.empty()) throw std::invalid_argument("constant_data_statistic: no orbits");
    ConstantDataStat s;
    s.min_exponent = s.max_exponent = orbits.front().exponent;
    double sum = 0.0;
    for (const auto& o : orbits) {
        sum += o.exponent;
        s.min_exponent = std::min(s.min_exponent, o.exponent);
        s.max_exponent = std::max(s.max_exponent, o.exponent);
    }
    s.mean = sum / static_cast<double>(orbits.size());
    s.spread = s.max_exponent - s.min_exponent;
    s.log_d_gap = std::fabs(s.mean - std::log(static_cast<double>(degree)));
    s.constant = s.spread < tol_cd;
    return s;
}

/// The d^k preimages of `base` under f^k, sorted ascending in [0,1), built by
/// pulling back one inverse-branch generation at a time. When base is a fixed
/// point the levels are nested; previously computed points are then reused
/// bitwise so refining the level never perturbs coarser samples.
template <CircleMapModel M>
[[nodiscard]] std::vector<double> preimage_set(const M& m, int k, double base,
                                               long budget = default_circle_budget) {
    const long total = detail::checked_branch_count(m, k, budget);
    const double b0 = frac(base);
    const bool nested = circle_dist(frac(m.lift(b0)), b0) < 1e-10;
    std::vector<double> cur{b0};
    cur.reserve(static_cast<std::size_t>(total));
    for (int lvl = 0; lvl < k; ++lvl) {
        std::vector<double> next;
        next.reserve(cur.size() * static_cast<std::size_t>(m.degree()));
        for (double y : cur)
            for (double x : inverse_branches(m, y)) next.push_back(x);
        std::sort(next.begin(), next.end());
        if (nested) {
            // snap recomputed copies of existing points back to their stored values
            for (double x : cur) {
                auto it = std::lower_bound(next.begin(), next.end(), x);
                double best = -1.0;
                double bdist = 1.0;
                for (auto cand : {it == next.begin() ? next.end() : std::prev(it), it}) {
                    if (cand == next.end()) continue;
                    const double dd = std::fabs(*cand - x);
                    if (dd < bdist) {
                        bdist = dd;
                        best = static_cast<double>(cand - next.begin());
                    }
                }
                if (best >= 0.0 && bdist < 1e-11)
                    next[static_cast<std::size_t>(best)] = x;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

/// Maximal injectivity intervals of f^n: the circle split at the d^n preimages
/// of `base`. Sizes wrap around; they sum to 1.
struct InjectivityPartition {
    int n = 1;
    std::vector<double> breakpoints; ///< sorted left endpoints in [0,1)
    std::vector<double> sizes;       ///< sizes[i] = breakpoints[i+1] - breakpoints[i] (cyclically)
};

template <CircleMapModel M>
[[nodiscard]] InjectivityPartition injectivity_partition(const M& m, int n, double base,
                                                         long budget = default_circle_budget) {
    InjectivityPartition part;
    part.n = n;
    part.breakpoints = preimage_set(m, n, base, budget);
    const std::size_t cnt = part.breakpoints.size();
    part.sizes.resize(cnt);
    for (std::size_t i = 0; i + 1 < cnt; ++i)
        part.sizes[i] = part.breakpoints[i + 1] - part.breakpoints[i];
    part.sizes[cnt - 1] = part.breakpoints[0] + 1.0 - part.breakpoints[cnt - 1];
    return part;
}

/// For each interval of a partition anchored at the fixed point, the product
/// |I_{n,j}| * |DF^n(p_{n,j})| where p_{n,j} is a periodic point in the closed
/// interval (ties at shared endpoints resolve to the left interval).
template <CircleMapModel M>
[[nodiscard]] std::vector<double> sandwich_products(const M& m, const InjectivityPartition& part,
                                                    const std::vector<PeriodicOrbit>& orbits) {
    const std::size_t cnt = part.breakpoints.size();
    std::vector<double> prods(cnt, -1.0);
    std::vector<double> pts;
    pts.reserve(orbits.size());
    for (const auto& o : orbits) pts.push_back(o.point);
    std::sort(pts.begin(), pts.end());
    const double eps = 1e-9;
    for (std::size_t j = 0; j < cnt; ++j) {
        const double l = part.breakpoints[j];
        const double len = part.sizes[j];
        // leftmost periodic point inside the closed interval [l, l+len]
        double chosen = -1.0;
        auto lo = std::lower_bound(pts.begin(), pts.end(), l - eps);
        if (lo != pts.end() && *lo - l <= len + eps) {
            chosen = *lo;
        } else if (!pts.empty() && pts.front() + 1.0 - l <= len + eps) {
            chosen = pts.front(); // interval closes past the wrap
        }
        if (chosen < 0.0) continue;
        double logmult = 0.0;
        for (double w : circle_orbit(m, chosen, part.n)) logmult += std::log(m.lift_d1(w));
        prods[j] = part.sizes[j] * std::exp(logmult);
    }
    return prods;
}

struct Theorem1Row {
    int n = 1;
    double min_ratio = 0.0; ///< min_j d^n |I_{n,j}|
    double max_ratio = 0.0; ///< max_j d^n |I_{n,j}|
    double dn_over_lambda_n = 0.0;
    double lambda_min_n = 0.0; ///< min orbit exponent at this period
    double lambda_max_n = 0.0;
};

struct Theorem1Report {
    bool constant_data = false;
    ConstantDataStat stat;
    std::vector<Theorem1Row> rows;
};

/// Per-period interval/multiplier comparison table. With constant data all
/// three ratio columns must sit inside [1/C^2, C^2]; otherwise the report
/// flags the violation and carries the per-period exponent ranges instead of a
/// verdict (report-only mode).
template <CircleMapModel M>
[[nodiscard]] Theorem1Report theorem1_inequality_report(const M& m, int n_max,
                                                        double tol_cd = 1e-6,
                                                        long budget = default_circle_budget) {
    const double p0 = fixed_point_near_zero(m);
    std::vector<PeriodicOrbit> pooled;
    Theorem1Report rep;
    for (int n = 1; n <= n_max; ++n) {
        auto orbs = periodic_points(m, n, budget);
        auto part = injectivity_partition(m, n, p0, budget);
        Theorem1Row row;
        row.n = n;
        const double dn = std::pow(static_cast<double>(m.degree()), n);
        auto [mn, mx] = std::minmax_element(part.sizes.begin(), part.sizes.end());
        row.min_ratio = dn * *mn;
        row.max_ratio = dn * *mx;
        row.lambda_min_n = row.lambda_max_n = orbs.front().exponent;
        for (const auto& o : orbs) {
            row.lambda_min_n = std::min(row.lambda_min_n, o.exponent);
            row.lambda_max_n = std::max(row.lambda_max_n, o.exponent);
        }
        rep.rows.push_back(row);
        pooled.insert(pooled.end(), orbs.begin(), orbs.end());
    }
    rep.stat = constant_data_statistic(pooled, m.degree(), tol_cd);
    rep.constant_data = rep.stat.constant;
    for (auto& row : rep.rows)
        row.dn_over_lambda_n = std::pow(static_cast<double>(m.degree()), row.n) /
                               std::exp(row.n * rep.stat.mean);
    return rep;
}

/// Largest observed n-step derivative ratio between points of the same
/// maximal injectivity interval, over n <= n_max. This is the sharp empirical
/// counterpart of the a-priori distortion constant; it must never exceed C_f.
template <CircleMapModel M>
[[nodiscard]] double empirical_distortion(const M& m, int n_max,
                                          long budget = default_circle_budget,
                                          std::size_t max_intervals_per_level = 20000) {
    const double p0 = fixed_point_near_zero(m);
    double worst = 1.0;
    for (int n = 1; n <= n_max; ++n) {
        const auto part = injectivity_partition(m, n, p0, budget);
        const std::size_t cnt = part.breakpoints.size();
        const std::size_t stride = std::max<std::size_t>(1, cnt / max_intervals_per_level);
        for (std::size_t j = 0; j < cnt; j += stride) {
            const double l = part.breakpoints[j];
            const double len = part.sizes[j];
            double lo = 0.0, hi = 0.0;
            bool first = true;
            for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                double lm = 0.0;
                for (double w : circle_orbit(m, l + t * len, n)) lm += std::log(m.lift_d1(w));
                if (first || lm < lo) lo = lm;
                if (first || lm > hi) hi = lm;
                first = false;
            }
            worst = std::max(worst, std::exp(hi - lo));
        }
    }
    return worst;
}

} // namespace rigidity
