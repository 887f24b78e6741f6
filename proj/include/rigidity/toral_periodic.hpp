#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "rigidity/common.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/toral_map.hpp"

namespace rigidity {

/// Cap on |det(A^n - I)|, the number of period-n points of the linear model.
inline constexpr long long default_toral_budget = 20000;

/// One period-n point of a toral map. `period` is the iterate used, not the
/// minimal period: a fixed point appears in the period-n set for every n.
struct ToralPeriodicOrbit {
    Vec point;                      ///< representative in [0,1)^d
    int period = 1;
    Eigen::VectorXi translation;    ///< deck vector k with lift^n(x) = x + k
    Mat monodromy;                  ///< D(f^period) at the representative
    std::vector<double> exponents;  ///< log-moduli of monodromy eigenvalues / period, ascending
    double jac_log = 0.0;           ///< (1/period) log |det monodromy|
};

namespace detail {

using MatLL = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

/// A^n in exact integer arithmetic. Entries are kept far below the range
/// where the later Bareiss determinant could overflow; for a hyperbolic
/// matrix an entry that large forces |det(A^n - I)| past any sane budget.
[[nodiscard]] inline MatLL int_pow(const MatI& a, int n) {
    const Eigen::Index d = a.rows();
    MatLL acc = MatLL::Identity(d, d);
    const MatLL base = a.cast<long long>();
    for (int t = 0; t < n; ++t) {
        acc = (acc * base).eval();
        if (acc.cwiseAbs().maxCoeff() > (1LL << 30))
            throw BudgetExceededError("int_pow: entries of A^" + std::to_string(n) +
                                      " exceed the periodic-point budget range");
    }
    return acc;
}

/// Column-style Hermite form: unimodular column operations only, so the
/// column lattice is preserved. Returns H lower triangular with positive
/// diagonal and H Z^d = M Z^d.
[[nodiscard]] inline MatLL column_hnf(MatLL h) {
    const Eigen::Index d = h.rows();
    for (Eigen::Index i = 0; i < d; ++i) {
        for (;;) {
            Eigen::Index piv = -1;
            for (Eigen::Index j = i; j < d; ++j) {
                if (h(i, j) == 0) continue;
                if (piv < 0 || std::llabs(h(i, j)) < std::llabs(h(i, piv))) piv = j;
            }
            if (piv < 0) throw NumericalError("column_hnf: singular matrix");
            if (piv != i) h.col(i).swap(h.col(piv));
            bool clean = true;
            for (Eigen::Index j = i + 1; j < d; ++j) {
                if (h(i, j) == 0) continue;
                h.col(j) -= (h(i, j) / h(i, i)) * h.col(i);
                if (h(i, j) != 0) clean = false;
            }
            if (clean) break;
        }
        if (h(i, i) < 0) h.col(i) = -h.col(i);
    }
    return h;
}

} // namespace detail

/// All solutions of A^n x = x (mod 1), one representative per class, in a
/// deterministic order (mixed-radix index over the Hermite diagonal). The
/// count always equals |det(A^n - I)|.
[[nodiscard]] inline std::vector<Vec> linear_periodic_points(const IntAutomorphism& A, int n,
                                                             long long budget = default_toral_budget) {
    if (n < 1) throw std::invalid_argument("linear_periodic_points: n must be >= 1");
    const Eigen::Index d = A.dim();
    detail::MatLL M = detail::int_pow(A.matrix(), n);
    for (Eigen::Index i = 0; i < d; ++i) M(i, i) -= 1;

    const long long det = detail::int_det(M);
    const long long count = std::llabs(det);
    if (count == 0) throw NotHyperbolicError("linear_periodic_points: A^n - I is singular");
    if (count > budget)
        throw BudgetExceededError("linear_periodic_points: " + std::to_string(count) +
                                  " period-" + std::to_string(n) + " points exceed budget " +
                                  std::to_string(budget));

    const detail::MatLL H = detail::column_hnf(M);
    long long diag_prod = 1;
    for (Eigen::Index i = 0; i < d; ++i) diag_prod *= H(i, i);
    if (diag_prod != count) throw NumericalError("linear_periodic_points: Hermite diagonal mismatch");

    // x = M^{-1} k for k ranging over a transversal of Z^d / H Z^d:
    // lower-triangular H admits {k : 0 <= k_i < H_ii}.
    const Mat Md = M.cast<double>();
    const Eigen::PartialPivLU<Mat> lu(Md);
    std::vector<Vec> pts;
    pts.reserve(static_cast<std::size_t>(count));
    Eigen::VectorXi c = Eigen::VectorXi::Zero(d);
    for (long long idx = 0; idx < count; ++idx) {
        const Vec k = c.cast<double>();
        Vec x = lu.solve(k);
        for (int pass = 0; pass < 2; ++pass) x += lu.solve(k - Md * x);
        pts.push_back(wrap_torus(x));
        for (Eigen::Index i = 0; i < d; ++i) {
            if (++c[i] < H(i, i)) break;
            c[i] = 0;
        }
    }
    return pts;
}

/// Continues one linear seed to a genuine period-n point of f by Newton
/// iteration on G(x) = lift^n(x) - x - k, where the deck vector k is locked
/// in from the seed. Monodromy and exponents are evaluated at the root.
template <ToralMapModel M>
[[nodiscard]] ToralPeriodicOrbit newton_continue(const M& f, int n, Vec x) {
    if (n < 1) throw std::invalid_argument("newton_continue: n must be >= 1");
    const Eigen::Index d = f.dim();
    if (x.size() != d) throw std::invalid_argument("newton_continue: seed dimension mismatch");

    detail::MatLL Mn = detail::int_pow(f.linear().matrix(), n);
    for (Eigen::Index i = 0; i < d; ++i) Mn(i, i) -= 1;
    Eigen::VectorXi k(d);
    {
        const Vec kx = Mn.cast<double>() * x;
        for (Eigen::Index i = 0; i < d; ++i) k[i] = static_cast<int>(std::llround(kx[i]));
    }
    const Vec kd = k.cast<double>();

    const auto orbit_product = [&](const Vec& x0, Vec& xn) {
        Mat P = Mat::Identity(d, d);
        Vec cur = x0;
        for (int t = 0; t < n; ++t) {
            P = (f.jacobian(cur) * P).eval();
            cur = f.lift(cur);
        }
        xn = cur;
        return P;
    };

    bool converged = false;
    Vec xn(d);
    Mat P = orbit_product(x, xn);
    Vec g = xn - x - kd;
    for (int iter = 0; iter < 100 && !converged; ++iter) {
        const Vec step = (P - Mat::Identity(d, d)).partialPivLu().solve(g);
        if (!step.allFinite()) throw NewtonDivergedError("newton_continue: non-finite Newton step");
        // Backtracking on the residual keeps the iterate inside the Newton
        // basin: the seed can sit a full perturbation amplitude away from the
        // root while the n-step monodromy stretch makes full steps overshoot.
        const double r0 = g.cwiseAbs().maxCoeff();
        double lam = 1.0;
        Vec xt;
        for (int half = 0;; ++half) {
            xt = x - lam * step;
            P = orbit_product(xt, xn);
            g = xn - xt - kd;
            if (g.cwiseAbs().maxCoeff() <= (1.0 - 0.5 * lam) * r0 || half == 30) break;
            lam *= 0.5;
        }
        x = xt;
        converged = lam * step.cwiseAbs().maxCoeff() < 1e-12;
    }
    if (!converged)
        throw NewtonDivergedError("newton_continue: no convergence in 100 iterations for period " +
                                  std::to_string(n));

    ToralPeriodicOrbit orb;
    orb.period = n;
    orb.translation = k;
    orb.monodromy = orbit_product(x, xn);
    orb.point = wrap_torus(x);

    const Eigen::EigenSolver<Mat> es(orb.monodromy);
    orb.exponents.resize(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i)
        orb.exponents[static_cast<std::size_t>(i)] = std::log(std::abs(es.eigenvalues()[i])) / n;
    std::sort(orb.exponents.begin(), orb.exponents.end());
    orb.jac_log = std::log(std::abs(orb.monodromy.partialPivLu().determinant())) / n;
    return orb;
}

/// Full period-n inventory: every linear solution continued to f. Output
/// order is the lattice-index order of the seeds, independent of `threads`.
template <ToralMapModel M>
[[nodiscard]] std::vector<ToralPeriodicOrbit> periodic_orbits(const M& f, int n,
                                                              long long budget = default_toral_budget,
                                                              int threads = 1) {
    const std::vector<Vec> seeds = linear_periodic_points(f.linear(), n, budget);
    std::vector<ToralPeriodicOrbit> orbits(seeds.size());
    parallel_for(seeds.size(), threads,
                 [&](std::size_t i) { orbits[i] = newton_continue(f, n, seeds[i]); });

    for (std::size_t i = 0; i < orbits.size(); ++i) {
        for (std::size_t j = i + 1; j < orbits.size(); ++j) {
            double dist = 0.0;
            for (Eigen::Index c = 0; c < f.dim(); ++c)
                dist = std::max(dist, circle_dist(orbits[i].point[c], orbits[j].point[c]));
            if (dist < 1e-8)
                throw DuplicateOrbitError("periodic_orbits: seeds " + std::to_string(i) + " and " +
                                          std::to_string(j) + " collapsed to one period-" +
                                          std::to_string(n) + " point");
        }
    }
    return orbits;
}

enum class Side { stable, unstable };

/// Statistics of the index-i exponent (weakest first within each side)
/// across an orbit inventory.
struct IndexSpread {
    double mean = 0.0;
    double spread = 0.0;          ///< max - min over orbits
    double gap_to_linear = 0.0;   ///< |mean - matching exponent of the linear model|
    int orbit_count = 0;
};

/// Pools the index-i stable or unstable exponent over `orbits`. Every orbit
/// must show the linear model's signature (stable_count negative exponents);
/// a sign flip means the continuation left the linearization's regime.
[[nodiscard]] inline IndexSpread per_index_spread(const IntAutomorphism& A,
                                                  const std::vector<ToralPeriodicOrbit>& orbits,
                                                  int index, Side side) {
    const int d = A.dim();
    const int ns = A.stable_count();
    const int limit = side == Side::stable ? ns : A.unstable_count();
    if (index < 1 || index > limit) throw std::invalid_argument("per_index_spread: index out of range");
    if (orbits.empty()) throw std::invalid_argument("per_index_spread: no orbits");

    const int pos = side == Side::stable ? index - 1 : ns + index - 1;
    IndexSpread out;
    out.orbit_count = static_cast<int>(orbits.size());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    for (std::size_t i = 0; i < orbits.size(); ++i) {
        const auto& ex = orbits[i].exponents;
        if (static_cast<int>(ex.size()) != d)
            throw std::invalid_argument("per_index_spread: orbit dimension mismatch");
        const int negatives = static_cast<int>(std::count_if(ex.begin(), ex.end(),
                                                             [](double e) { return e < 0.0; }));
        if (negatives != ns)
            throw SignatureMismatchError("per_index_spread: orbit " + std::to_string(i) + " has " +
                                         std::to_string(negatives) + " contracting exponents, linear model has " +
                                         std::to_string(ns));
        const double e = ex[static_cast<std::size_t>(pos)];
        lo = std::min(lo, e);
        hi = std::max(hi, e);
        sum += e;
    }
    out.mean = sum / out.orbit_count;
    out.spread = hi - lo;
    out.gap_to_linear = std::abs(out.mean - std::log(std::abs(A.eigenvalues()[pos])));
    return out;
}

/// Max |jac_log| over the inventory; zero iff every orbit is volume-neutral,
/// the periodic-data face of conservativity.
[[nodiscard]] inline double conservativity_indicator(const std::vector<ToralPeriodicOrbit>& orbits) {
    double worst = 0.0;
    for (const auto& o : orbits) worst = std::max(worst, std::abs(o.jac_log));
    return worst;
}

} // namespace rigidity
