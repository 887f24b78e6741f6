#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rigidity/common.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/toral_map.hpp"

namespace rigidity {

/// Periodic R^d-valued displacement field sampled on a uniform N^d grid,
/// evaluated by multilinear interpolation. Periodicity is exact by indexing.
class GridField {
  public:
    GridField(int d, int n) : d_(d), n_(n) {
        if (d < 1 || n < 2) throw std::invalid_argument("GridField: need d >= 1, n >= 2");
        std::size_t total = 1;
        for (int c = 0; c < d; ++c) total *= static_cast<std::size_t>(n);
        vals_.assign(total * static_cast<std::size_t>(d), 0.0);
    }

    [[nodiscard]] int dim() const { return d_; }
    [[nodiscard]] int resolution() const { return n_; }
    [[nodiscard]] std::size_t points() const { return vals_.size() / static_cast<std::size_t>(d_); }

    [[nodiscard]] double& at(std::size_t idx, int c) { return vals_[idx * static_cast<std::size_t>(d_) + static_cast<std::size_t>(c)]; }
    [[nodiscard]] double at(std::size_t idx, int c) const { return vals_[idx * static_cast<std::size_t>(d_) + static_cast<std::size_t>(c)]; }

    /// Grid point for a flat index (coordinate order: index = sum g_c * n^c).
    [[nodiscard]] Vec grid_point(std::size_t idx) const {
        Vec x(d_);
        for (int c = 0; c < d_; ++c) {
            x[c] = static_cast<double>(idx % static_cast<std::size_t>(n_)) / n_;
            idx /= static_cast<std::size_t>(n_);
        }
        return x;
    }

    [[nodiscard]] Vec eval(const Vec& x) const {
        std::vector<int> base(static_cast<std::size_t>(d_));
        std::vector<double> t(static_cast<std::size_t>(d_));
        for (int c = 0; c < d_; ++c) {
            const double g = frac(x[c]) * n_;
            const double fl = std::floor(g);
            base[static_cast<std::size_t>(c)] = static_cast<int>(fl) % n_;
            t[static_cast<std::size_t>(c)] = g - fl;
        }
        Vec out = Vec::Zero(d_);
        for (int corner = 0; corner < (1 << d_); ++corner) {
            double w = 1.0;
            std::size_t idx = 0, stride = 1;
            for (int c = 0; c < d_; ++c) {
                const int up = (corner >> c) & 1;
                w *= up ? t[static_cast<std::size_t>(c)] : 1.0 - t[static_cast<std::size_t>(c)];
                idx += stride * static_cast<std::size_t>((base[static_cast<std::size_t>(c)] + up) % n_);
                stride *= static_cast<std::size_t>(n_);
            }
            for (int c = 0; c < d_; ++c) out[c] += w * at(idx, c);
        }
        return out;
    }

    [[nodiscard]] double sup_norm() const {
        double s = 0.0;
        for (double v : vals_) s = std::max(s, std::fabs(v));
        return s;
    }

  private:
    int d_, n_;
    std::vector<double> vals_;
};

/// Solution of h∘f = L∘h with h = id + u, plus the contraction history.
struct FranksResult {
    GridField u;
    std::vector<double> sweep_history;  ///< sup-difference after each sweep
    int sweeps = 0;
    double final_diff = 0.0;
};

/// Solves the Franks conjugacy equation by splitting u into L's eigenbasis
/// and iterating the two contractions it induces: unstable components pull
/// back through L_u^-1 along forward orbits, stable components push forward
/// along backward orbits. Jacobi-style sweeps: each sweep reads only the
/// previous iterate, so results are independent of the thread count.
template <ToralMapModel M>
[[nodiscard]] FranksResult franks_solve(const M& f, int n_grid, int iters = 200, double tol = 1e-10,
                                        int threads = 1) {
    if (n_grid < 4) throw std::invalid_argument("franks_solve: grid too coarse");
    if (iters < 1) throw std::invalid_argument("franks_solve: need iters >= 1");
    const int d = f.dim();
    const auto& A = f.linear();
    const int ns = A.stable_count();
    const Mat V = A.basis();
    const Mat Vinv = V.inverse();
    const Vec lam = A.spectrum();
    const Mat Ar = A.matrix_real();

    GridField probe(d, n_grid);
    const std::size_t total = probe.points();

    // per-point caches: forward image, backward image, and psi = f - L in
    // eigen coordinates at x and at f^-1(x)
    std::vector<Vec> fx(total), fix(total), psi(total), psi_b(total);
    parallel_for(total, threads, [&](std::size_t idx) {
        const Vec x = probe.grid_point(idx);
        const Vec lx = f.lift(x);
        fx[idx] = wrap_torus(lx);
        fix[idx] = inverse_point(f, x);
        psi[idx] = Vinv * (lx - Ar * x);
        psi_b[idx] = Vinv * (f.lift(fix[idx]) - Ar * fix[idx]);
    });

    // w = V^-1 u, stored on the same grid
    GridField w(d, n_grid), w_next(d, n_grid);
    std::vector<double> diffs(total);
    FranksResult res{GridField(d, n_grid), {}, 0, 0.0};

    for (int sweep = 0; sweep < iters; ++sweep) {
        parallel_for(total, threads, [&](std::size_t idx) {
            const Vec wf = w.eval(fx[idx]);
            const Vec wb = w.eval(fix[idx]);
            double local = 0.0;
            for (int j = 0; j < d; ++j) {
                const double next = j < ns ? lam[j] * wb[j] - psi_b[idx][j]
                                           : (wf[j] + psi[idx][j]) / lam[j];
                local = std::max(local, std::fabs(next - w.at(idx, j)));
                w_next.at(idx, j) = next;
            }
            diffs[idx] = local;
        });
        std::swap(w, w_next);
        double sup = 0.0;
        for (double v : diffs) sup = std::max(sup, v);
        res.sweep_history.push_back(sup);
        res.sweeps = sweep + 1;
        res.final_diff = sup;
        if (sup < tol) break;
    }
    if (res.final_diff >= tol)
        throw NoConvergenceError("franks_solve: sup-difference " + std::to_string(res.final_diff) +
                                 " after " + std::to_string(res.sweeps) + " sweeps");

    for (std::size_t idx = 0; idx < total; ++idx) {
        Vec wi(d);
        for (int j = 0; j < d; ++j) wi[j] = w.at(idx, j);
        const Vec ui = V * wi;
        for (int c = 0; c < d; ++c) res.u.at(idx, c) = ui[c];
    }
    return res;
}

/// Sup over a test grid of |L(h(x)) - h(f(x))| mod Z^d, h = id + u. Checked
/// on a grid finer than the field's own so interpolation error is visible.
template <ToralMapModel M>
[[nodiscard]] double conjugacy_residual(const M& f, const GridField& u, int test_n, int threads = 1) {
    const int d = f.dim();
    const Mat Ar = f.linear().matrix_real();
    std::size_t total = 1;
    for (int c = 0; c < d; ++c) total *= static_cast<std::size_t>(test_n);

    std::vector<double> worst(total);
    parallel_for(total, threads, [&](std::size_t idx) {
        Vec x(d);
        std::size_t rem = idx;
        for (int c = 0; c < d; ++c) {
            x[c] = (static_cast<double>(rem % static_cast<std::size_t>(test_n)) + 0.31) / test_n;
            rem /= static_cast<std::size_t>(test_n);
        }
        const Vec lx = f.lift(x);
        const Vec r = Ar * (x + u.eval(x)) - (lx + u.eval(wrap_torus(lx)));
        double loc = 0.0;
        for (int c = 0; c < d; ++c) loc = std::max(loc, std::fabs(wrap_half(r[c])));
        worst[idx] = loc;
    });
    double sup = 0.0;
    for (double v : worst) sup = std::max(sup, v);
    return sup;
}

/// Oscillation-regression Hölder exponent of u along direction e: slope of
/// log sup-oscillation against log scale over dyadic scales above the grid
/// resolution. A flat field reports exponent 1 (it is smooth).
[[nodiscard]] inline RegularityFit directional_holder(const GridField& u, const Vec& e,
                                                      int samples = 4096) {
    const int d = u.dim();
    if (e.size() != d) throw std::invalid_argument("directional_holder: direction dimension mismatch");
    const Vec dir = e / e.norm();

    const int m_hi = std::max(4, static_cast<int>(std::floor(std::log2(u.resolution()))) - 2);
    std::vector<double> log_scale, log_osc;
    const double irr[3] = {0.6180339887498949, 0.4142135623730951, 0.7320508075688772};
    for (int m = 2; m <= m_hi; ++m) {
        const double delta = std::pow(2.0, -m);
        double osc = 0.0;
        for (int s = 0; s < samples; ++s) {
            Vec x(d);
            for (int c = 0; c < d; ++c) x[c] = frac(0.5 + (s + 1) * irr[c % 3] + 0.123 * c);
            const Vec dU = u.eval(x + delta * dir) - u.eval(x);
            osc = std::max(osc, dU.cwiseAbs().maxCoeff());
        }
        if (osc < 1e-13) return RegularityFit{1.0, 1.0};
        log_scale.push_back(-m * std::log(2.0));
        log_osc.push_back(std::log(osc));
    }
    const LineFit fit = fit_line(log_scale, log_osc);
    return RegularityFit{fit.slope, fit.r2};
}

/// Hölder exponents of h = id + u along each eigendirection of L, plus the
/// per-side minima (directions ordered by ascending eigenvalue modulus).
struct HolderReport {
    std::vector<RegularityFit> per_direction;
    double alpha_stable = 1.0;
    double alpha_unstable = 1.0;
};

[[nodiscard]] inline HolderReport toral_holder_estimate(const GridField& u, const IntAutomorphism& A,
                                                        int samples = 4096) {
    if (A.dim() != u.dim()) throw std::invalid_argument("toral_holder_estimate: dimension mismatch");
    HolderReport rep;
    for (int i = 0; i < A.dim(); ++i) {
        rep.per_direction.push_back(directional_holder(u, A.basis().col(i), samples));
        const double a = rep.per_direction.back().alpha;
        if (i < A.stable_count())
            rep.alpha_stable = std::min(rep.alpha_stable, a);
        else
            rep.alpha_unstable = std::min(rep.alpha_unstable, a);
    }
    return rep;
}

} // namespace rigidity
