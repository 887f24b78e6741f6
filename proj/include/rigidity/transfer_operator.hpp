#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rigidity/circle_map.hpp"
#include "rigidity/common.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"

namespace rigidity {

/// Piecewise-constant density on N uniform bins, in density units (bin measure
/// = weights[i]/N, mean weight 1). `residual` is the L1 transfer residual of
/// the returned vector, `iterations` the power-iteration steps spent.
struct DensityApprox {
    int bins = 0;
    std::vector<double> weights;
    double residual = 0.0;
    int iterations = 0;
};

[[nodiscard]] inline DensityApprox uniform_density(int N) {
    return DensityApprox{N, std::vector<double>(static_cast<std::size_t>(N), 1.0), 0.0, 0};
}

/// Row-stochastic Ulam transition matrix: entry (i,j) is the fraction of bin i
/// that f maps into bin j. Built exactly from the preimages of the bin
/// boundaries under each monotone lift branch (no orbit sampling). Stored
/// transposed (entries grouped by image bin) so a density update gathers into
/// each output slot in a fixed order, which keeps apply() bitwise
/// deterministic for any thread count.
class UlamMatrix {
  public:
    template <CircleMapModel M>
    UlamMatrix(const M& m, int N, int threads = 1) : N_(N) {
        if (N < m.degree()) throw std::invalid_argument("UlamMatrix: need N >= degree");
        const int d = m.degree();
        const long C = static_cast<long>(d) * N; // branch cells, d per image bin
        const long t0 = static_cast<long>(std::ceil(m.lift(0.0) - 1e-14));

        // Preimages x_c of the lift targets t0 + c/N, increasing in c. The last
        // boundary is pinned to x_0 + 1 (not solved) so the cells tile one full
        // period exactly and row sums are 1 to rounding.
        std::vector<double> xb(static_cast<std::size_t>(C) + 1);
        parallel_for(static_cast<std::size_t>(C), threads, [&](std::size_t c) {
            const double target =
                static_cast<double>(t0) + static_cast<double>(c) / static_cast<double>(N);
            double x = solve_lift_pow(m, 1, target, -1e-7, 1.0 + 1e-7);
            // a boundary within solver noise of a grid line lies on it;
            // this stops roundoff slivers from creating spurious entries
            const double snapped = std::round(x * N) / static_cast<double>(N);
            if (std::fabs(x - snapped) < 1e-12) x = snapped;
            xb[c] = x;
        });
        xb[static_cast<std::size_t>(C)] = xb[0] + 1.0;
        for (long c = 1; c <= C; ++c) { // monotone repair of roundoff-level inversions
            auto& cur = xb[static_cast<std::size_t>(c)];
            const double prev = xb[static_cast<std::size_t>(c - 1)];
            if (cur < prev) cur = prev;
        }

        // Walk each cell [x_c, x_{c+1}) across the uniform source bins.
        std::vector<std::vector<std::pair<int, double>>> cols(static_cast<std::size_t>(N));
        row_sums_.assign(static_cast<std::size_t>(N), 0.0);
        for (long c = 0; c < C; ++c) {
            const int jimg = static_cast<int>(c % N);
            const double a = xb[static_cast<std::size_t>(c)];
            const double b = xb[static_cast<std::size_t>(c) + 1];
            if (b <= a) continue;
            const long ia = static_cast<long>(std::floor(a * N));
            const long ib = static_cast<long>(std::floor(b * N));
            for (long i = ia; i <= ib; ++i) {
                const double lo = std::max(a, static_cast<double>(i) / N);
                const double hi = std::min(b, static_cast<double>(i + 1) / N);
                if (hi <= lo) continue;
                const int isrc = static_cast<int>(((i % N) + N) % N);
                const double p = (hi - lo) * N;
                cols[static_cast<std::size_t>(jimg)].emplace_back(isrc, p);
                row_sums_[static_cast<std::size_t>(isrc)] += p;
            }
        }

        col_ptr_.assign(static_cast<std::size_t>(N) + 1, 0);
        std::size_t nnz = 0;
        for (int j = 0; j < N; ++j) {
            nnz += cols[static_cast<std::size_t>(j)].size();
            col_ptr_[static_cast<std::size_t>(j) + 1] = static_cast<long>(nnz);
        }
        src_.reserve(nnz);
        mass_.reserve(nnz);
        for (int j = 0; j < N; ++j)
            for (const auto& [i, p] : cols[static_cast<std::size_t>(j)]) {
                src_.push_back(i);
                mass_.push_back(p);
            }
    }

    [[nodiscard]] int bins() const { return N_; }

    /// out[j] = sum_i in[i] * P(i -> j); mass-preserving up to rounding.
    void apply(const std::vector<double>& in, std::vector<double>& out, int threads = 1) const {
        out.resize(static_cast<std::size_t>(N_));
        parallel_for(static_cast<std::size_t>(N_), threads, [&](std::size_t j) {
            double s = 0.0;
            for (long e = col_ptr_[j]; e < col_ptr_[j + 1]; ++e)
                s += in[static_cast<std::size_t>(src_[static_cast<std::size_t>(e)])] *
                     mass_[static_cast<std::size_t>(e)];
            out[j] = s;
        });
    }

    [[nodiscard]] const std::vector<double>& row_sums() const { return row_sums_; }

    /// Row i as merged (image bin, probability) pairs; linear scan, test use.
    [[nodiscard]] std::vector<std::pair<int, double>> row_entries(int i) const {
        std::vector<double> acc(static_cast<std::size_t>(N_), 0.0);
        for (int j = 0; j < N_; ++j)
            for (long e = col_ptr_[static_cast<std::size_t>(j)];
                 e < col_ptr_[static_cast<std::size_t>(j) + 1]; ++e)
                if (src_[static_cast<std::size_t>(e)] == i)
                    acc[static_cast<std::size_t>(j)] += mass_[static_cast<std::size_t>(e)];
        std::vector<std::pair<int, double>> out;
        for (int j = 0; j < N_; ++j)
            if (acc[static_cast<std::size_t>(j)] != 0.0)
                out.emplace_back(j, acc[static_cast<std::size_t>(j)]);
        return out;
    }

  private:
    int N_;
    std::vector<long> col_ptr_;
    std::vector<int> src_;
    std::vector<double> mass_;
    std::vector<double> row_sums_;
};

namespace detail {

inline void normalize_mean(std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += v;
    const double mean = s / static_cast<double>(w.size());
    for (double& v : w) v /= mean;
}

inline double l1_mean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

inline DensityApprox power_iterate(const UlamMatrix& T, std::vector<double> w, int iters,
                                   double stop_tol, int threads) {
    detail::normalize_mean(w);
    std::vector<double> next(w.size());
    double res = std::numeric_limits<double>::infinity();
    int used = 0;
    for (int it = 1; it <= iters; ++it) {
        T.apply(w, next, threads);
        normalize_mean(next);
        res = detail::l1_mean_distance(next, w);
        w.swap(next);
        used = it;
        if (res <= stop_tol) break;
    }
    return DensityApprox{T.bins(), std::move(w), res, used};
}

} // namespace detail

/// Fixed density of the Ulam matrix by power iteration from the uniform
/// density. Converges past `residual_tol` toward an internal 1e-9 stop so the
/// independent restart check below is meaningful; throws NoConvergence if the
/// residual is still above residual_tol after `iters` steps, or if a restart
/// from a seeded random positive vector settles on a different fixed vector
/// (the approximation would not be ergodic).
template <CircleMapModel M>
[[nodiscard]] DensityApprox invariant_density(const M& m, int N, int iters,
                                              double residual_tol = 1e-8, int threads = 1,
                                              std::uint64_t seed = 42) {
    const UlamMatrix T(m, N, threads);
    const double stop = std::min(residual_tol, 1e-9);
    auto main_run =
        detail::power_iterate(T, std::vector<double>(static_cast<std::size_t>(N), 1.0), iters,
                              stop, threads);
    if (main_run.residual > residual_tol)
        throw NoConvergenceError("invariant_density: residual stagnates above tolerance");

    auto rng = make_rng(seed, /*stream=*/7);
    std::uniform_real_distribution<double> amp(0.1, 1.9);
    std::vector<double> w0(static_cast<std::size_t>(N));
    for (double& v : w0) v = amp(rng);
    auto alt = detail::power_iterate(T, std::move(w0), iters, stop, threads);
    if (detail::l1_mean_distance(main_run.weights, alt.weights) > 1e-8)
        throw NoConvergenceError("invariant_density: restart converged to a different density");

    for (double v : main_run.weights)
        if (v < 0.0) throw NumericalError("invariant_density: negative weight");
    return main_run;
}

/// Exponent of the absolutely continuous measure: (1/N) sum w_i log F'(mid_i).
/// Midpoint quadrature; O(1/N^2) bias for the smooth family.
template <CircleMapModel M>
[[nodiscard]] double acim_exponent(const M& m, const DensityApprox& dens) {
    const int N = dens.bins;
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
        const double mid = (static_cast<double>(i) + 0.5) / static_cast<double>(N);
        s += dens.weights[static_cast<std::size_t>(i)] * std::log(m.lift_d1(mid));
    }
    return s / static_cast<double>(N);
}

/// Measure of [a,b] under the binned density, with fractional end bins.
[[nodiscard]] inline double interval_measure(const DensityApprox& dens, double a, double b) {
    if (b < a) return 0.0;
    const int N = dens.bins;
    double s = 0.0;
    const long ia = static_cast<long>(std::floor(a * N));
    const long ib = static_cast<long>(std::floor(b * N));
    for (long i = ia; i <= ib; ++i) {
        const double lo = std::max(a, static_cast<double>(i) / N);
        const double hi = std::min(b, static_cast<double>(i + 1) / N);
        if (hi <= lo) continue;
        const int idx = static_cast<int>(((i % N) + N) % N);
        s += dens.weights[static_cast<std::size_t>(idx)] * (hi - lo);
    }
    return s;
}

} // namespace rigidity
