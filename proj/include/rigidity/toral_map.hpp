#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "rigidity/common.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"

namespace rigidity {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using MatI = Eigen::MatrixXi;

[[nodiscard]] inline Vec wrap_torus(Vec x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = frac(x[i]);
    return x;
}

[[nodiscard]] inline Vec wrap_half_torus(Vec x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = wrap_half(x[i]);
    return x;
}

namespace detail {

/// Exact determinant of an integer matrix (Bareiss fraction-free elimination).
[[nodiscard]] inline long long int_det(Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> m) {
    const Eigen::Index n = m.rows();
    long long prev = 1;
    int sign = 1;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        if (m(k, k) == 0) {
            Eigen::Index p = k + 1;
            while (p < n && m(p, k) == 0) ++p;
            if (p == n) return 0;
            m.row(k).swap(m.row(p));
            sign = -sign;
        }
        for (Eigen::Index i = k + 1; i < n; ++i)
            for (Eigen::Index j = k + 1; j < n; ++j)
                m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
        prev = m(k, k);
    }
    return sign * m(n - 1, n - 1);
}

[[nodiscard]] inline long long int_det(const MatI& a) {
    return int_det(a.cast<long long>().eval());
}

/// Characteristic polynomial coefficients of an integer matrix,
/// p(t) = t^d + c[d-1] t^{d-1} + ... + c[0], by Faddeev-LeVerrier (exact for
/// the small integer matrices handled here).
[[nodiscard]] inline std::vector<long long> char_poly(const MatI& a) {
    const int d = static_cast<int>(a.rows());
    Mat A = a.cast<double>();
    Mat M = Mat::Zero(d, d);
    std::vector<long long> c(static_cast<std::size_t>(d) + 1, 0);
    c[static_cast<std::size_t>(d)] = 1;
    double coeff = 1.0;
    for (int k = 1; k <= d; ++k) {
        M = A * M + coeff * Mat::Identity(d, d);
        coeff = -(A * M).trace() / k;
        c[static_cast<std::size_t>(d - k)] = std::llround(coeff);
    }
    return c;
}

/// Thin QR with sign-fixed R diagonal; returns log|det R| (frame volume
/// growth) and replaces the frame with its orthonormalization.
[[nodiscard]] inline double orthonormalize(Mat& frame) {
    Eigen::HouseholderQR<Mat> qr(frame);
    Mat R = qr.matrixQR().topRows(frame.cols()).template triangularView<Eigen::Upper>();
    Mat Q = qr.householderQ() * Mat::Identity(frame.rows(), frame.cols());
    double logdet = 0.0;
    for (Eigen::Index j = 0; j < frame.cols(); ++j) {
        if (R(j, j) < 0) Q.col(j) = -Q.col(j);
        logdet += std::log(std::fabs(R(j, j)));
    }
    frame = Q;
    return logdet;
}

[[nodiscard]] inline double subspace_gap(const Mat& Q1, const Mat& Q2) {
    return (Q1 * Q1.transpose() - Q2 * Q2.transpose()).norm();
}

} // namespace detail

/// Hyperbolic integer automorphism of T^d: |det| = 1, no eigenvalue modulus
/// within 1e-9 of 1. Eigen data is sorted by modulus ascending, so columns
/// 0..k-1 of the basis are stable and k..d-1 unstable, the unstable ones from
/// weakest to strongest. `theorem4_mode` additionally requires a real simple
/// spectrum and runs an advisory integer-root irreducibility check (d <= 3).
class IntAutomorphism {
  public:
    explicit IntAutomorphism(MatI A, bool theorem4_mode = false) : A_(std::move(A)) {
        if (A_.rows() != A_.cols() || A_.rows() < 2)
            throw std::invalid_argument("IntAutomorphism: need a square matrix, d >= 2");
        const long long det = detail::int_det(A_);
        if (det != 1 && det != -1)
            throw std::invalid_argument("IntAutomorphism: |det| must be 1");
        det_ = static_cast<int>(det);
        const int d = dim();

        Eigen::EigenSolver<Mat> es(A_.cast<double>());
        std::vector<int> order(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
        const auto& ev = es.eigenvalues();
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return std::abs(ev[a]) < std::abs(ev[b]); });
        values_.resize(d);
        vectors_.resize(d, d);
        for (int i = 0; i < d; ++i) {
            values_[i] = ev[order[static_cast<std::size_t>(i)]];
            vectors_.col(i) = es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
        }
        for (int i = 0; i < d; ++i) {
            const double mod = std::abs(values_[i]);
            if (std::fabs(mod - 1.0) < 1e-9)
                throw NotHyperbolicError("IntAutomorphism: eigenvalue modulus within 1e-9 of 1");
            if (mod < 1.0) ++stable_count_;
        }

        bool real_simple = true;
        for (int i = 0; i < d; ++i) {
            if (std::fabs(values_[i].imag()) > 1e-10) real_simple = false;
            for (int j = i + 1; j < d; ++j)
                if (std::abs(values_[i] - values_[j]) < 1e-9) real_simple = false;
        }
        if (theorem4_mode && !real_simple)
            throw NotSimpleSpectrumError("IntAutomorphism: spectrum not real and simple");
        if (real_simple) {
            Mat basis(d, d);
            Vec spec(d);
            for (int i = 0; i < d; ++i) {
                Vec v = vectors_.col(i).real();
                basis.col(i) = v / v.norm();
                spec[i] = values_[i].real();
            }
            basis_ = basis;
            spectrum_ = spec;
        }
        if (theorem4_mode && d <= 3) {
            // degree <= 3: reducible over Z iff the characteristic polynomial
            // has an integer root, which must divide the constant term (= +-1)
            const auto c = detail::char_poly(A_);
            auto eval = [&](long long t) {
                long long v = 0;
                for (int i = d; i >= 0; --i) v = v * t + c[static_cast<std::size_t>(i)];
                return v;
            };
            irreducible_ = (eval(1) != 0 && eval(-1) != 0);
        }
    }

    [[nodiscard]] int dim() const { return static_cast<int>(A_.rows()); }
    [[nodiscard]] const MatI& matrix() const { return A_; }
    [[nodiscard]] Mat matrix_real() const { return A_.cast<double>(); }
    [[nodiscard]] int det_sign() const { return det_; }
    [[nodiscard]] const Eigen::VectorXcd& eigenvalues() const { return values_; }
    [[nodiscard]] int stable_count() const { return stable_count_; }
    [[nodiscard]] int unstable_count() const { return dim() - stable_count_; }
    [[nodiscard]] bool has_real_basis() const { return basis_.has_value(); }
    [[nodiscard]] const std::optional<bool>& irreducibility_advisory() const { return irreducible_; }

    /// Unit eigenvectors as columns, modulus-ascending order.
    [[nodiscard]] const Mat& basis() const {
        if (!basis_) throw NotSimpleSpectrumError("IntAutomorphism: no real simple eigenbasis");
        return *basis_;
    }
    /// Real eigenvalues, modulus-ascending order.
    [[nodiscard]] const Vec& spectrum() const {
        if (!spectrum_) throw NotSimpleSpectrumError("IntAutomorphism: no real simple spectrum");
        return *spectrum_;
    }
    /// log|beta^u_i| for i = 1..unstable_count, weakest first.
    [[nodiscard]] std::vector<double> unstable_log_moduli() const {
        std::vector<double> out;
        for (int i = stable_count_; i < dim(); ++i) out.push_back(std::log(std::abs(values_[i])));
        return out;
    }
    /// The integer inverse (exists since |det| = 1).
    [[nodiscard]] MatI inverse_matrix() const {
        const Mat inv = A_.cast<double>().inverse();
        MatI out(dim(), dim());
        for (int i = 0; i < dim(); ++i)
            for (int j = 0; j < dim(); ++j)
                out(i, j) = static_cast<int>(std::llround(inv(i, j)));
        return out;
    }

  private:
    MatI A_;
    int det_ = 1;
    int stable_count_ = 0;
    Eigen::VectorXcd values_;
    Eigen::MatrixXcd vectors_;
    std::optional<Mat> basis_;
    std::optional<Vec> spectrum_;
    std::optional<bool> irreducible_;
};

[[nodiscard]] inline const IntAutomorphism& eigen_split(const IntAutomorphism& A) { return A; }

/// One term of a trigonometric vector field:
/// a * sin(2 pi k.x) + b * cos(2 pi k.x) with a, b in R^d, k integer.
struct TrigFieldTerm {
    Eigen::VectorXi k;
    Vec a;
    Vec b;
};

/// Finite trigonometric vector field p: T^d -> R^d with analytic Jacobian.
class TrigField {
  public:
    TrigField() = default;
    TrigField(int d, std::vector<TrigFieldTerm> terms) : d_(d), terms_(std::move(terms)) {
        for (const auto& t : terms_) {
            if (t.k.size() != d_ || t.a.size() != d_ || t.b.size() != d_)
                throw std::invalid_argument("TrigField: term dimension mismatch");
            if (t.k.isZero()) throw std::invalid_argument("TrigField: zero frequency term");
        }
    }

    [[nodiscard]] int dim() const { return d_; }
    [[nodiscard]] bool empty() const { return terms_.empty(); }

    [[nodiscard]] Vec eval(const Vec& x) const {
        Vec out = Vec::Zero(d_);
        for (const auto& t : terms_) {
            const double ph = two_pi * phase(t, x);
            out += t.a * std::sin(ph) + t.b * std::cos(ph);
        }
        return out;
    }

    [[nodiscard]] Mat jacobian(const Vec& x) const {
        Mat out = Mat::Zero(d_, d_);
        for (const auto& t : terms_) {
            const double ph = two_pi * phase(t, x);
            const Vec radial = t.a * std::cos(ph) - t.b * std::sin(ph);
            out += (two_pi * radial) * t.k.cast<double>().transpose();
        }
        return out;
    }

    /// sup_x |p(x)| bound (triangle inequality, 2-norm).
    [[nodiscard]] double sup_bound() const {
        double s = 0.0;
        for (const auto& t : terms_) s += t.a.norm() + t.b.norm();
        return s;
    }
    /// sup_x ||Dp(x)|| bound.
    [[nodiscard]] double jacobian_sup_bound() const {
        double s = 0.0;
        for (const auto& t : terms_) s += two_pi * (t.a.norm() + t.b.norm()) * t.k.cast<double>().norm();
        return s;
    }

  private:
    [[nodiscard]] double phase(const TrigFieldTerm& t, const Vec& x) const {
        double s = 0.0;
        for (int i = 0; i < d_; ++i) s += t.k[i] * frac(x[i]);
        return s;
    }

    int d_ = 0;
    std::vector<TrigFieldTerm> terms_;
};

/// f(x) = A x + eps p(x) mod 1. The lift is A x + eps p(x); periodicity of p
/// is exact by construction, so lift(x + e_j) = lift(x) + A e_j.
class ToralMap {
  public:
    ToralMap(IntAutomorphism A, double epsilon, TrigField p)
        : A_(std::move(A)), eps_(epsilon), p_(std::move(p)) {
        if (!p_.empty() && p_.dim() != A_.dim())
            throw std::invalid_argument("ToralMap: perturbation dimension mismatch");
    }

    [[nodiscard]] int dim() const { return A_.dim(); }
    [[nodiscard]] const IntAutomorphism& linear() const { return A_; }
    [[nodiscard]] double epsilon() const { return eps_; }
    [[nodiscard]] const TrigField& perturbation() const { return p_; }

    [[nodiscard]] Vec lift(const Vec& x) const {
        Vec out = A_.matrix_real() * x;
        if (!p_.empty() && eps_ != 0.0) out += eps_ * p_.eval(x);
        return out;
    }
    [[nodiscard]] Mat jacobian(const Vec& x) const {
        Mat out = A_.matrix_real();
        if (!p_.empty() && eps_ != 0.0) out += eps_ * p_.jacobian(x);
        return out;
    }

  private:
    IntAutomorphism A_;
    double eps_;
    TrigField p_;
};

/// g = H o A o H^{-1} with H(x) = x + phi(x) a small trigonometric
/// diffeomorphism (requires sup||Dphi|| < 1). Periodic data of g matches A
/// exactly; the reference model for conjugacy recovery.
class ConjugatedToralMap {
  public:
    ConjugatedToralMap(IntAutomorphism A, TrigField phi) : A_(std::move(A)), phi_(std::move(phi)) {
        if (phi_.dim() != A_.dim())
            throw std::invalid_argument("ConjugatedToralMap: field dimension mismatch");
        if (phi_.jacobian_sup_bound() >= 1.0)
            throw std::invalid_argument("ConjugatedToralMap: ||D phi|| must stay below 1");
    }

    [[nodiscard]] int dim() const { return A_.dim(); }
    [[nodiscard]] const IntAutomorphism& linear() const { return A_; }

    [[nodiscard]] Vec h(const Vec& x) const { return x + phi_.eval(x); }
    [[nodiscard]] Mat h_jacobian(const Vec& x) const {
        return Mat::Identity(dim(), dim()) + phi_.jacobian(x);
    }
    /// Lift of H^{-1}: the unique y with y + phi(y) = x (fixed-point iteration,
    /// contraction rate jacobian_sup_bound < 1, polished by Newton).
    [[nodiscard]] Vec h_inverse(const Vec& x) const {
        Vec y = x;
        for (int it = 0; it < 200; ++it) {
            const Vec r = y + phi_.eval(y) - x;
            if (r.lpNorm<Eigen::Infinity>() < 1e-15) return y;
            y -= h_jacobian(y).partialPivLu().solve(r);
        }
        throw InversionFailureError("ConjugatedToralMap: H^{-1} iteration stalled");
    }

    [[nodiscard]] Vec lift(const Vec& x) const {
        const Vec y = A_.matrix_real() * h_inverse(x);
        return y + phi_.eval(y);
    }
    [[nodiscard]] Mat jacobian(const Vec& x) const {
        const Vec y = h_inverse(x);
        const Vec Ay = A_.matrix_real() * y;
        return h_jacobian(Ay) * A_.matrix_real() * h_jacobian(y).partialPivLu().solve(
                  Mat::Identity(dim(), dim()));
    }

  private:
    IntAutomorphism A_;
    TrigField phi_;
};

template <typename M>
concept ToralMapModel = requires(const M& m, const Vec& x) {
    { m.dim() } -> std::convertible_to<int>;
    { m.linear() } -> std::convertible_to<const IntAutomorphism&>;
    { m.lift(x) } -> std::convertible_to<Vec>;
    { m.jacobian(x) } -> std::convertible_to<Mat>;
};

template <ToralMapModel M>
[[nodiscard]] Vec eval_torus(const M& m, const Vec& x) {
    return wrap_torus(m.lift(x));
}

/// f^{-1}(y) on the torus by Newton from the linear inverse seed.
template <ToralMapModel M>
[[nodiscard]] Vec inverse_point(const M& m, const Vec& y) {
    const MatI Ainv = m.linear().inverse_matrix();
    Vec z = wrap_torus(Ainv.cast<double>() * y);
    for (int it = 0; it < 60; ++it) {
        const Vec delta = wrap_half_torus(eval_torus(m, z) - y);
        if (delta.lpNorm<Eigen::Infinity>() < 1e-13) return z;
        z = wrap_torus(z - m.jacobian(z).partialPivLu().solve(delta));
    }
    throw InversionFailureError("inverse_point: Newton did not reach 1e-13");
}

struct ConeCheck {
    double margin = 0.0;
    bool ok = false;
    int grid_n = 0;
};

namespace detail {

[[nodiscard]] inline double op_norm(const Mat& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    return m.jacobiSvd().singularValues()[0];
}
[[nodiscard]] inline double sigma_min(const Mat& m) {
    if (m.rows() == 0 || m.cols() == 0) return std::numeric_limits<double>::infinity();
    const auto sv = m.jacobiSvd().singularValues();
    return sv[sv.size() - 1];
}

/// Worst-case guaranteed expansion of the eta-cone around the unstable block
/// under the eigen-coordinate matrix M (blocks: s = first k, u = last n-k);
/// negative infinity when the cone is not strictly invariant.
[[nodiscard]] inline double cone_expansion(const Mat& M, int k, double eta) {
    const int d = static_cast<int>(M.rows());
    const int nu = d - k;
    const Mat Muu = M.bottomRightCorner(nu, nu);
    const Mat Mus = M.bottomLeftCorner(nu, k);
    const Mat Msu = M.topRightCorner(k, nu);
    const Mat Mss = M.topLeftCorner(k, k);
    const double a = sigma_min(Muu) - eta * op_norm(Mus);
    const double b = op_norm(Msu) + eta * op_norm(Mss);
    if (!(a > 0.0) || !(b < eta * a)) return -std::numeric_limits<double>::infinity();
    return a / std::sqrt(1.0 + eta * eta);
}

} // namespace detail

/// Per-sample worst-case cone expansion margins on the uniform grid_n^d grid:
/// margin[idx] = min(unstable cone expansion under Df, stable cone expansion
/// under Df^{-1}) - 1, computed in the eigenbasis of the linear part with cone
/// opening eta. Strict invariance failure at a sample gives -inf there.
template <ToralMapModel M>
[[nodiscard]] std::vector<double> cone_margins(const M& m, int grid_n, double eta = 0.5,
                                               int threads = 1) {
    const int d = m.dim();
    const int k = m.linear().stable_count();
    const Mat V = m.linear().basis();
    const Mat Vinv = V.partialPivLu().solve(Mat::Identity(d, d));
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(grid_n);
    std::vector<double> margins(total);
    parallel_for(total, threads, [&](std::size_t idx) {
        Vec x(d);
        std::size_t rem = idx;
        for (int i = 0; i < d; ++i) {
            x[i] = static_cast<double>(rem % static_cast<std::size_t>(grid_n)) / grid_n;
            rem /= static_cast<std::size_t>(grid_n);
        }
        const Mat Mx = Vinv * m.jacobian(x) * V;
        const double fwd = detail::cone_expansion(Mx, k, eta);
        // stable cone under the inverse: swap roles by reversing the order
        const Mat Minv = Mx.partialPivLu().solve(Mat::Identity(d, d));
        Mat rev(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) rev(i, j) = Minv(d - 1 - i, d - 1 - j);
        const double bwd = detail::cone_expansion(rev, d - k, eta);
        margins[idx] = std::min(fwd, bwd) - 1.0;
    });
    return margins;
}

/// Certifies strict invariance and uniform expansion/contraction of the
/// eigenbasis cones at every grid sample; throws ConeViolation naming the
/// offending sample point when a cone fails, otherwise returns the worst
/// margin (> 0 required for the certificate to be usable downstream).
template <ToralMapModel M>
[[nodiscard]] ConeCheck cone_certify(const M& m, int grid_n = 64, double eta = 0.5,
                                     int threads = 1) {
    const auto margins = cone_margins(m, grid_n, eta, threads);
    double worst = std::numeric_limits<double>::infinity();
    std::size_t worst_idx = 0;
    for (std::size_t i = 0; i < margins.size(); ++i)
        if (margins[i] < worst) {
            worst = margins[i];
            worst_idx = i;
        }
    if (!(worst > 0.0)) {
        std::string where = "sample index " + std::to_string(worst_idx) + " of grid " +
                            std::to_string(grid_n) + "^" + std::to_string(m.dim());
        throw ConeViolationError("cone_certify: cone condition fails at " + where);
    }
    return ConeCheck{worst, true, grid_n};
}

/// Orthonormal frame spanning the flag E^{u}_{(1,i)}(x): the span of the i
/// weakest unstable directions at x. The full unstable space arrives by
/// pushing the linear unstable frame forward along the backward orbit ending
/// at x; for i < unstable_count it is cut down by intersecting with the
/// backward-transported span of (stable + i weakest unstable), computed along
/// the forward orbit of x. Convergence is certified by comparing the result
/// against a one-step-shorter transport (gap <= 1e-8).
template <ToralMapModel M>
[[nodiscard]] Mat bundle_estimate(const M& m, const Vec& x, int i, int n_iter) {
    const int d = m.dim();
    const int k = m.linear().stable_count();
    const int nu = d - k;
    if (i < 1 || i > nu) throw std::invalid_argument("bundle_estimate: flag index out of range");
    if (n_iter < 1) throw std::invalid_argument("bundle_estimate: need n_iter >= 1");
    const Mat V = m.linear().basis();

    std::vector<Vec> back(static_cast<std::size_t>(n_iter) + 1);
    back[0] = wrap_torus(x);
    for (int t = 1; t <= n_iter; ++t) back[static_cast<std::size_t>(t)] = inverse_point(m, back[static_cast<std::size_t>(t - 1)]);

    auto unstable_at_x = [&](int T) {
        Mat Q = V.rightCols(nu);
        (void)detail::orthonormalize(Q);
        for (int t = T; t >= 1; --t) {
            Q = m.jacobian(back[static_cast<std::size_t>(t)]) * Q;
            (void)detail::orthonormalize(Q);
        }
        return Q;
    };

    std::vector<Vec> fwd;
    auto weak_at_x = [&](int T) {
        if (fwd.empty()) {
            fwd.resize(static_cast<std::size_t>(n_iter) + 1);
            fwd[0] = wrap_torus(x);
            for (int t = 1; t <= n_iter; ++t) fwd[static_cast<std::size_t>(t)] = eval_torus(m, fwd[static_cast<std::size_t>(t - 1)]);
        }
        Mat S = V.leftCols(k + i);
        (void)detail::orthonormalize(S);
        for (int t = T; t >= 1; --t) {
            S = m.jacobian(fwd[static_cast<std::size_t>(t - 1)]).partialPivLu().solve(S);
            (void)detail::orthonormalize(S);
        }
        return S;
    };

    auto flag_at_x = [&](int T) {
        Mat Qu = unstable_at_x(T);
        if (i == nu) return Qu;
        Mat S = weak_at_x(T);
        // principal directions of the intersection span(Qu) cap span(S)
        Eigen::JacobiSVD<Mat> svd(Qu.transpose() * S, Eigen::ComputeFullU);
        Mat F = Qu * svd.matrixU().leftCols(i);
        (void)detail::orthonormalize(F);
        return F;
    };

    const Mat result = flag_at_x(n_iter);
    const Mat prev = flag_at_x(n_iter - 1);
    if (detail::subspace_gap(result, prev) > 1e-8)
        throw NoConvergenceError("bundle_estimate: frames still moving after n_iter transports");
    return result;
}

} // namespace rigidity
