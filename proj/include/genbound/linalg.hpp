#pragma once

// Dense kernels used by the construction and the bound calculators:
// generalized inverse, operator norm, numeric rank and range projector.
// Everything is templated on the Eigen expression so float, double and
// long double inputs all work; results are plain dense objects.

#include <genbound/errors.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>

namespace genbound {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Default relative threshold (against the largest singular value) below
/// which a singular value counts as zero.
inline constexpr double kDefaultRankTol = 1e-8;

struct PowerIterationOptions {
    double rel_tol = 1e-12;
    std::size_t max_iterations = 10000;
    std::uint64_t seed = 0x5eed;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.derived().allFinite();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
    if (!all_finite(m)) {
        throw NonFiniteInput(std::string(what) + ": matrix has NaN or Inf entries");
    }
}

/// Singular values by one-sided (Hestenes) Jacobi, sorted descending.
///
/// Tall inputs are first reduced to their square R factor by Householder QR,
/// which leaves the singular values unchanged and keeps the sweeps cheap.
template <typename Derived>
VectorX<typename Derived::Scalar> singular_values(const Eigen::MatrixBase<Derived>& input,
                                                  int max_sweeps = 80) {
    using Scalar = typename Derived::Scalar;
    using std::abs;
    using std::sqrt;
    require_finite(input, "singular_values");

    // Orient so that columns are the short side.
    MatrixX<Scalar> a = input.rows() >= input.cols() ? MatrixX<Scalar>(input)
                                                     : MatrixX<Scalar>(input.transpose());
    if (a.size() == 0) {
        return VectorX<Scalar>();
    }
    if (a.rows() > a.cols()) {
        Eigen::HouseholderQR<MatrixX<Scalar>> qr(a);
        a = qr.matrixQR().topRows(a.cols()).template triangularView<Eigen::Upper>();
    }

    const Index k = a.cols();
    const Scalar eps = Eigen::NumTraits<Scalar>::epsilon();
    VectorX<Scalar> sq = a.colwise().squaredNorm().transpose();
    const Scalar floor = eps * eps * std::max(sq.maxCoeff(), std::numeric_limits<Scalar>::min());
    VectorX<Scalar> saved(a.rows());

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (Index p = 0; p < k - 1; ++p) {
            for (Index q = p + 1; q < k; ++q) {
                const Scalar alpha = a.col(p).squaredNorm();
                const Scalar beta = a.col(q).squaredNorm();
                if (alpha <= floor && beta <= floor) continue;
                const Scalar gamma = a.col(p).dot(a.col(q));
                if (abs(gamma) <= eps * sqrt(alpha * beta)) continue;
                rotated = true;
                const Scalar zeta = (beta - alpha) / (Scalar(2) * gamma);
                const Scalar t = (zeta >= 0 ? Scalar(1) : Scalar(-1)) /
                                 (abs(zeta) + sqrt(Scalar(1) + zeta * zeta));
                const Scalar c = Scalar(1) / sqrt(Scalar(1) + t * t);
                const Scalar s = c * t;
                saved = a.col(p);
                a.col(p) = c * saved - s * a.col(q);
                a.col(q) = s * saved + c * a.col(q);
            }
        }
        if (!rotated) {
            VectorX<Scalar> sv = a.colwise().norm().transpose();
            std::sort(sv.data(), sv.data() + sv.size(), std::greater<Scalar>());
            return sv;
        }
    }
    throw NonConvergence("one-sided Jacobi SVD did not converge", std::size_t(max_sweeps));
}

/// Number of singular values above tol * sigma_max. Zero matrix has rank 0.
template <typename Derived>
Index numeric_rank(const Eigen::MatrixBase<Derived>& x, double tol = kDefaultRankTol) {
    using Scalar = typename Derived::Scalar;
    if (!(tol > 0)) {
        throw InvalidConfig("numeric_rank: tolerance must be positive");
    }
    const VectorX<Scalar> sv = singular_values(x);
    if (sv.size() == 0 || sv(0) == Scalar(0)) return 0;
    const Scalar cut = Scalar(tol) * sv(0);
    return static_cast<Index>((sv.array() > cut).count());
}

/// Largest singular value by power iteration on the smaller Gram matrix.
///
/// Stops once successive Rayleigh quotients agree to opts.rel_tol. The start
/// vector is Gaussian from a fixed seed, so results are reproducible.
template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& w,
                                       const PowerIterationOptions& opts = {}) {
    using Scalar = typename Derived::Scalar;
    using std::abs;
    using std::sqrt;
    require_finite(w, "spectral_norm");
    if (w.size() == 0) return Scalar(0);

    const Scalar max_abs = w.cwiseAbs().maxCoeff();
    if (max_abs == Scalar(0)) return Scalar(0);

    // Scaling by the largest entry keeps the Gram matrix well inside range.
    const MatrixX<Scalar> ws = w / max_abs;
    const MatrixX<Scalar> gram = ws.rows() < ws.cols() ? MatrixX<Scalar>(ws * ws.transpose())
                                                       : MatrixX<Scalar>(ws.transpose() * ws);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorX<Scalar> v(gram.rows());
    for (Index i = 0; i < v.size(); ++i) v(i) = Scalar(normal(rng));
    v.normalize();

    Scalar lambda = v.dot(gram * v);
    for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
        VectorX<Scalar> next = gram * v;
        const Scalar len = next.norm();
        if (len == Scalar(0)) {
            // The start vector fell into the null space; the Gram matrix is nonzero
            // so any perturbation escapes it.
            v = VectorX<Scalar>::Ones(v.size()).normalized();
            continue;
        }
        v = next / len;
        const Scalar updated = v.dot(gram * v);
        if (abs(updated - lambda) < Scalar(opts.rel_tol) * abs(updated)) {
            return max_abs * sqrt(std::max(updated, Scalar(0)));
        }
        lambda = updated;
    }
    throw NonConvergence("spectral_norm: power iteration did not converge", opts.max_iterations);
}

/// Generalized inverse (X^T X)^{-1} X^T of a full-column-rank matrix.
///
/// Throws RankDeficient instead of regularizing: a near-singular Gram matrix
/// means the caller's full-rank premise does not hold.
template <typename Derived>
MatrixX<typename Derived::Scalar> pseudoinverse(const Eigen::MatrixBase<Derived>& x,
                                                double rank_tol = kDefaultRankTol) {
    using Scalar = typename Derived::Scalar;
    require_finite(x, "pseudoinverse");
    const Index n = x.cols();
    if (n == 0 || x.rows() < n) {
        throw RankDeficient("pseudoinverse: need rows >= cols >= 1, got " +
                            std::to_string(x.rows()) + "x" + std::to_string(n));
    }
    const Index rank = numeric_rank(x, rank_tol);
    if (rank < n) {
        throw RankDeficient("pseudoinverse: numeric rank " + std::to_string(rank) + " < " +
                            std::to_string(n) + " columns");
    }
    const MatrixX<Scalar> gram = x.transpose() * x;
    Eigen::LLT<MatrixX<Scalar>> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw RankDeficient("pseudoinverse: Gram matrix is not positive definite");
    }
    MatrixX<Scalar> z = llt.solve(MatrixX<Scalar>(x.transpose()));
    // The normal equations carry an error of order cond(X)^2 * eps into Z X - I.
    // One refinement step Z <- Z + (I - Z X) Z squares that error away while
    // keeping the rows of Z in range(X^T).
    const MatrixX<Scalar> defect = MatrixX<Scalar>::Identity(n, n) - z * x;
    z += defect * z;
    return z;
}

/// Orthogonal projector X X^+ onto range(X).
template <typename Derived>
MatrixX<typename Derived::Scalar> orthogonal_projector(const Eigen::MatrixBase<Derived>& x,
                                                       double rank_tol = kDefaultRankTol) {
    return x * pseudoinverse(x, rank_tol);
}

}  // namespace genbound
