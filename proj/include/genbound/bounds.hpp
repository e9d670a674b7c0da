#pragma once

// Generalization-bound calculators.
//
//  * a priori:      |E_test - E_train| <= C0 (1 + R) diam,  C0 = 8 (1 + |f(0)| + c0)^2
//  * zero loss:     E_test <= C^2 d_C^2
//  * any loss:      E_test <= (1 + delta) C^2 d_C^2 + (1 + 1/delta) E_testNN
//  * experimental:  max{1, prod_{l>=2} ||W_l||}^2 d_C^2
//
// where C = max{1, Lip(g)} with Lip(g) bounded by prod_{l>=2} ||W_l||_op and
// d_C is the unidirectional Chamfer pseudodistance after weighting by W_1.

#include <genbound/chamfer.hpp>
#include <genbound/errors.hpp>
#include <genbound/linalg.hpp>
#include <genbound/model.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace genbound {

/// Train loss at or below this counts as zero for the zero-loss bound.
inline constexpr double kZeroLossTol = 1e-8;

template <typename Scalar>
struct Extent {
    Scalar radius{0};
    Scalar diameter{0};
};

/// R = max |(x, y)| and diam = max pairwise distance over train U test in R^{M0+Q}.
template <typename Scalar>
Extent<Scalar> radius_and_diameter(const PointCloud<Scalar>& train, const PointCloud<Scalar>& test) {
    train.validate();
    test.validate();
    if (train.size() + test.size() == 0) throw EmptyCloud("radius_and_diameter: empty union");
    if (train.size() > 0 && test.size() > 0 &&
        (train.input_dim() != test.input_dim() || train.label_dim() != test.label_dim())) {
        throw DimensionMismatch("radius_and_diameter: clouds live in different spaces");
    }
    const PointCloud<Scalar>& shape = train.size() > 0 ? train : test;
    const Index dim = shape.input_dim() + shape.label_dim();
    MatrixX<Scalar> pts(dim, train.size() + test.size());
    pts.topLeftCorner(shape.input_dim(), train.size()) = train.inputs;
    pts.bottomLeftCorner(shape.label_dim(), train.size()) = train.labels;
    pts.topRightCorner(shape.input_dim(), test.size()) = test.inputs;
    pts.bottomRightCorner(shape.label_dim(), test.size()) = test.labels;

    Extent<Scalar> e;
    e.radius = pts.colwise().norm().maxCoeff();
    for (Index a = 0; a < pts.cols(); ++a) {
        for (Index b = a + 1; b < pts.cols(); ++b) {
            e.diameter = std::max(e.diameter, (pts.col(a) - pts.col(b)).norm());
        }
    }
    return e;
}

/// Circumradius bound sqrt(dim / (2 (dim + 1))) * diam.
template <typename Scalar>
Scalar jung_radius_bound(Scalar diam, Index dim) {
    if (dim < 1 || diam < 0) throw InvalidConfig("jung_radius_bound: need dim >= 1, diam >= 0");
    const Scalar d = Scalar(dim);
    return std::sqrt(d / (Scalar(2) * (d + Scalar(1)))) * diam;
}

/// |E_test - E_train|.
template <typename Scalar>
Scalar loss_discrepancy(const NetworkParams<Scalar>& params, const PointCloud<Scalar>& train,
                        const PointCloud<Scalar>& test) {
    return std::abs(mse_error(params, test) - mse_error(params, train));
}

/// 8 (1 + f0 + c0)^2 with c0 = prod_l ||W_l||_op.
template <typename Scalar>
Scalar apriori_constant(const NetworkParams<Scalar>& params, Scalar f0) {
    const Scalar c0 = lipschitz_product(params, 1);
    const Scalar s = Scalar(1) + f0 + c0;
    return Scalar(8) * s * s;
}

/// C0 (1 + R) diam with |f(0)| evaluated exactly by a forward pass.
template <typename Scalar>
Scalar apriori_bound(const NetworkParams<Scalar>& params, const PointCloud<Scalar>& train,
                     const PointCloud<Scalar>& test) {
    params.validate();
    const Scalar f0 =
        forward(params, VectorX<Scalar>::Zero(params.weights.front().cols())).norm();
    const Extent<Scalar> e = radius_and_diameter(train, test);
    return apriori_constant(params, f0) * (Scalar(1) + e.radius) * e.diameter;
}

/// Same as apriori_bound but with |f(0)| replaced by its norm-recursion bound.
template <typename Scalar>
Scalar apriori_bound_recursive(const NetworkParams<Scalar>& params, const PointCloud<Scalar>& train,
                               const PointCloud<Scalar>& test) {
    const Scalar f0 = f_at_zero_bound(params, Scalar(0), Scalar(1));
    const Extent<Scalar> e = radius_and_diameter(train, test);
    return apriori_constant(params, f0) * (Scalar(1) + e.radius) * e.diameter;
}

/// max{1, prod_{l>=2} ||W_l||_op}.
template <typename Scalar>
Scalar c_theta(const NetworkParams<Scalar>& params) {
    return std::max(Scalar(1), lipschitz_product(params, 2));
}

/// C^2 d_C^2, valid only when the network fits its training set exactly.
template <typename Scalar>
Scalar zero_loss_bound(const NetworkParams<Scalar>& params, const PointCloud<Scalar>& train,
                       const PointCloud<Scalar>& test, double train_tol = kZeroLossTol) {
    const Scalar train_error = mse_error(params, train);
    if (!(train_error <= Scalar(train_tol))) {
        throw TrainLossNotZero("zero_loss_bound: train error " + std::to_string(double(train_error)) +
                               " is not zero; use general_bound");
    }
    const Scalar c = c_theta(params);
    return c * c * chamfer_unidirectional(test, train, params.weights.front()).squared_distance;
}

/// (1 + delta) C^2 d_C^2 + (1 + 1/delta) E_testNN.
template <typename Scalar>
Scalar general_bound_terms(Scalar c_sq_d_sq, Scalar test_nn, Scalar delta) {
    if (!(delta > 0)) throw NonPositiveDelta("general bound needs delta > 0");
    return (Scalar(1) + delta) * c_sq_d_sq + (Scalar(1) + Scalar(1) / delta) * test_nn;
}

template <typename Scalar>
Scalar general_bound(const NetworkParams<Scalar>& params, const PointCloud<Scalar>& train,
                     const PointCloud<Scalar>& test, Scalar delta) {
    if (!(delta > 0)) throw NonPositiveDelta("general_bound: delta must be positive");
    const auto ch = chamfer_unidirectional(test, train, params.weights.front());
    const Scalar c = c_theta(params);
    const Scalar nn = test_nn_error(params, test, train, ch.nn_index);
    return general_bound_terms(c * c * ch.squared_distance, nn, delta);
}

/// Minimizer sqrt(E_testNN / (C^2 d_C^2)) of the general bound over delta,
/// or nullopt when either term vanishes (the infimum is then not attained).
template <typename Scalar>
std::optional<Scalar> optimal_delta(Scalar c_sq_d_sq, Scalar test_nn) {
    if (!(c_sq_d_sq > 0) || !(test_nn > 0)) return std::nullopt;
    return std::sqrt(test_nn / c_sq_d_sq);
}

/// max{1, prod_{l>=2} ||W_l||}^2 d_C^2; the quantity plotted against test error.
template <typename Scalar>
Scalar experimental_bound(const NetworkParams<Scalar>& params, const PointCloud<Scalar>& train,
                          const PointCloud<Scalar>& test) {
    const Scalar c = c_theta(params);
    return c * c * chamfer_unidirectional(test, train, params.weights.front()).squared_distance;
}

/// bound / test_error; throws ZeroTestError when the ratio is undefined.
template <typename Scalar>
Scalar gamma_ratio(Scalar bound, Scalar test_error) {
    if (!(test_error > 0)) throw ZeroTestError("gamma undefined: test error is zero");
    return bound / test_error;
}

template <typename Scalar>
struct BoundReport {
    Scalar train_error{0};
    Scalar test_error{0};
    Scalar chamfer_sq{0};
    Scalar test_nn_error{0};
    /// prod_{l>=2} ||W_l||_op.
    Scalar lip_g_bound{0};
    Scalar c_theta{1};
    /// Present only when the training loss is (numerically) zero.
    std::optional<Scalar> zero_loss_bound;
    Scalar delta{1};
    Scalar general_bound{0};
    Scalar experimental_bound{0};
    Scalar apriori_bound{0};
    Scalar loss_discrepancy{0};
    std::optional<Scalar> gamma;
    Scalar radius{0};
    Scalar diameter{0};
};

/// Every bound for one (network, train, test) triple. With optimize_delta the
/// general bound uses the closed-form optimal delta when it exists.
template <typename Scalar>
BoundReport<Scalar> compute_bound_report(const NetworkParams<Scalar>& params,
                                         const PointCloud<Scalar>& train,
                                         const PointCloud<Scalar>& test, Scalar delta = 1,
                                         bool optimize_delta = false) {
    if (!(delta > 0)) throw NonPositiveDelta("compute_bound_report: delta must be positive");
    params.validate();
    BoundReport<Scalar> r;
    r.train_error = mse_error(params, train);
    r.test_error = mse_error(params, test);
    const auto ch = chamfer_unidirectional(test, train, params.weights.front());
    r.chamfer_sq = ch.squared_distance;
    r.test_nn_error = test_nn_error(params, test, train, ch.nn_index);
    r.lip_g_bound = lipschitz_product(params, 2);
    r.c_theta = std::max(Scalar(1), r.lip_g_bound);
    const Scalar c_sq_d_sq = r.c_theta * r.c_theta * r.chamfer_sq;
    if (r.train_error <= Scalar(kZeroLossTol)) r.zero_loss_bound = c_sq_d_sq;
    r.delta = delta;
    if (optimize_delta) {
        if (auto best = optimal_delta(c_sq_d_sq, r.test_nn_error)) r.delta = *best;
    }
    r.general_bound = general_bound_terms(c_sq_d_sq, r.test_nn_error, r.delta);
    r.experimental_bound = c_sq_d_sq;
    const Extent<Scalar> e = radius_and_diameter(train, test);
    r.radius = e.radius;
    r.diameter = e.diameter;
    const Scalar f0 =
        forward(params, VectorX<Scalar>::Zero(params.weights.front().cols())).norm();
    r.apriori_bound = apriori_constant(params, f0) * (Scalar(1) + e.radius) * e.diameter;
    r.loss_discrepancy = std::abs(r.test_error - r.train_error);
    if (r.test_error > 0) r.gamma = r.experimental_bound / r.test_error;
    return r;
}

}  // namespace genbound
