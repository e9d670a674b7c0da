#pragma once

// Closed-form zero-loss minimizer for strongly overparametrized ReLU
// networks (n <= M0, non-increasing widths, full-rank training inputs).
//
//   W_1     = [ (Y + alpha) X^+ ; 0 ]        b_1     = 0
//   W_l     = [ I_{M_l} | 0 ]                b_l     = 0      (l = 2..L)
//   W_{L+1} = [ I_Q | 0 ]                    b_{L+1} = -alpha * 1
//
// with alpha the modulus of the most negative label entry. The shifted labels
// Y + alpha are nonnegative, so every ReLU acts as the identity on the
// training data and the output reproduces Y exactly.

#include <genbound/errors.hpp>
#include <genbound/linalg.hpp>
#include <genbound/model.hpp>

#include <string>

namespace genbound {

/// max_{ij} max(0, -Y_ij).
template <typename Derived>
typename Derived::Scalar alpha(const Eigen::MatrixBase<Derived>& labels) {
    using Scalar = typename Derived::Scalar;
    require_finite(labels, "alpha");
    if (labels.size() == 0) return Scalar(0);
    return std::max(Scalar(0), -labels.minCoeff());
}

/// ||W_1 (I - P_X)||_op where P_X projects onto the span of the training inputs.
/// Zero exactly when W_1 only sees the component of its input inside that span.
template <typename Scalar>
Scalar projectivity_defect(const NetworkParams<Scalar>& params, const Dataset<Scalar>& data,
                           double rank_tol = kDefaultRankTol) {
    const auto& w1 = params.weights.front();
    if (w1.cols() != data.input_dim()) {
        throw ShapeMismatch("projectivity_defect: W1 columns do not match input dimension");
    }
    const MatrixX<Scalar> projector = orthogonal_projector(data.inputs, rank_tol);
    const MatrixX<Scalar> complement =
        MatrixX<Scalar>::Identity(projector.rows(), projector.cols()) - projector;
    return spectral_norm(MatrixX<Scalar>(w1 * complement));
}

template <typename Scalar>
struct ConstructionReport {
    NetworkParams<Scalar> params;
    Scalar alpha{0};
    Scalar achieved_train_error{0};
    Scalar w1_projectivity_defect{0};
};

template <typename Scalar>
ConstructionReport<Scalar> construct_zero_loss(const Dataset<Scalar>& data,
                                               const Architecture& arch,
                                               double rank_tol = kDefaultRankTol) {
    data.validate();
    const Index n = data.size();
    const Index m0 = arch.input_dim();
    const Index q = arch.output_dim();
    if (data.input_dim() != m0 || data.label_dim() != q) {
        throw ShapeMismatch("construct_zero_loss: dataset is " + std::to_string(data.input_dim()) +
                            "->" + std::to_string(data.label_dim()) + ", architecture " +
                            arch.to_string());
    }
    if (n < 1) throw ShapeMismatch("construct_zero_loss: empty training set");
    if (n > m0) {
        throw NotStronglyOverparametrized("construct_zero_loss: n = " + std::to_string(n) +
                                          " exceeds input dimension " + std::to_string(m0));
    }
    if (!arch.non_increasing()) {
        throw BadArchitecture("construct_zero_loss: widths must be non-increasing, got " +
                              arch.to_string());
    }

    const MatrixX<Scalar> x_pinv = pseudoinverse(data.inputs, rank_tol);

    ConstructionReport<Scalar> report;
    report.alpha = alpha(data.labels);
    const MatrixX<Scalar> shifted = data.labels.array() + report.alpha;

    auto& p = report.params;
    p = NetworkParams<Scalar>::zeros(arch);
    p.weights.front().topRows(q) = shifted * x_pinv;
    for (std::size_t l = 1; l < p.weights.size(); ++l) {
        auto& w = p.weights[l];
        w.leftCols(w.rows()).setIdentity();
    }
    p.biases.back().setConstant(-report.alpha);

    report.achieved_train_error = mse_error(p, data);
    report.w1_projectivity_defect = projectivity_defect(p, data, rank_tol);
    return report;
}

}  // namespace genbound
