#pragma once

#include <genbound/errors.hpp>
#include <genbound/linalg.hpp>
#include <genbound/model.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace genbound {

template <typename Scalar>
using PointCloud = Dataset<Scalar>;

template <typename Scalar>
struct ChamferResult {
    Scalar distance{0};
    Scalar squared_distance{0};
    /// Index into the training cloud of each test point's nearest neighbor.
    std::vector<Index> nn_index;
    VectorX<Scalar> per_point_terms;
};

/// Unidirectional Chamfer pseudodistance of test from train after weighting
/// inputs by w1:
///
///   d^2 = (1/m) sum_j min_i ( |W1 (x~_j - x_i)| + |y~_j - y_i| )^2
///
/// Brute force over all pairs; ties go to the lowest training index.
template <typename Scalar, typename Derived>
ChamferResult<Scalar> chamfer_unidirectional(const PointCloud<Scalar>& test,
                                             const PointCloud<Scalar>& train,
                                             const Eigen::MatrixBase<Derived>& w1) {
    if (test.size() == 0 || train.size() == 0) {
        throw EmptyCloud("chamfer_unidirectional: empty point cloud");
    }
    test.validate();
    train.validate();
    if (test.input_dim() != train.input_dim() || test.label_dim() != train.label_dim()) {
        throw DimensionMismatch("chamfer_unidirectional: clouds live in different spaces");
    }
    if (w1.cols() != train.input_dim()) {
        throw DimensionMismatch("chamfer_unidirectional: W1 has " + std::to_string(w1.cols()) +
                                " columns, inputs have dimension " +
                                std::to_string(train.input_dim()));
    }

    const MatrixX<Scalar> test_img = w1 * test.inputs;
    const MatrixX<Scalar> train_img = w1 * train.inputs;

    ChamferResult<Scalar> out;
    out.nn_index.resize(std::size_t(test.size()));
    out.per_point_terms.resize(test.size());
    for (Index j = 0; j < test.size(); ++j) {
        Scalar best = std::numeric_limits<Scalar>::infinity();
        Index best_i = 0;
        for (Index i = 0; i < train.size(); ++i) {
            const Scalar t = (test_img.col(j) - train_img.col(i)).norm() +
                             (test.labels.col(j) - train.labels.col(i)).norm();
            if (t < best) {
                best = t;
                best_i = i;
            }
        }
        out.nn_index[std::size_t(j)] = best_i;
        out.per_point_terms(j) = best * best;
    }
    out.squared_distance = out.per_point_terms.mean();
    out.distance = std::sqrt(out.squared_distance);
    return out;
}

/// Mean squared training residual over each test point's nearest training neighbor.
template <typename Scalar>
Scalar test_nn_error(const NetworkParams<Scalar>& params, const PointCloud<Scalar>& test,
                     const PointCloud<Scalar>& train, const std::vector<Index>& nn_index) {
    if (test.size() == 0 || train.size() == 0) throw EmptyCloud("test_nn_error: empty point cloud");
    if (Index(nn_index.size()) != test.size()) {
        throw IndexOutOfRange("test_nn_error: expected one neighbor index per test point");
    }
    const VectorX<Scalar> r = residual_norms(params, train);
    Scalar sum(0);
    for (Index i : nn_index) {
        if (i < 0 || i >= train.size()) {
            throw IndexOutOfRange("test_nn_error: neighbor index " + std::to_string(i) +
                                  " outside training cloud of size " +
                                  std::to_string(train.size()));
        }
        sum += r(i) * r(i);
    }
    return sum / Scalar(nn_index.size());
}

}  // namespace genbound
