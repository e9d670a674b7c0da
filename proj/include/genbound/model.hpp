#pragma once

// Feedforward ReLU networks x -> W_{L+1} relu(... relu(W_1 x + b_1) ...) + b_{L+1}
// together with their training/test errors and the a priori constants
// (Lipschitz product, bound on |f(0)|) built from layer operator norms.

#include <genbound/errors.hpp>
#include <genbound/linalg.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace genbound {

/// Layer widths [M0, M1, ..., ML, Q]; at least one hidden layer.
class Architecture {
public:
    Architecture() = default;
    explicit Architecture(std::vector<Index> dims) : dims_(std::move(dims)) {
        if (dims_.size() < 3) {
            throw BadArchitecture("architecture needs input, >=1 hidden and output widths");
        }
        for (Index d : dims_) {
            if (d < 1) throw BadArchitecture("architecture widths must be positive");
        }
    }

    const std::vector<Index>& dims() const { return dims_; }
    Index hidden_layers() const { return static_cast<Index>(dims_.size()) - 2; }
    /// Number of affine maps, L + 1.
    Index layers() const { return static_cast<Index>(dims_.size()) - 1; }
    Index input_dim() const { return dims_.front(); }
    Index output_dim() const { return dims_.back(); }
    Index width(Index layer) const { return dims_.at(static_cast<std::size_t>(layer)); }

    /// M0 >= M1 >= ... >= ML >= Q, required by the closed-form construction.
    bool non_increasing() const {
        return std::is_sorted(dims_.rbegin(), dims_.rend());
    }

    /// Total number of weights and biases.
    Index parameter_count() const {
        Index k = 0;
        for (std::size_t l = 1; l < dims_.size(); ++l) k += dims_[l] * dims_[l - 1] + dims_[l];
        return k;
    }

    std::string to_string() const {
        std::string s;
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (i) s += '-';
            s += std::to_string(dims_[i]);
        }
        return s;
    }

    friend bool operator==(const Architecture&, const Architecture&) = default;

private:
    std::vector<Index> dims_;
};

/// Weights W_l (M_l x M_{l-1}) and biases b_l (M_l) for l = 1..L+1, stored
/// zero-based. A bias-free network is one whose biases are zero vectors.
template <typename Scalar>
struct NetworkParams {
    using Matrix = MatrixX<Scalar>;
    using Vector = VectorX<Scalar>;

    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    static NetworkParams zeros(const Architecture& arch) {
        NetworkParams p;
        for (Index l = 1; l <= arch.layers(); ++l) {
            p.weights.push_back(Matrix::Zero(arch.width(l), arch.width(l - 1)));
            p.biases.push_back(Vector::Zero(arch.width(l)));
        }
        return p;
    }

    Index layers() const { return static_cast<Index>(weights.size()); }

    Architecture architecture() const {
        validate();
        std::vector<Index> dims{weights.front().cols()};
        for (const auto& w : weights) dims.push_back(w.rows());
        return Architecture(dims);
    }

    /// Throws ShapeMismatch / NonFiniteInput when the layers do not chain.
    void validate() const {
        if (weights.size() < 2 || weights.size() != biases.size()) {
            throw ShapeMismatch("network needs >=2 layers and one bias per weight");
        }
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (biases[l].size() != weights[l].rows()) {
                throw ShapeMismatch("bias " + std::to_string(l + 1) + " does not match its weight");
            }
            if (l > 0 && weights[l].cols() != weights[l - 1].rows()) {
                throw ShapeMismatch("weight " + std::to_string(l + 1) +
                                    " does not chain with the previous layer");
            }
            require_finite(weights[l], "network weight");
            require_finite(biases[l], "network bias");
        }
    }

    template <typename Other>
    NetworkParams<Other> cast() const {
        NetworkParams<Other> out;
        for (const auto& w : weights) out.weights.push_back(w.template cast<Other>());
        for (const auto& b : biases) out.biases.push_back(b.template cast<Other>());
        return out;
    }
};

/// Paired samples: column i of inputs (M0 x n) is labelled by column i of labels (Q x n).
/// Also used as a point cloud in input x label space.
template <typename Scalar>
struct Dataset {
    MatrixX<Scalar> inputs;
    MatrixX<Scalar> labels;

    Index size() const { return inputs.cols(); }
    Index input_dim() const { return inputs.rows(); }
    Index label_dim() const { return labels.rows(); }

    void validate() const {
        if (inputs.cols() != labels.cols()) {
            throw ShapeMismatch("dataset: inputs have " + std::to_string(inputs.cols()) +
                                " columns, labels " + std::to_string(labels.cols()));
        }
        require_finite(inputs, "dataset inputs");
        require_finite(labels, "dataset labels");
    }

    Dataset select(const std::vector<Index>& columns) const {
        Dataset out{MatrixX<Scalar>(inputs.rows(), Index(columns.size())),
                    MatrixX<Scalar>(labels.rows(), Index(columns.size()))};
        for (std::size_t k = 0; k < columns.size(); ++k) {
            out.inputs.col(Index(k)) = inputs.col(columns[k]);
            out.labels.col(Index(k)) = labels.col(columns[k]);
        }
        return out;
    }
};

using NetworkParamsd = NetworkParams<double>;
using Datasetd = Dataset<double>;

/// Componentwise max(0, v); works on any Eigen expression.
template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& v) {
    return v.cwiseMax(typename Derived::Scalar(0));
}

/// Network output for every column of xs (M0 x k).
template <typename Scalar, typename Derived>
MatrixX<Scalar> forward_batch(const NetworkParams<Scalar>& params,
                              const Eigen::MatrixBase<Derived>& xs) {
    if (params.weights.empty() || xs.rows() != params.weights.front().cols()) {
        throw ShapeMismatch("forward: input dimension " + std::to_string(xs.rows()) +
                            " does not match the first layer");
    }
    const std::size_t last = params.weights.size() - 1;
    MatrixX<Scalar> x = xs;
    for (std::size_t l = 0; l < last; ++l) {
        x = relu((params.weights[l] * x).colwise() + params.biases[l]);
    }
    return (params.weights[last] * x).colwise() + params.biases[last];
}

template <typename Scalar, typename Derived>
VectorX<Scalar> forward(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& x) {
    static_assert(Derived::ColsAtCompileTime == 1 || Derived::ColsAtCompileTime == Eigen::Dynamic);
    if (x.cols() != 1) throw ShapeMismatch("forward: expected a single column");
    return forward_batch(params, x);
}

/// |f(x_i) - y_i| for every sample.
template <typename Scalar>
VectorX<Scalar> residual_norms(const NetworkParams<Scalar>& params, const Dataset<Scalar>& data) {
    data.validate();
    if (data.label_dim() != params.weights.back().rows()) {
        throw ShapeMismatch("labels do not match the output layer");
    }
    return (forward_batch(params, data.inputs) - data.labels).colwise().norm().transpose();
}

/// (1/n) sum_i |f(x_i) - y_i|^2.
template <typename Scalar>
Scalar mse_error(const NetworkParams<Scalar>& params, const Dataset<Scalar>& data) {
    data.validate();
    if (data.label_dim() != params.weights.back().rows()) {
        throw ShapeMismatch("labels do not match the output layer");
    }
    if (data.size() == 0) throw ShapeMismatch("mse_error: empty dataset");
    return (forward_batch(params, data.inputs) - data.labels).colwise().squaredNorm().mean();
}

/// prod_{l = from_layer}^{L+1} ||W_l||_op, with 1-based layer numbering.
/// from_layer = 1 bounds Lip(f); from_layer = 2 bounds the Lipschitz constant
/// of the map from the first hidden layer to the output.
template <typename Scalar>
Scalar lipschitz_product(const NetworkParams<Scalar>& params, Index from_layer = 1) {
    if (from_layer < 1 || from_layer > params.layers()) {
        throw IndexOutOfRange("lipschitz_product: layer " + std::to_string(from_layer) +
                              " outside [1, " + std::to_string(params.layers()) + "]");
    }
    Scalar product(1);
    for (Index l = from_layer; l <= params.layers(); ++l) {
        product *= spectral_norm(params.weights[std::size_t(l - 1)]);
    }
    return product;
}

/// Bound on |f(0)| from the growth condition |sigma(x)| <= a0 + a1 |x|,
/// unrolled through the hidden layers; the output layer is affine.
template <typename Scalar>
Scalar f_at_zero_bound(const NetworkParams<Scalar>& params, Scalar a0 = 0, Scalar a1 = 1) {
    params.validate();
    Scalar x(0);
    const std::size_t last = params.weights.size() - 1;
    for (std::size_t l = 0; l < last; ++l) {
        x = a0 + a1 * (spectral_norm(params.weights[l]) * x + params.biases[l].norm());
    }
    return spectral_norm(params.weights[last]) * x + params.biases[last].norm();
}

}  // namespace genbound
