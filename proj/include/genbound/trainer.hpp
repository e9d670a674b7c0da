#pragma once

// Plain SGD with backpropagation on the squared-error loss
// (1/B) sum_i |f(x_i) - y_i|^2 over each minibatch.

#include <genbound/errors.hpp>
#include <genbound/linalg.hpp>
#include <genbound/model.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace genbound {

/// How the per-sample squared error is reduced over output components.
/// Sum is |f(x) - y|^2; ComponentMean divides it by Q, which is what common
/// framework MSE losses do and is equivalent to scaling the step by 1/Q.
enum class LossReduction { Sum, ComponentMean };

struct TrainConfig {
    int epochs = 70;
    double learning_rate = 0.1;
    Index batch_size = 1;
    std::uint64_t seed = 0;
    double convergence_train_error = 1e-3;
    int max_extra_epochs = 0;
    bool train_biases = true;
    LossReduction reduction = LossReduction::Sum;

    void validate() const {
        if (epochs < 1) throw InvalidConfig("TrainConfig: epochs must be >= 1");
        if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
            throw InvalidConfig("TrainConfig: learning_rate must be finite and >= 0");
        }
        if (batch_size < 1) throw InvalidConfig("TrainConfig: batch_size must be >= 1");
        if (max_extra_epochs < 0) throw InvalidConfig("TrainConfig: max_extra_epochs must be >= 0");
    }
};

template <typename Scalar>
struct TrainTrace {
    std::vector<Scalar> epoch_train_error;
    NetworkParams<Scalar> params;
    bool converged = false;
};

/// Training error blew up (or went non-finite). Carries the errors seen so far.
class DivergenceDetected : public Error {
public:
    DivergenceDetected(const std::string& what, std::vector<double> epoch_errors)
        : Error(what), epoch_errors_(std::move(epoch_errors)) {}
    const std::vector<double>& epoch_errors() const noexcept { return epoch_errors_; }

private:
    std::vector<double> epoch_errors_;
};

/// He-normal weights, N(0, 2 / fan_in), and zero biases.
template <typename Scalar = double>
NetworkParams<Scalar> random_init(const Architecture& arch, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    NetworkParams<Scalar> p = NetworkParams<Scalar>::zeros(arch);
    for (auto& w : p.weights) {
        std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / double(w.cols())));
        for (Index c = 0; c < w.cols(); ++c) {
            for (Index r = 0; r < w.rows(); ++r) w(r, c) = Scalar(normal(rng));
        }
    }
    return p;
}

namespace detail {

/// Backward pass on a batch. Calls sink(layer, delta, input_activation) from
/// the output layer down, where the layer gradient is delta * input^T and the
/// bias gradient is the row sum of delta.
template <typename Scalar, typename Sink>
void backpropagate(const NetworkParams<Scalar>& params, const MatrixX<Scalar>& xs,
                   const MatrixX<Scalar>& ys, LossReduction reduction, Sink&& sink) {
    const std::size_t layers = params.weights.size();
    std::vector<MatrixX<Scalar>> activations;
    std::vector<MatrixX<Scalar>> pre;
    activations.reserve(layers);
    pre.reserve(layers);
    activations.push_back(xs);
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        pre.push_back((params.weights[l] * activations.back()).colwise() + params.biases[l]);
        activations.push_back(relu(pre.back()));
    }
    const MatrixX<Scalar> out =
        (params.weights.back() * activations.back()).colwise() + params.biases.back();

    Scalar scale = Scalar(2) / Scalar(xs.cols());
    if (reduction == LossReduction::ComponentMean) scale /= Scalar(ys.rows());
    MatrixX<Scalar> delta = scale * (out - ys);

    for (std::size_t l = layers; l-- > 0;) {
        MatrixX<Scalar> next;
        if (l > 0) {
            // ReLU subgradient at 0 is taken as 0.
            next = (params.weights[l].transpose() * delta).array() *
                   (pre[l - 1].array() > Scalar(0)).template cast<Scalar>();
        }
        sink(l, delta, activations[l]);
        if (l > 0) delta = std::move(next);
    }
}

inline void check_batch(Index in_dim, Index out_dim, Index x_rows, Index y_rows, Index x_cols,
                        Index y_cols) {
    if (x_rows != in_dim || y_rows != out_dim || x_cols != y_cols || x_cols == 0) {
        throw ShapeMismatch("batch does not match the network");
    }
}

}  // namespace detail

/// Exact gradient of the batch loss, shaped like the parameters.
template <typename Scalar>
NetworkParams<Scalar> backprop_gradient(const NetworkParams<Scalar>& params,
                                        const Dataset<Scalar>& batch,
                                        LossReduction reduction = LossReduction::Sum) {
    params.validate();
    batch.validate();
    detail::check_batch(params.weights.front().cols(), params.weights.back().rows(),
                        batch.inputs.rows(), batch.labels.rows(), batch.inputs.cols(),
                        batch.labels.cols());
    NetworkParams<Scalar> grad = params;
    detail::backpropagate(params, batch.inputs, batch.labels, reduction,
                          [&](std::size_t l, const MatrixX<Scalar>& delta, const MatrixX<Scalar>& a) {
                              grad.weights[l].noalias() = delta * a.transpose();
                              grad.biases[l] = delta.rowwise().sum();
                          });
    return grad;
}

/// Per-epoch shuffled minibatch SGD, theta <- theta - lr * grad.
/// Deterministic in (init, data, config).
template <typename Scalar>
TrainTrace<Scalar> sgd_train(const NetworkParams<Scalar>& init, const Dataset<Scalar>& data,
                             const TrainConfig& config) {
    config.validate();
    init.validate();
    data.validate();
    detail::check_batch(init.weights.front().cols(), init.weights.back().rows(),
                        data.inputs.rows(), data.labels.rows(), data.inputs.cols(),
                        data.labels.cols());

    TrainTrace<Scalar> trace;
    trace.params = init;
    auto& p = trace.params;
    const Scalar lr = Scalar(config.learning_rate);
    const Scalar initial = mse_error(p, data);
    const double limit = 1e6 * std::max(double(initial), config.convergence_train_error);

    std::mt19937_64 rng(config.seed);
    std::vector<Index> order(std::size_t(data.size()));
    std::iota(order.begin(), order.end(), Index(0));
    MatrixX<Scalar> xs, ys;

    auto run_epoch = [&]() {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += std::size_t(config.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + std::size_t(config.batch_size));
            const Index b = Index(stop - start);
            xs.resize(data.inputs.rows(), b);
            ys.resize(data.labels.rows(), b);
            for (Index k = 0; k < b; ++k) {
                xs.col(k) = data.inputs.col(order[start + std::size_t(k)]);
                ys.col(k) = data.labels.col(order[start + std::size_t(k)]);
            }
            // Updates are applied after the full backward pass so every delta
            // sees the pre-step weights.
            std::vector<std::pair<MatrixX<Scalar>, MatrixX<Scalar>>> steps(p.weights.size());
            detail::backpropagate(p, xs, ys, config.reduction,
                                  [&](std::size_t l, const MatrixX<Scalar>& delta,
                                      const MatrixX<Scalar>& a) { steps[l] = {delta, a}; });
            for (std::size_t l = 0; l < steps.size(); ++l) {
                p.weights[l].noalias() -= lr * steps[l].first * steps[l].second.transpose();
                if (config.train_biases) p.biases[l] -= lr * steps[l].first.rowwise().sum();
            }
        }
        const Scalar err = mse_error(p, data);
        trace.epoch_train_error.push_back(err);
        if (!std::isfinite(double(err)) || double(err) > limit) {
            throw DivergenceDetected(
                "sgd_train: train error " + std::to_string(double(err)) + " after epoch " +
                    std::to_string(trace.epoch_train_error.size()),
                std::vector<double>(trace.epoch_train_error.begin(), trace.epoch_train_error.end()));
        }
        return err;
    };

    Scalar err = initial;
    for (int e = 0; e < config.epochs; ++e) err = run_epoch();
    for (int e = 0; e < config.max_extra_epochs && !(err < config.convergence_train_error); ++e) {
        err = run_epoch();
    }
    trace.converged = err < Scalar(config.convergence_train_error);
    return trace;
}

}  // namespace genbound
