#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mammo/errors.hpp"
#include "mammo/rng.hpp"

namespace mammo {

using Vec = std::vector<double>;

// Dense row-major matrix. Deliberately minimal: the networks here are a
// handful of small fixed layers, not general tensor programs.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

// C = A * B^T where A is n x k and B is m x k. Both operands are walked
// along contiguous rows, which is the whole reason for the ^T convention.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

enum class Activation { None, ReLU, Sigmoid };

struct DenseLayer {
    Matrix W;  // out x in
    Vec b;     // out
    Activation act = Activation::None;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, Activation a)
        : W(out, in), b(out, 0.0), act(a) {}

    std::size_t in_dim() const { return W.cols; }
    std::size_t out_dim() const { return W.rows; }
    std::size_t parameter_count() const { return W.data.size() + b.size(); }
};

using Network = std::vector<DenseLayer>;

std::size_t parameter_count(const Network& net);

// Glorot-uniform init, bounds +/- sqrt(6 / (fan_in + fan_out)); biases zero.
void init_weights(Network& net, Rng& rng);

double relu_scalar(double z);
double sigmoid_scalar(double z);  // branch on sign, stable for |z| up to ~1e3
Vec relu(const Vec& z);
Vec sigmoid(const Vec& z);
void apply_activation(Activation act, std::span<double> z);

struct LossSpec {
    double w_neg = 1.0;
    double w_pos = 1.0;
};

inline constexpr double kProbClamp = 1e-7;

// Mean weighted binary cross-entropy; predictions are clamped to
// [kProbClamp, 1 - kProbClamp] before the logs.
double bce_loss(std::span<const double> y_hat, std::span<const double> y,
                const LossSpec& weights = {});

// dL/dy_hat of bce_loss (includes the 1/N factor). Components whose
// prediction sits on the clamp boundary get the clamped derivative.
Vec bce_grad(std::span<const double> y_hat, std::span<const double> y,
             const LossSpec& weights = {});

// Forward cache for one batch: layer inputs and post-activation outputs.
// `signature` ties the cache to the network that produced it.
struct ForwardCache {
    std::vector<Matrix> inputs;   // inputs[l]  = activations entering layer l (n x in)
    std::vector<Matrix> outputs;  // outputs[l] = activations leaving layer l (n x out)
    std::uint64_t signature = 0;
};

std::uint64_t network_signature(const Network& net);

// X is n x in; returns n x out. Pass a cache to enable backward().
Matrix forward(const Network& net, const Matrix& x, ForwardCache* cache = nullptr);

// Single-vector convenience wrapper.
Vec forward(const Network& net, const Vec& x, ForwardCache* cache = nullptr);

struct Gradients {
    std::vector<Matrix> dW;
    std::vector<Vec> db;

    void add_scaled(const Gradients& other, double scale);
};

Gradients zero_gradients(const Network& net);

// Exact backprop for the affine+activation stack. `d_output` is dL/d(net
// output), n x out, matching the forward batch. Returns parameter gradients;
// `d_input` (optional) receives dL/d(net input) for upstream branches.
Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& d_output,
                   Matrix* d_input = nullptr);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double eta = 3e-4;
    std::uint64_t t = 0;
    Vec m;  // exponential average of gradients
    Vec v;  // exponential average of squared gradients
};

// One Adam update with bias correction over a flat parameter vector.
// m and v are sized on first use and must keep their length afterwards.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

// Network variant: visits every layer's W (row-major) then b, in layer order.
void adam_step(AdamState& state, Network& net, const Gradients& grads);

struct StopRule {
    std::size_t max_iters = 1000;
    std::size_t patience = 0;     // 0 disables early stopping
    double min_delta = 0.0;
    std::size_t eval_every = 10;  // validation cadence in iterations
};

struct TrainHistory {
    std::vector<double> train_loss;                          // one entry per iteration
    std::vector<std::pair<std::size_t, double>> val_loss;    // (iteration, loss)
};

using BatchSource = std::function<std::pair<Matrix, Vec>()>;
using ValEvaluator = std::function<double()>;

// Forward/backward/adam per batch. Stops at max_iters, or early when the
// validation loss fails to improve by min_delta for `patience` consecutive
// evaluations. `evaluate_val` may be empty, which disables early stopping.
TrainHistory train_loop(Network& net, const BatchSource& next_batch, const LossSpec& loss,
                        AdamState& adam, const StopRule& stop,
                        const ValEvaluator& evaluate_val = {});

} // namespace mammo
