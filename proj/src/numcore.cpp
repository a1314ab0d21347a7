#include "mammo/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mammo {

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw NumError(NumError::Kind::DimensionMismatch,
                       "matmul_nt: inner dimensions " + std::to_string(a.cols) + " vs " +
                           std::to_string(b.cols));
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.data.data() + i * a.cols;
        double* ci = c.data.data() + i * c.cols;
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* bj = b.data.data() + j * b.cols;
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += ai[k] * bj[k];
            ci[j] = acc;
        }
    }
    return c;
}

std::size_t parameter_count(const Network& net) {
    std::size_t n = 0;
    for (const auto& layer : net) n += layer.parameter_count();
    return n;
}

void init_weights(Network& net, Rng& rng) {
    for (auto& layer : net) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
        for (double& w : layer.W.data) w = rng.uniform(-bound, bound);
        std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
}

double relu_scalar(double z) { return z > 0.0 ? z : 0.0; }

double sigmoid_scalar(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Vec relu(const Vec& z) {
    Vec out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = relu_scalar(z[i]);
    return out;
}

Vec sigmoid(const Vec& z) {
    Vec out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = sigmoid_scalar(z[i]);
    return out;
}

void apply_activation(Activation act, std::span<double> z) {
    switch (act) {
    case Activation::None:
        return;
    case Activation::ReLU:
        for (double& v : z) v = relu_scalar(v);
        return;
    case Activation::Sigmoid:
        for (double& v : z) v = sigmoid_scalar(v);
        return;
    }
}

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

void check_loss_lengths(std::size_t a, std::size_t b) {
    if (a != b)
        throw NumError(NumError::Kind::LengthMismatch,
                       "bce: " + std::to_string(a) + " predictions vs " + std::to_string(b) +
                           " labels");
    if (a == 0)
        throw NumError(NumError::Kind::LengthMismatch, "bce: empty input");
}

} // namespace

double bce_loss(std::span<const double> y_hat, std::span<const double> y,
                const LossSpec& weights) {
    check_loss_lengths(y_hat.size(), y.size());
    double total = 0.0;
    for (std::size_t i = 0; i < y_hat.size(); ++i) {
        const double p = clamp_prob(y_hat[i]);
        total -= weights.w_pos * y[i] * std::log(p) +
                 weights.w_neg * (1.0 - y[i]) * std::log(1.0 - p);
    }
    return total / static_cast<double>(y_hat.size());
}

Vec bce_grad(std::span<const double> y_hat, std::span<const double> y, const LossSpec& weights) {
    check_loss_lengths(y_hat.size(), y.size());
    const double inv_n = 1.0 / static_cast<double>(y_hat.size());
    Vec g(y_hat.size());
    for (std::size_t i = 0; i < y_hat.size(); ++i) {
        const double p = clamp_prob(y_hat[i]);
        g[i] = inv_n * (-weights.w_pos * y[i] / p + weights.w_neg * (1.0 - y[i]) / (1.0 - p));
    }
    return g;
}

std::uint64_t network_signature(const Network& net) {
    // FNV-1a over the layer shapes; enough to catch forward/backward pairing
    // mistakes without hashing the weights themselves.
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    mix(net.size());
    for (const auto& layer : net) {
        mix(layer.in_dim());
        mix(layer.out_dim());
        mix(static_cast<std::uint64_t>(layer.act));
    }
    return h;
}

Matrix forward(const Network& net, const Matrix& x, ForwardCache* cache) {
    if (cache) {
        cache->inputs.clear();
        cache->outputs.clear();
        cache->signature = network_signature(net);
    }
    Matrix a = x;
    for (const auto& layer : net) {
        if (a.cols != layer.in_dim())
            throw NumError(NumError::Kind::DimensionMismatch,
                           "forward: input width " + std::to_string(a.cols) + " vs layer in " +
                               std::to_string(layer.in_dim()));
        if (cache) cache->inputs.push_back(a);
        Matrix z = matmul_nt(a, layer.W);
        for (std::size_t i = 0; i < z.rows; ++i) {
            double* zi = z.data.data() + i * z.cols;
            for (std::size_t j = 0; j < z.cols; ++j) zi[j] += layer.b[j];
        }
        for (std::size_t i = 0; i < z.rows; ++i) apply_activation(layer.act, z.row(i));
        a = std::move(z);
        if (cache) cache->outputs.push_back(a);
    }
    return a;
}

Vec forward(const Network& net, const Vec& x, ForwardCache* cache) {
    Matrix xm(1, x.size());
    xm.data = x;
    Matrix out = forward(net, xm, cache);
    return out.data;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
    for (std::size_t l = 0; l < dW.size(); ++l) {
        for (std::size_t i = 0; i < dW[l].data.size(); ++i)
            dW[l].data[i] += scale * other.dW[l].data[i];
        for (std::size_t i = 0; i < db[l].size(); ++i) db[l][i] += scale * other.db[l][i];
    }
}

Gradients zero_gradients(const Network& net) {
    Gradients g;
    g.dW.reserve(net.size());
    g.db.reserve(net.size());
    for (const auto& layer : net) {
        g.dW.emplace_back(layer.out_dim(), layer.in_dim());
        g.db.emplace_back(layer.out_dim(), 0.0);
    }
    return g;
}

Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& d_output,
                   Matrix* d_input) {
    if (cache.signature != network_signature(net) || cache.inputs.size() != net.size())
        throw NumError(NumError::Kind::StaleCache,
                       "backward: cache does not match this network");
    if (net.empty())
        throw NumError(NumError::Kind::DimensionMismatch, "backward: empty network");
    if (d_output.rows != cache.outputs.back().rows ||
        d_output.cols != cache.outputs.back().cols)
        throw NumError(NumError::Kind::ShapeMismatch,
                       "backward: upstream gradient shape does not match forward output");

    Gradients grads = zero_gradients(net);
    Matrix delta = d_output;  // dL/d(activation of current layer)
    for (std::size_t li = net.size(); li-- > 0;) {
        const DenseLayer& layer = net[li];
        const Matrix& a_out = cache.outputs[li];
        const Matrix& a_in = cache.inputs[li];
        const std::size_t n = a_in.rows;

        // Fold the activation derivative into delta, giving dL/dz.
        switch (layer.act) {
        case Activation::None:
            break;
        case Activation::ReLU:
            for (std::size_t i = 0; i < delta.data.size(); ++i)
                if (a_out.data[i] <= 0.0) delta.data[i] = 0.0;
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < delta.data.size(); ++i) {
                const double s = a_out.data[i];
                delta.data[i] *= s * (1.0 - s);
            }
            break;
        }

        Matrix& dW = grads.dW[li];
        Vec& db = grads.db[li];
        for (std::size_t r = 0; r < n; ++r) {
            const double* dz = delta.data.data() + r * delta.cols;
            const double* x = a_in.data.data() + r * a_in.cols;
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                const double d = dz[o];
                if (d == 0.0) continue;
                double* dwo = dW.data.data() + o * dW.cols;
                for (std::size_t k = 0; k < layer.in_dim(); ++k) dwo[k] += d * x[k];
                db[o] += d;
            }
        }

        if (li > 0 || d_input) {
            // dL/d(input) = delta * W, shape n x in.
            Matrix next(n, layer.in_dim());
            for (std::size_t r = 0; r < n; ++r) {
                const double* dz = delta.data.data() + r * delta.cols;
                double* out = next.data.data() + r * next.cols;
                for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                    const double d = dz[o];
                    if (d == 0.0) continue;
                    const double* wo = layer.W.data.data() + o * layer.W.cols;
                    for (std::size_t k = 0; k < layer.in_dim(); ++k) out[k] += d * wo[k];
                }
            }
            delta = std::move(next);
        }
    }
    if (d_input) *d_input = std::move(delta);
    return grads;
}

namespace {

void adam_update_span(AdamState& state, std::size_t offset, std::span<double> params,
                      std::span<const double> grads) {
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        double& m = state.m[offset + i];
        double& v = state.v[offset + i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        params[i] -= state.eta * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

void ensure_adam_size(AdamState& state, std::size_t n) {
    if (state.m.empty()) {
        state.m.assign(n, 0.0);
        state.v.assign(n, 0.0);
    } else if (state.m.size() != n || state.v.size() != n) {
        throw NumError(NumError::Kind::ShapeMismatch,
                       "adam_step: state sized for " + std::to_string(state.m.size()) +
                           " parameters, got " + std::to_string(n));
    }
}

} // namespace

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size())
        throw NumError(NumError::Kind::ShapeMismatch, "adam_step: params/grads length differ");
    ensure_adam_size(state, params.size());
    ++state.t;
    adam_update_span(state, 0, params, grads);
}

void adam_step(AdamState& state, Network& net, const Gradients& grads) {
    if (grads.dW.size() != net.size())
        throw NumError(NumError::Kind::ShapeMismatch, "adam_step: gradient layer count");
    ensure_adam_size(state, parameter_count(net));
    ++state.t;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < net.size(); ++l) {
        auto& layer = net[l];
        if (grads.dW[l].data.size() != layer.W.data.size() ||
            grads.db[l].size() != layer.b.size())
            throw NumError(NumError::Kind::ShapeMismatch, "adam_step: layer gradient shape");
        adam_update_span(state, offset, layer.W.data, grads.dW[l].data);
        offset += layer.W.data.size();
        adam_update_span(state, offset, layer.b, grads.db[l]);
        offset += layer.b.size();
    }
}

TrainHistory train_loop(Network& net, const BatchSource& next_batch, const LossSpec& loss,
                        AdamState& adam, const StopRule& stop, const ValEvaluator& evaluate_val) {
    TrainHistory history;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t bad_evals = 0;

    for (std::size_t iter = 1; iter <= stop.max_iters; ++iter) {
        auto [x, y] = next_batch();
        ForwardCache cache;
        Matrix out = forward(net, x, &cache);
        if (out.cols != 1)
            throw NumError(NumError::Kind::DimensionMismatch,
                           "train_loop: network output width must be 1");
        history.train_loss.push_back(bce_loss(out.data, y, loss));

        Vec g = bce_grad(out.data, y, loss);
        Matrix d_out(out.rows, 1);
        d_out.data = std::move(g);
        Gradients grads = backward(net, cache, d_out);
        adam_step(adam, net, grads);

        if (evaluate_val && stop.eval_every > 0 && iter % stop.eval_every == 0) {
            const double vl = evaluate_val();
            history.val_loss.emplace_back(iter, vl);
            if (vl < best_val - stop.min_delta) {
                best_val = vl;
                bad_evals = 0;
            } else if (stop.patience > 0 && ++bad_evals >= stop.patience) {
                break;
            }
        }
    }
    return history;
}

} // namespace mammo
