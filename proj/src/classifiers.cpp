#include "mammo/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace mammo {

namespace {

void require_both_classes(const std::vector<Example>& examples) {
    bool has_pos = false, has_neg = false;
    for (const Example& ex : examples) (ex.y > 0.5 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw ModelError(ModelError::Kind::SingleClassDataset,
                         "training requires both classes");
}

void require_width(std::size_t got, std::size_t want) {
    if (got != want)
        throw ModelError(ModelError::Kind::WidthMismatch,
                         "input width " + std::to_string(got) + ", expected " +
                             std::to_string(want));
}

} // namespace

std::pair<Matrix, Vec> examples_to_matrix(std::span<const Example> examples) {
    if (examples.empty()) return {Matrix(), Vec()};
    const std::size_t dim = examples[0].x.size();
    Matrix x(examples.size(), dim);
    Vec y(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        std::copy(examples[i].x.begin(), examples[i].x.end(), x.data.begin() + i * dim);
        y[i] = examples[i].y;
    }
    return {std::move(x), std::move(y)};
}

LossSpec inverse_frequency_weights(const std::vector<Example>& examples) {
    std::size_t n_pos = 0;
    for (const Example& ex : examples)
        if (ex.y > 0.5) ++n_pos;
    const std::size_t n = examples.size();
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw ModelError(ModelError::Kind::SingleClassDataset,
                         "class weights need both classes");
    return {static_cast<double>(n) / (2.0 * static_cast<double>(n_neg)),
            static_cast<double>(n) / (2.0 * static_cast<double>(n_pos))};
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

LrTrainResult lr_train(const std::vector<Example>& examples, const LrTrainConfig& cfg) {
    require_both_classes(examples);
    const std::size_t n = examples.size();
    const std::size_t dim = examples[0].x.size();

    LogisticModel model;
    model.w.assign(dim, 0.0);
    model.w0 = 0.0;
    model.C = cfg.C;
    model.class_weights = cfg.class_weights;

    // Flat parameter layout: [w..., w0].
    Vec params(dim + 1, 0.0);
    Vec grads(dim + 1, 0.0);
    AdamState adam;
    adam.eta = cfg.eta;
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.eps = cfg.eps;

    Vec best_params = params;
    double best_objective = std::numeric_limits<double>::infinity();
    LrTrainResult result;

    for (std::size_t iter = 0; iter < cfg.stop.max_iters; ++iter) {
        std::fill(grads.begin(), grads.end(), 0.0);
        double nll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& x = examples[i].x;
            double z = params[dim];
            for (std::size_t j = 0; j < dim; ++j) z += params[j] * x[j];
            const double p = sigmoid_scalar(z);
            const double y = examples[i].y;
            const double cw = y > 0.5 ? cfg.class_weights.w_pos : cfg.class_weights.w_neg;
            const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
            nll -= cw * (y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
            const double dz = cfg.C * cw * (p - y);
            for (std::size_t j = 0; j < dim; ++j) grads[j] += dz * x[j];
            grads[dim] += dz;
        }
        double reg = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            grads[j] += params[j];  // d(1/2 ||w||^2); bias stays unregularized
            reg += params[j] * params[j];
        }
        const double objective = cfg.C * nll + 0.5 * reg;
        result.objective_history.push_back(objective);
        if (objective < best_objective) {
            best_objective = objective;
            best_params = params;
        }

        double grad_inf = 0.0;
        for (double g : grads) grad_inf = std::max(grad_inf, std::abs(g));
        if (grad_inf < cfg.grad_tolerance) break;

        adam_step(adam, params, grads);
    }

    // Evaluate the final iterate too; Adam is not monotone.
    if (!result.objective_history.empty()) {
        double nll = 0.0, reg = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& x = examples[i].x;
            double z = params[dim];
            for (std::size_t j = 0; j < dim; ++j) z += params[j] * x[j];
            const double p = std::clamp(sigmoid_scalar(z), kProbClamp, 1.0 - kProbClamp);
            const double y = examples[i].y;
            const double cw = y > 0.5 ? cfg.class_weights.w_pos : cfg.class_weights.w_neg;
            nll -= cw * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        }
        for (std::size_t j = 0; j < dim; ++j) reg += params[j] * params[j];
        if (cfg.C * nll + 0.5 * reg < best_objective) best_params = params;
    }

    model.w.assign(best_params.begin(), best_params.begin() + static_cast<std::ptrdiff_t>(dim));
    model.w0 = best_params[dim];
    return {std::move(model), std::move(result.objective_history)};
}

double lr_predict_proba(const LogisticModel& model, std::span<const double> x) {
    require_width(x.size(), model.w.size());
    double z = model.w0;
    for (std::size_t j = 0; j < x.size(); ++j) z += model.w[j] * x[j];
    return sigmoid_scalar(z);
}

// ---------------------------------------------------------------------------
// SVM
// ---------------------------------------------------------------------------

std::pair<double, double> fit_logistic_calibration(std::span<const double> margins,
                                                   std::span<const double> labels) {
    if (margins.size() != labels.size() || margins.empty())
        throw ModelError(ModelError::Kind::WidthMismatch, "calibration inputs mismatch");

    // Damped Newton on BCE(sigmoid(a m + c)) with a small ridge keeping the
    // separable case finite.
    double a = 1.0, c = 0.0;
    const double ridge = 1e-6;
    const std::size_t n = margins.size();
    for (int step = 0; step < 100; ++step) {
        double ga = ridge * a, gc = 0.0;
        double haa = ridge, hac = 0.0, hcc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double m = margins[i];
            const double p = sigmoid_scalar(a * m + c);
            const double d = p - labels[i];
            const double s = std::max(p * (1.0 - p), 1e-12);
            ga += d * m;
            gc += d;
            haa += s * m * m;
            hac += s * m;
            hcc += s;
        }
        const double det = haa * hcc - hac * hac;
        if (std::abs(det) < 1e-18) break;
        double da = (hcc * ga - hac * gc) / det;
        double dc = (haa * gc - hac * ga) / det;
        const double norm = std::max(std::abs(da), std::abs(dc));
        if (norm > 10.0) {  // damp huge steps early on
            da *= 10.0 / norm;
            dc *= 10.0 / norm;
        }
        a -= da;
        c -= dc;
        if (norm < 1e-10) break;
    }
    return {a, c};
}

SvmTrainResult svm_train(const std::vector<Example>& examples, const SvmTrainConfig& cfg) {
    require_both_classes(examples);
    if (cfg.batch_size == 0 || cfg.max_iters == 0)
        throw ModelError(ModelError::Kind::BadDegree, "batch_size and max_iters must be positive");

    const std::size_t n = examples.size();
    const std::size_t input_dim = examples[0].x.size();
    SketchSVM model;
    model.sketch = sketch_fit(cfg.gamma, cfg.c0, cfg.degree, cfg.sketch_dim, cfg.seed, input_dim);
    model.lambda = 1.0 / (static_cast<double>(n) * cfg.C);
    model.w.assign(cfg.sketch_dim, 0.0);
    model.b = 0.0;

    // Pre-transform once; Pegasos then only touches D-wide rows.
    Matrix phi(n, cfg.sketch_dim);
    Vec y(n);
    Vec alpha(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec row = sketch_transform(model.sketch, examples[i].x);
        std::copy(row.begin(), row.end(), phi.data.begin() + i * cfg.sketch_dim);
        y[i] = examples[i].y > 0.5 ? 1.0 : -1.0;
        alpha[i] = examples[i].y > 0.5 ? cfg.class_weights.w_pos : cfg.class_weights.w_neg;
    }

    Rng rng(cfg.seed + 1);
    const double radius = 1.0 / std::sqrt(model.lambda);
    SvmTrainResult result;
    std::vector<std::size_t> batch(cfg.batch_size);

    for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
        for (std::size_t i = 0; i < cfg.batch_size; ++i)
            batch[i] = static_cast<std::size_t>(rng.uniform_index(n));

        // Minibatch objective before the step, for the history.
        double hinge = 0.0;
        Vec sub(cfg.sketch_dim, 0.0);
        double sub_b = 0.0;
        for (std::size_t i : batch) {
            const double* xi = phi.data.data() + i * cfg.sketch_dim;
            double margin = model.b;
            for (std::size_t j = 0; j < cfg.sketch_dim; ++j) margin += model.w[j] * xi[j];
            margin *= y[i];
            if (margin < 1.0) {
                hinge += alpha[i] * (1.0 - margin);
                const double scale = alpha[i] * y[i];
                for (std::size_t j = 0; j < cfg.sketch_dim; ++j) sub[j] += scale * xi[j];
                sub_b += scale;
            }
        }
        double w_norm2 = 0.0;
        for (double w : model.w) w_norm2 += w * w;
        result.objective_history.push_back(
            0.5 * model.lambda * w_norm2 + hinge / static_cast<double>(cfg.batch_size));

        const double eta = 1.0 / (model.lambda * static_cast<double>(t));
        const double keep = 1.0 - eta * model.lambda;
        const double step = eta / static_cast<double>(cfg.batch_size);
        for (std::size_t j = 0; j < cfg.sketch_dim; ++j)
            model.w[j] = keep * model.w[j] + step * sub[j];
        model.b += step * sub_b;

        // Projection onto the ball of radius 1/sqrt(lambda).
        w_norm2 = 0.0;
        for (double w : model.w) w_norm2 += w * w;
        if (w_norm2 > radius * radius) {
            const double shrink = radius / std::sqrt(w_norm2);
            for (double& w : model.w) w *= shrink;
        }
    }

    Vec margins(n);
    Vec labels01(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = phi.data.data() + i * cfg.sketch_dim;
        double margin = model.b;
        for (std::size_t j = 0; j < cfg.sketch_dim; ++j) margin += model.w[j] * xi[j];
        margins[i] = margin;
        labels01[i] = examples[i].y;
    }
    std::tie(model.calib_a, model.calib_c) = fit_logistic_calibration(margins, labels01);

    return {std::move(model), std::move(result.objective_history)};
}

double svm_decision(const SketchSVM& model, std::span<const double> x) {
    require_width(x.size(), model.sketch.input_dim);
    const Vec phi = sketch_transform(model.sketch, x);
    double margin = model.b;
    for (std::size_t j = 0; j < phi.size(); ++j) margin += model.w[j] * phi[j];
    return margin;
}

double svm_predict_proba(const SketchSVM& model, std::span<const double> x) {
    return sigmoid_scalar(model.calib_a * svm_decision(model, x) + model.calib_c);
}

// ---------------------------------------------------------------------------
// Two-branch DNN
// ---------------------------------------------------------------------------

TwoBranchDNN dnn_build(Fusion fusion, std::size_t image_dim) {
    TwoBranchDNN model;
    model.image_branch.emplace_back(image_dim, 100, Activation::ReLU);
    model.image_branch.emplace_back(100, 10, Activation::ReLU);
    model.image_branch.emplace_back(10, 1, Activation::Sigmoid);
    model.meta_branch.emplace_back(2, 2, Activation::ReLU);
    model.meta_branch.emplace_back(2, 1, Activation::Sigmoid);
    model.fusion = fusion;
    return model;
}

void dnn_init(TwoBranchDNN& model, std::uint64_t seed) {
    Rng rng(seed);
    init_weights(model.image_branch, rng);
    init_weights(model.meta_branch, rng);
}

namespace {

std::pair<Matrix, Matrix> split_inputs(const TwoBranchDNN& model, const Matrix& x) {
    if (x.cols != model.input_dim())
        throw ModelError(ModelError::Kind::WidthMismatch,
                         "input width " + std::to_string(x.cols) + ", model expects " +
                             std::to_string(model.input_dim()));
    const std::size_t img_dim = model.image_dim();
    Matrix xi(x.rows, img_dim), xm(x.rows, 2);
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double* src = x.data.data() + r * x.cols;
        std::copy(src, src + img_dim, xi.data.data() + r * img_dim);
        xm(r, 0) = src[img_dim];
        xm(r, 1) = src[img_dim + 1];
    }
    return {std::move(xi), std::move(xm)};
}

} // namespace

Vec dnn_forward(const TwoBranchDNN& model, const Matrix& x, DnnCache* cache) {
    auto [xi, xm] = split_inputs(model, x);
    ForwardCache img_cache, meta_cache;
    const Matrix img_out = forward(model.image_branch, xi, cache ? &img_cache : nullptr);
    const Matrix meta_out = forward(model.meta_branch, xm, cache ? &meta_cache : nullptr);

    Vec mean(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r)
        mean[r] = 0.5 * (img_out(r, 0) + meta_out(r, 0));
    Vec out = mean;
    if (model.fusion == Fusion::MeanThenSigmoid)
        for (double& v : out) v = sigmoid_scalar(v);

    if (cache) {
        cache->image = std::move(img_cache);
        cache->meta = std::move(meta_cache);
        cache->mean = std::move(mean);
        cache->output = out;
    }
    return out;
}

double dnn_predict(const TwoBranchDNN& model, std::span<const double> x) {
    Matrix xm(1, x.size());
    std::copy(x.begin(), x.end(), xm.data.begin());
    return dnn_forward(model, xm)[0];
}

DnnGradients dnn_backward(const TwoBranchDNN& model, const DnnCache& cache,
                          std::span<const double> d_output) {
    const std::size_t n = cache.output.size();
    if (d_output.size() != n)
        throw NumError(NumError::Kind::ShapeMismatch, "dnn_backward: gradient length");

    Matrix d_branch(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
        double d = d_output[r];
        if (model.fusion == Fusion::MeanThenSigmoid) {
            const double s = cache.output[r];
            d *= s * (1.0 - s);
        }
        d_branch(r, 0) = 0.5 * d;  // both branches feed the mean equally
    }

    DnnGradients grads;
    grads.image = backward(model.image_branch, cache.image, d_branch);
    grads.meta = backward(model.meta_branch, cache.meta, d_branch);
    return grads;
}

void dnn_adam_step(AdamState& state, TwoBranchDNN& model, const DnnGradients& grads) {
    // Flattened view across both branches so one Adam state covers the model.
    Vec params = dnn_flatten_params(model);
    Vec flat_grads;
    flat_grads.reserve(params.size());
    for (std::size_t l = 0; l < model.image_branch.size(); ++l) {
        flat_grads.insert(flat_grads.end(), grads.image.dW[l].data.begin(),
                          grads.image.dW[l].data.end());
        flat_grads.insert(flat_grads.end(), grads.image.db[l].begin(), grads.image.db[l].end());
    }
    for (std::size_t l = 0; l < model.meta_branch.size(); ++l) {
        flat_grads.insert(flat_grads.end(), grads.meta.dW[l].data.begin(),
                          grads.meta.dW[l].data.end());
        flat_grads.insert(flat_grads.end(), grads.meta.db[l].begin(), grads.meta.db[l].end());
    }
    adam_step(state, params, flat_grads);
    dnn_set_params(model, params);
}

Vec dnn_flatten_params(const TwoBranchDNN& model) {
    Vec flat;
    flat.reserve(model.parameter_count());
    for (const Network* net : {&model.image_branch, &model.meta_branch}) {
        for (const DenseLayer& layer : *net) {
            flat.insert(flat.end(), layer.W.data.begin(), layer.W.data.end());
            flat.insert(flat.end(), layer.b.begin(), layer.b.end());
        }
    }
    return flat;
}

void dnn_set_params(TwoBranchDNN& model, std::span<const double> flat) {
    if (flat.size() != model.parameter_count())
        throw NumError(NumError::Kind::ShapeMismatch, "dnn_set_params: length");
    std::size_t pos = 0;
    for (Network* net : {&model.image_branch, &model.meta_branch}) {
        for (DenseLayer& layer : *net) {
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                      flat.begin() + static_cast<std::ptrdiff_t>(pos + layer.W.data.size()),
                      layer.W.data.begin());
            pos += layer.W.data.size();
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                      flat.begin() + static_cast<std::ptrdiff_t>(pos + layer.b.size()),
                      layer.b.begin());
            pos += layer.b.size();
        }
    }
}

TrainHistory dnn_train(TwoBranchDNN& model, const std::vector<Example>& train,
                       const std::vector<Example>& val, const DnnTrainConfig& cfg) {
    require_both_classes(train);
    const LossSpec loss =
        cfg.regime == DnnRegime::WeightedBce ? cfg.class_weights : LossSpec{1.0, 1.0};

    // Batch index source per regime.
    std::vector<std::uint8_t> labels = labels_of(train);
    std::unique_ptr<StratifiedBatchSampler> sbs;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(cfg.seed + 17);
    std::size_t cursor = 0;
    const std::size_t batch_size = std::min(cfg.batch_size, train.size());
    if (cfg.regime == DnnRegime::StratifiedBatches)
        sbs = std::make_unique<StratifiedBatchSampler>(labels, batch_size, cfg.seed + 17);
    else
        shuffle_rng.shuffle(order);

    const auto next_indices = [&]() {
        if (sbs) return sbs->next_batch();
        std::vector<std::size_t> batch;
        batch.reserve(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i) {
            if (cursor == order.size()) {
                shuffle_rng.shuffle(order);
                cursor = 0;
            }
            batch.push_back(order[cursor++]);
        }
        return batch;
    };

    Matrix val_x;
    Vec val_y;
    if (!val.empty()) std::tie(val_x, val_y) = examples_to_matrix(val);

    AdamState adam;
    adam.eta = cfg.eta;
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.eps = cfg.eps;
    TrainHistory history;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t bad_evals = 0;

    const std::size_t width = model.input_dim();
    for (std::size_t iter = 1; iter <= cfg.stop.max_iters; ++iter) {
        const std::vector<std::size_t> idx = next_indices();
        Matrix x(idx.size(), width);
        Vec y(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const Example& ex = train[idx[r]];
            std::copy(ex.x.begin(), ex.x.end(), x.data.begin() + r * width);
            y[r] = ex.y;
        }

        DnnCache cache;
        const Vec out = dnn_forward(model, x, &cache);
        history.train_loss.push_back(bce_loss(out, y, loss));
        const Vec d_out = bce_grad(out, y, loss);
        const DnnGradients grads = dnn_backward(model, cache, d_out);
        dnn_adam_step(adam, model, grads);

        if (!val.empty() && cfg.stop.eval_every > 0 && iter % cfg.stop.eval_every == 0) {
            const Vec val_out = dnn_forward(model, val_x);
            const double vl = bce_loss(val_out, val_y, loss);
            history.val_loss.emplace_back(iter, vl);
            if (vl < best_val - cfg.stop.min_delta) {
                best_val = vl;
                bad_evals = 0;
            } else if (cfg.stop.patience > 0 && ++bad_evals >= cfg.stop.patience) {
                break;
            }
        }
    }
    return history;
}

} // namespace mammo
