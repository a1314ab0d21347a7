#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mammo/dataset.hpp"
#include "mammo/errors.hpp"
#include "mammo/numcore.hpp"
#include "mammo/sketch.hpp"

namespace mammo {

// ---------------------------------------------------------------------------
// Logistic regression with L2 regularization
// ---------------------------------------------------------------------------

struct LogisticModel {
    Vec w;           // kExampleDim weights
    double w0 = 0.0; // unregularized bias
    double C = 1.0;
    LossSpec class_weights;
};

struct LrTrainConfig {
    double C = 1.0;
    LossSpec class_weights;
    StopRule stop{.max_iters = 1000};
    double eta = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double grad_tolerance = 1e-6;  // infinity norm
};

struct LrTrainResult {
    LogisticModel model;
    std::vector<double> objective_history;  // one entry per iteration
};

// Full-batch Adam on the weighted negative log-likelihood (scaled by C)
// plus 1/2 ||w||^2. Returns the best-objective parameters visited, so the
// result never scores worse than the zero model it starts from.
LrTrainResult lr_train(const std::vector<Example>& examples, const LrTrainConfig& cfg);

double lr_predict_proba(const LogisticModel& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// SVM on Tensor-Sketched polynomial kernel features
// ---------------------------------------------------------------------------

struct SketchSVM {
    SketchDef sketch;
    Vec w;  // sketch.dim weights
    double b = 0.0;
    double lambda = 0.0;  // = 1 / (n C)
    double calib_a = 1.0; // logistic scaling of the margin
    double calib_c = 0.0;
};

struct SvmTrainConfig {
    double C = 1.0;
    double gamma = 1.0 / static_cast<double>(kExampleDim);
    double c0 = 1.0;
    int degree = 3;
    std::size_t sketch_dim = 512;
    LossSpec class_weights;
    std::size_t batch_size = 64;   // Pegasos subgradient samples per iteration
    std::size_t max_iters = 1000;
    std::uint64_t seed = 0;
};

struct SvmTrainResult {
    SketchSVM model;
    std::vector<double> objective_history;  // minibatch hinge objective per iteration
};

// Mini-batch Pegasos (step 1/(lambda t), ball projection) on sketched
// features, followed by a logistic calibration (a, c) fitted on the
// training margins for probability output.
SvmTrainResult svm_train(const std::vector<Example>& examples, const SvmTrainConfig& cfg);

double svm_decision(const SketchSVM& model, std::span<const double> x);
double svm_predict_proba(const SketchSVM& model, std::span<const double> x);

// Fits sigmoid(a m + c) to (margins, labels) by damped Newton; exposed for
// tests.
std::pair<double, double> fit_logistic_calibration(std::span<const double> margins,
                                                   std::span<const double> labels);

// ---------------------------------------------------------------------------
// Two-branch DNN (image encoder + metadata encoder)
// ---------------------------------------------------------------------------

enum class Fusion { Mean, MeanThenSigmoid };

struct TwoBranchDNN {
    Network image_branch;  // image_dim -> 100 ReLU -> 10 ReLU -> 1 Sigmoid
    Network meta_branch;   // 2 -> 2 ReLU -> 1 Sigmoid
    Fusion fusion = Fusion::Mean;

    std::size_t image_dim() const { return image_branch.front().in_dim(); }
    std::size_t input_dim() const { return image_dim() + 2; }
    std::size_t parameter_count() const {
        return mammo::parameter_count(image_branch) + mammo::parameter_count(meta_branch);
    }
};

// `image_dim` defaults to the production feature width; tests shrink it to
// keep finite-difference checks cheap.
TwoBranchDNN dnn_build(Fusion fusion = Fusion::Mean, std::size_t image_dim = kFeatureDim);

void dnn_init(TwoBranchDNN& model, std::uint64_t seed);

struct DnnCache {
    ForwardCache image;
    ForwardCache meta;
    Vec mean;    // branch mean before any fusion sigmoid
    Vec output;
};

// X rows are [image features..., age, implant]; returns one probability per
// row.
Vec dnn_forward(const TwoBranchDNN& model, const Matrix& x, DnnCache* cache = nullptr);

double dnn_predict(const TwoBranchDNN& model, std::span<const double> x);

struct DnnGradients {
    Gradients image;
    Gradients meta;
};

DnnGradients dnn_backward(const TwoBranchDNN& model, const DnnCache& cache,
                          std::span<const double> d_output);

void dnn_adam_step(AdamState& state, TwoBranchDNN& model, const DnnGradients& grads);

Vec dnn_flatten_params(const TwoBranchDNN& model);
void dnn_set_params(TwoBranchDNN& model, std::span<const double> flat);

enum class DnnRegime {
    WeightedBce,        // plain shuffled batches, class-weighted loss
    StratifiedBatches,  // SBS batches, unweighted loss
};

struct DnnTrainConfig {
    DnnRegime regime = DnnRegime::WeightedBce;
    LossSpec class_weights;  // regime (a) only
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
    StopRule stop{.max_iters = 1000, .eval_every = 10};
    double eta = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

TrainHistory dnn_train(TwoBranchDNN& model, const std::vector<Example>& train,
                       const std::vector<Example>& val, const DnnTrainConfig& cfg);

// ---------------------------------------------------------------------------

// Inverse-frequency default: N / (2 N_class) per class.
LossSpec inverse_frequency_weights(const std::vector<Example>& examples);

// Dense design matrix + label vector from examples.
std::pair<Matrix, Vec> examples_to_matrix(std::span<const Example> examples);

} // namespace mammo
