#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mammo/errors.hpp"

namespace mammo {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

struct BinaryMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    ConfusionCounts confusion;
};

// Per-model metric bundle, one row of the comparison table.
struct EvalReport {
    double pf1 = 0.0;
    double p_precision = 0.0;
    double p_recall = 0.0;
    double auroc = 0.0;
    double accuracy = 0.0;
    double binary_precision = 0.0;
    double binary_recall = 0.0;
    double binary_f1 = 0.0;
    ConfusionCounts confusion;
    std::size_t n = 0;
    double threshold = 0.5;
};

// Probabilistic precision/recall: predicted probabilities contribute
// fractional true/false positive mass instead of thresholded counts.
// Zero denominators yield 0.
double p_precision(std::span<const double> probs, std::span<const double> labels);
double p_recall(std::span<const double> probs, std::span<const double> labels);
double p_f1(std::span<const double> probs, std::span<const double> labels);

// Thresholded metrics; prediction is positive iff prob >= tau.
BinaryMetrics binary_metrics(std::span<const double> probs, std::span<const double> labels,
                             double tau = 0.5);

// Rank-based AUROC (Mann-Whitney); ties count one half via average ranks.
double auroc(std::span<const double> probs, std::span<const double> labels);

EvalReport evaluate(std::span<const double> probs, std::span<const double> labels,
                    double tau = 0.5);

// CSV table, one row per named report. Header:
// model,pf1,p_precision,p_recall,auroc,accuracy,precision,recall,f1,tp,fp,tn,fn,n,threshold
std::string compare_reports(const std::vector<std::pair<std::string, EvalReport>>& reports);

} // namespace mammo
