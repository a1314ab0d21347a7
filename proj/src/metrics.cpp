#include "mammo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mammo {

namespace {

void check_inputs(std::span<const double> probs, std::span<const double> labels) {
    if (probs.size() != labels.size())
        throw MetricError(MetricError::Kind::LengthMismatch,
                          std::to_string(probs.size()) + " probs vs " +
                              std::to_string(labels.size()) + " labels");
    if (probs.empty())
        throw MetricError(MetricError::Kind::EmptyInput, "no samples");
}

struct ProbMasses {
    double tp = 0.0;  // sum of p over positives
    double fp = 0.0;  // sum of p over negatives
    double fn = 0.0;  // sum of (1 - p) over positives
};

ProbMasses prob_masses(std::span<const double> probs, std::span<const double> labels) {
    ProbMasses m;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (labels[i] > 0.5) {
            m.tp += probs[i];
            m.fn += 1.0 - probs[i];
        } else {
            m.fp += probs[i];
        }
    }
    return m;
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

} // namespace

double p_precision(std::span<const double> probs, std::span<const double> labels) {
    check_inputs(probs, labels);
    const ProbMasses m = prob_masses(probs, labels);
    return safe_ratio(m.tp, m.tp + m.fp);
}

double p_recall(std::span<const double> probs, std::span<const double> labels) {
    check_inputs(probs, labels);
    const ProbMasses m = prob_masses(probs, labels);
    return safe_ratio(m.tp, m.tp + m.fn);
}

double p_f1(std::span<const double> probs, std::span<const double> labels) {
    const double prec = p_precision(probs, labels);
    const double rec = p_recall(probs, labels);
    return safe_ratio(2.0 * prec * rec, prec + rec);
}

BinaryMetrics binary_metrics(std::span<const double> probs, std::span<const double> labels,
                             double tau) {
    check_inputs(probs, labels);
    BinaryMetrics out;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool predicted = probs[i] >= tau;
        const bool actual = labels[i] > 0.5;
        if (predicted && actual)
            ++out.confusion.tp;
        else if (predicted && !actual)
            ++out.confusion.fp;
        else if (!predicted && actual)
            ++out.confusion.fn;
        else
            ++out.confusion.tn;
    }
    const auto& c = out.confusion;
    out.precision = safe_ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
    out.recall = safe_ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
    out.f1 = safe_ratio(2.0 * out.precision * out.recall, out.precision + out.recall);
    out.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(probs.size());
    return out;
}

double auroc(std::span<const double> probs, std::span<const double> labels) {
    check_inputs(probs, labels);
    const std::size_t n = probs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });

    // Average ranks over tie groups, then sum the positive ranks.
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && probs[order[j + 1]] == probs[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }

    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] > 0.5) {
            pos_rank_sum += rank[k];
            ++n_pos;
        }
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw MetricError(MetricError::Kind::SingleClassInput,
                          "AUROC requires both classes");
    return (pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

EvalReport evaluate(std::span<const double> probs, std::span<const double> labels, double tau) {
    check_inputs(probs, labels);
    EvalReport report;
    report.p_precision = p_precision(probs, labels);
    report.p_recall = p_recall(probs, labels);
    report.pf1 = p_f1(probs, labels);
    report.auroc = auroc(probs, labels);
    const BinaryMetrics bm = binary_metrics(probs, labels, tau);
    report.binary_precision = bm.precision;
    report.binary_recall = bm.recall;
    report.binary_f1 = bm.f1;
    report.accuracy = bm.accuracy;
    report.confusion = bm.confusion;
    report.n = probs.size();
    report.threshold = tau;
    return report;
}

std::string compare_reports(const std::vector<std::pair<std::string, EvalReport>>& reports) {
    std::ostringstream out;
    out.precision(12);
    out << "model,pf1,p_precision,p_recall,auroc,accuracy,precision,recall,f1,"
           "tp,fp,tn,fn,n,threshold\n";
    for (const auto& [name, r] : reports) {
        out << name << ',' << r.pf1 << ',' << r.p_precision << ',' << r.p_recall << ','
            << r.auroc << ',' << r.accuracy << ',' << r.binary_precision << ','
            << r.binary_recall << ',' << r.binary_f1 << ',' << r.confusion.tp << ','
            << r.confusion.fp << ',' << r.confusion.tn << ',' << r.confusion.fn << ','
            << r.n << ',' << r.threshold << '\n';
    }
    return out.str();
}

} // namespace mammo
