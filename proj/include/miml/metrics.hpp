#pragma once

#include <string>
#include <vector>

#include "miml/types.hpp"

namespace miml {

struct MetricsReport {
    double hamming_loss = 0.0;
    double one_error = 0.0;
    double ranking_loss = 0.0;
    double average_precision = 0.0;
    double f1_micro = 0.0;
    double f1_macro = 0.0;
    double subset_accuracy = 0.0;
    double map = 0.0;

    double overall() const { return (f1_micro + f1_macro + subset_accuracy + map) / 4.0; }
    std::string to_kv_lines() const;
};

double hamming_loss(const std::vector<LabelVector>& truths,
                    const std::vector<LabelVector>& preds);

// Fraction of samples whose top-scoring class (ties to lowest index) is not true.
double one_error(const std::vector<LabelVector>& truths,
                 const std::vector<std::vector<double>>& scores);

// Fraction of (positive, negative) pairs ordered wrongly; ties count 1/2.
// Samples without both a positive and a negative label are skipped.
double ranking_loss(const std::vector<LabelVector>& truths,
                    const std::vector<std::vector<double>>& scores);

double average_precision_miml(const std::vector<LabelVector>& truths,
                              const std::vector<std::vector<double>>& scores);

double f1_micro(const std::vector<LabelVector>& truths,
                const std::vector<LabelVector>& preds);
double f1_macro(const std::vector<LabelVector>& truths,
                const std::vector<LabelVector>& preds);
double subset_accuracy(const std::vector<LabelVector>& truths,
                       const std::vector<LabelVector>& preds);

// Mean over classes of average precision of the ranked sample list.
double map_per_class(const std::vector<LabelVector>& truths,
                     const std::vector<std::vector<double>>& scores);

MetricsReport compute_metrics(const std::vector<LabelVector>& truths,
                              const std::vector<LabelVector>& preds,
                              const std::vector<std::vector<double>>& scores);

}  // namespace miml
