#include "miml/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace miml {

namespace {

void check_pair_sizes(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": sample count mismatch");
    if (a == 0) throw std::invalid_argument(std::string(what) + ": empty input");
}

// Indices ordered by descending value, ties broken by lowest index.
std::vector<std::size_t> rank_desc(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
}

}  // namespace

double hamming_loss(const std::vector<LabelVector>& truths,
                    const std::vector<LabelVector>& preds) {
    check_pair_sizes(truths.size(), preds.size(), "hamming_loss");
    double total = 0.0;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i].size() != preds[i].size())
            throw std::invalid_argument("hamming_loss: class count mismatch");
        for (std::size_t k = 0; k < truths[i].size(); ++k)
            total += (truths[i].bits[k] != preds[i].bits[k]) ? 1.0 : 0.0;
        cells += truths[i].size();
    }
    return total / static_cast<double>(cells);
}

double one_error(const std::vector<LabelVector>& truths,
                 const std::vector<std::vector<double>>& scores) {
    check_pair_sizes(truths.size(), scores.size(), "one_error");
    double errors = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i].popcount() == 0)
            throw std::invalid_argument("one_error: sample with empty truth");
        std::size_t top = 0;
        for (std::size_t k = 1; k < scores[i].size(); ++k)
            if (scores[i][k] > scores[i][top]) top = k;
        if (!truths[i].bits[top]) errors += 1.0;
    }
    return errors / static_cast<double>(truths.size());
}

double ranking_loss(const std::vector<LabelVector>& truths,
                    const std::vector<std::vector<double>>& scores) {
    check_pair_sizes(truths.size(), scores.size(), "ranking_loss");
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        int pos = truths[i].popcount();
        int neg = static_cast<int>(truths[i].size()) - pos;
        if (pos == 0 || neg == 0) continue;
        double bad = 0.0;
        for (std::size_t p = 0; p < truths[i].size(); ++p) {
            if (!truths[i].bits[p]) continue;
            for (std::size_t q = 0; q < truths[i].size(); ++q) {
                if (truths[i].bits[q]) continue;
                if (scores[i][p] < scores[i][q]) bad += 1.0;
                else if (scores[i][p] == scores[i][q]) bad += 0.5;
            }
        }
        sum += bad / (static_cast<double>(pos) * neg);
        ++used;
    }
    if (used == 0) throw std::runtime_error("ranking_loss: no sample with both label kinds");
    return sum / static_cast<double>(used);
}

double average_precision_miml(const std::vector<LabelVector>& truths,
                              const std::vector<std::vector<double>>& scores) {
    check_pair_sizes(truths.size(), scores.size(), "average_precision_miml");
    double sum = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i].popcount() == 0)
            throw std::invalid_argument("average_precision_miml: sample with empty truth");
        std::vector<std::size_t> order = rank_desc(scores[i]);
        std::vector<std::size_t> rank_of(order.size());
        for (std::size_t r = 0; r < order.size(); ++r) rank_of[order[r]] = r + 1;
        double ap = 0.0;
        int pos = 0;
        for (std::size_t k = 0; k < truths[i].size(); ++k) {
            if (!truths[i].bits[k]) continue;
            ++pos;
            std::size_t better = 0;
            for (std::size_t k2 = 0; k2 < truths[i].size(); ++k2)
                if (truths[i].bits[k2] && rank_of[k2] <= rank_of[k]) ++better;
            ap += static_cast<double>(better) / static_cast<double>(rank_of[k]);
        }
        sum += ap / pos;
    }
    return sum / static_cast<double>(truths.size());
}

double f1_micro(const std::vector<LabelVector>& truths,
                const std::vector<LabelVector>& preds) {
    check_pair_sizes(truths.size(), preds.size(), "f1_micro");
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i)
        for (std::size_t k = 0; k < truths[i].size(); ++k) {
            if (truths[i].bits[k] && preds[i].bits[k]) tp += 1.0;
            else if (!truths[i].bits[k] && preds[i].bits[k]) fp += 1.0;
            else if (truths[i].bits[k] && !preds[i].bits[k]) fn += 1.0;
        }
    double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 1.0 : 2.0 * tp / denom;
}

double f1_macro(const std::vector<LabelVector>& truths,
                const std::vector<LabelVector>& preds) {
    check_pair_sizes(truths.size(), preds.size(), "f1_macro");
    std::size_t num_classes = truths.front().size();
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
        double tp = 0.0, fp = 0.0, fn = 0.0;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            if (truths[i].bits[k] && preds[i].bits[k]) tp += 1.0;
            else if (!truths[i].bits[k] && preds[i].bits[k]) fp += 1.0;
            else if (truths[i].bits[k] && !preds[i].bits[k]) fn += 1.0;
        }
        if (tp == 0.0 && fp == 0.0 && fn == 0.0) continue;  // absent from both
        double denom = 2.0 * tp + fp + fn;
        sum += denom == 0.0 ? 0.0 : 2.0 * tp / denom;
        ++used;
    }
    return used == 0 ? 1.0 : sum / static_cast<double>(used);
}

double subset_accuracy(const std::vector<LabelVector>& truths,
                       const std::vector<LabelVector>& preds) {
    check_pair_sizes(truths.size(), preds.size(), "subset_accuracy");
    double hits = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i)
        if (truths[i] == preds[i]) hits += 1.0;
    return hits / static_cast<double>(truths.size());
}

double map_per_class(const std::vector<LabelVector>& truths,
                     const std::vector<std::vector<double>>& scores) {
    check_pair_sizes(truths.size(), scores.size(), "map_per_class");
    std::size_t num_classes = truths.front().size();
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
        std::vector<double> col(truths.size());
        int positives = 0;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            col[i] = scores[i][k];
            positives += truths[i].bits[k] ? 1 : 0;
        }
        if (positives == 0) continue;
        std::vector<std::size_t> order = rank_desc(col);
        double ap = 0.0;
        int seen = 0;
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (!truths[order[r]].bits[k]) continue;
            ++seen;
            ap += static_cast<double>(seen) / static_cast<double>(r + 1);
        }
        sum += ap / positives;
        ++used;
    }
    return used == 0 ? 0.0 : sum / static_cast<double>(used);
}

MetricsReport compute_metrics(const std::vector<LabelVector>& truths,
                              const std::vector<LabelVector>& preds,
                              const std::vector<std::vector<double>>& scores) {
    MetricsReport r;
    r.hamming_loss = hamming_loss(truths, preds);
    r.one_error = one_error(truths, scores);
    r.ranking_loss = ranking_loss(truths, scores);
    r.average_precision = average_precision_miml(truths, scores);
    r.f1_micro = f1_micro(truths, preds);
    r.f1_macro = f1_macro(truths, preds);
    r.subset_accuracy = subset_accuracy(truths, preds);
    r.map = map_per_class(truths, scores);
    return r;
}

std::string MetricsReport::to_kv_lines() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "hamming_loss=%.9f\none_error=%.9f\nranking_loss=%.9f\n"
                  "average_precision=%.9f\nf1_micro=%.9f\nf1_macro=%.9f\n"
                  "subset_accuracy=%.9f\nmap=%.9f\noverall=%.9f\n",
                  hamming_loss, one_error, ranking_loss, average_precision, f1_micro,
                  f1_macro, subset_accuracy, map, overall());
    return buf;
}

}  // namespace miml
