#include "miml/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace miml {

namespace {

uint64_t fnv1a64(const void* data, std::size_t n, uint64_t h = 14695981039346656037ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::vector<double> init_global_freq(const Dataset& dataset) {
    if (dataset.empty()) throw std::invalid_argument("init_global_freq: empty dataset");
    std::size_t num_classes = dataset.front().label.size();
    std::vector<double> counts(num_classes, 0.0);
    double total = 0.0;
    for (const Bag& bag : dataset)
        for (std::size_t k = 0; k < num_classes; ++k)
            if (bag.label.bits[k]) {
                counts[k] += 1.0;
                total += 1.0;
            }
    if (total == 0.0) throw std::runtime_error("init_global_freq: no positive labels");
    for (double& c : counts) c /= total;
    return softmax(counts);
}

std::map<std::string, std::vector<double>> init_per_sample_freq(const Dataset& dataset) {
    std::map<std::string, std::vector<double>> out;
    for (const Bag& bag : dataset) {
        int pop = bag.label.popcount();
        if (pop == 0)
            throw std::runtime_error("init_per_sample_freq: bag '" + bag.id +
                                     "' has empty label");
        std::vector<double> fracs(bag.label.size(), 0.0);
        for (std::size_t k = 0; k < bag.label.size(); ++k)
            if (bag.label.bits[k]) fracs[k] = 1.0 / static_cast<double>(pop);
        out[bag.id] = softmax(fracs);
    }
    return out;
}

std::map<std::pair<std::string, int>, double> init_instance_level(const Dataset& dataset) {
    if (dataset.empty()) throw std::invalid_argument("init_instance_level: empty dataset");

    std::map<std::vector<uint8_t>, std::size_t> group_of;  // label pattern -> group id
    std::vector<double> group_count;
    std::size_t total = 0;
    for (const Bag& bag : dataset) {
        auto [it, inserted] = group_of.try_emplace(bag.label.bits, group_count.size());
        if (inserted) group_count.push_back(0.0);
        group_count[it->second] += static_cast<double>(bag.instances.size());
        total += bag.instances.size();
    }

    std::vector<double> fracs(group_count.size());
    for (std::size_t g = 0; g < group_count.size(); ++g)
        fracs[g] = group_count[g] / static_cast<double>(total);
    std::vector<double> weights = softmax(fracs);

    std::map<std::pair<std::string, int>, double> out;
    for (const Bag& bag : dataset) {
        double w = weights[group_of.at(bag.label.bits)];
        for (const Instance& inst : bag.instances) out[{bag.id, inst.index}] = w;
    }
    return out;
}

void initialize_store(WeightStore& store, const Dataset& dataset, InitMode init_mode) {
    if (store.granularity() == Granularity::instance_level) {
        if (init_mode == InitMode::per_sample_freq)
            throw std::invalid_argument(
                "per-sample initialization is not defined for instance-level weights");
        auto weights = init_instance_level(dataset);
        for (const auto& [key, w] : weights) store.set(key.first, key.second, {w});
        return;
    }
    if (init_mode == InitMode::global_freq) {
        std::vector<double> w = init_global_freq(dataset);
        for (const Bag& bag : dataset)
            for (const Instance& inst : bag.instances) store.set(bag.id, inst.index, w);
    } else {
        auto per_bag = init_per_sample_freq(dataset);
        for (const Bag& bag : dataset)
            for (const Instance& inst : bag.instances)
                store.set(bag.id, inst.index, per_bag.at(bag.id));
    }
}

double score(const std::vector<double>& alpha, const LabelVector& t) {
    if (alpha.size() != t.size())
        throw std::invalid_argument("score: alpha/label length mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k)
        if (t.bits[k]) s = std::max(s, std::max(0.0, alpha[k]));
    return s;
}

std::vector<int> sample_instances(const std::vector<double>& scores, int m,
                                  double epsilon, std::mt19937_64& rng) {
    if (scores.empty()) throw std::invalid_argument("sample_instances: empty bag");
    if (m < 1) throw std::invalid_argument("sample_instances: M must be >= 1");

    std::vector<double> mass(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        mass[i] = scores[i] + epsilon;
        total += mass[i];
    }
    if (total <= 0.0) {
        std::fill(mass.begin(), mass.end(), 1.0);
        total = static_cast<double>(mass.size());
    }

    std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(m), scores.size());
    std::vector<int> picked;
    picked.reserve(want);
    // Without replacement by sequential renormalization.
    while (picked.size() < want) {
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t idx = 0;
        double acc = 0.0;
        for (; idx < mass.size(); ++idx) {
            if (mass[idx] <= 0.0) continue;
            acc += mass[idx];
            if (u < acc) break;
        }
        if (idx >= mass.size()) {  // numeric edge at u == total
            idx = mass.size();
            while (idx > 0 && mass[idx - 1] <= 0.0) --idx;
            --idx;
        }
        picked.push_back(static_cast<int>(idx));
        total -= mass[idx];
        mass[idx] = 0.0;
        if (total <= 0.0 && picked.size() < want) {
            // Remaining mass exhausted by rounding; uniform over the rest.
            total = 0.0;
            for (std::size_t i = 0; i < mass.size(); ++i) {
                bool taken = std::find(picked.begin(), picked.end(), static_cast<int>(i)) !=
                             picked.end();
                mass[i] = taken ? 0.0 : 1.0;
                total += mass[i];
            }
        }
    }
    return picked;
}

std::mt19937_64 bag_rng(uint64_t seed, int epoch, const std::string& bag_id) {
    uint64_t h = fnv1a64(&seed, sizeof(seed));
    uint64_t e = static_cast<uint64_t>(epoch);
    h = fnv1a64(&e, sizeof(e), h);
    h = fnv1a64(bag_id.data(), bag_id.size(), h);
    return std::mt19937_64(h);
}

}  // namespace miml
