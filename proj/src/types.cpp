#include "miml/types.hpp"

#include <algorithm>
#include <cmath>

namespace miml {

void WeightStore::set(const std::string& bag_id, int j, std::vector<double> value) {
    std::size_t want = granularity_ == Granularity::label_level
                           ? static_cast<std::size_t>(num_classes_)
                           : 1u;
    if (value.size() != want)
        throw std::invalid_argument("WeightStore::set: value size " +
                                    std::to_string(value.size()) + ", expected " +
                                    std::to_string(want));
    for (double& v : value) v = std::max(lower_clip_, v);
    values_[{bag_id, j}] = std::move(value);
}

std::vector<double> WeightStore::get(const std::string& bag_id, int j) const {
    auto it = values_.find({bag_id, j});
    if (it == values_.end())
        throw std::out_of_range("WeightStore: no entry for bag '" + bag_id +
                                "' instance " + std::to_string(j));
    if (granularity_ == Granularity::label_level) return it->second;
    return std::vector<double>(static_cast<std::size_t>(num_classes_), it->second[0]);
}

void WeightStore::update(const std::string& bag_id, int j,
                         const std::vector<double>& gradient, double eta) {
    if (eta <= 0.0) throw std::invalid_argument("WeightStore::update: eta must be > 0");
    for (double g : gradient)
        if (!std::isfinite(g))
            throw std::runtime_error("WeightStore::update: non-finite gradient for bag '" +
                                     bag_id + "' instance " + std::to_string(j));
    auto it = values_.find({bag_id, j});
    if (it == values_.end())
        throw std::out_of_range("WeightStore: no entry for bag '" + bag_id +
                                "' instance " + std::to_string(j));
    if (granularity_ == Granularity::label_level) {
        if (gradient.size() != static_cast<std::size_t>(num_classes_))
            throw std::invalid_argument("WeightStore::update: gradient size mismatch");
        for (std::size_t k = 0; k < it->second.size(); ++k)
            it->second[k] = std::max(lower_clip_, it->second[k] - eta * gradient[k]);
    } else {
        double mean = 0.0;
        for (double g : gradient) mean += g;
        mean /= static_cast<double>(gradient.size());
        it->second[0] = std::max(lower_clip_, it->second[0] - eta * mean);
    }
}

}  // namespace miml
