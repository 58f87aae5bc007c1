#include "miml/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace miml {

namespace {

// Quantize to the on-disk precision so write/read round trips are exact.
double quantize9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::strtod(buf, nullptr);
}

std::string format9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string join_indices(const LabelVector& lv) {
    std::string s;
    for (std::size_t k = 0; k < lv.size(); ++k) {
        if (!lv.bits[k]) continue;
        if (!s.empty()) s += ',';
        s += std::to_string(k);
    }
    return s.empty() ? "-" : s;
}

LabelVector parse_indices(const std::string& s, int num_classes, int line_no) {
    LabelVector lv(static_cast<std::size_t>(num_classes));
    if (s == "-") return lv;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        int k = -1;
        try {
            k = std::stoi(tok);
        } catch (...) {}
        if (k < 0 || k >= num_classes)
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": bad class index '" + tok + "'");
        lv.bits[static_cast<std::size_t>(k)] = 1;
    }
    return lv;
}

void check_config(const SynthConfig& cfg) {
    if (cfg.num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
    if (cfg.feature_dim < cfg.num_classes)
        throw std::invalid_argument("feature_dim must be >= num_classes");
    if (cfg.bags < 0) throw std::invalid_argument("bags must be >= 0");
    if (cfg.instances_min < 1 || cfg.instances_max < cfg.instances_min)
        throw std::invalid_argument("bad instances_per_bag range");
    if (cfg.max_labels < 1 || cfg.max_labels > cfg.num_classes)
        throw std::invalid_argument("max_labels must satisfy 1 <= max_labels <= K");
    if (!(cfg.noise_fraction >= 0.0 && cfg.noise_fraction < 1.0))
        throw std::invalid_argument("noise_fraction must be in [0,1)");
    if (cfg.class_separation < 0.0)
        throw std::invalid_argument("class_separation must be >= 0");
}

}  // namespace

Dataset generate(const SynthConfig& cfg) {
    check_config(cfg);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> n_dist(cfg.instances_min, cfg.instances_max);
    std::uniform_int_distribution<int> nlabel_dist(1, cfg.max_labels);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Dataset bags;
    bags.reserve(static_cast<std::size_t>(cfg.bags));

    std::vector<int> class_order(static_cast<std::size_t>(cfg.num_classes));
    std::iota(class_order.begin(), class_order.end(), 0);

    for (int b = 0; b < cfg.bags; ++b) {
        Bag bag;
        char idbuf[24];
        std::snprintf(idbuf, sizeof(idbuf), "b%05d", b);
        bag.id = idbuf;

        int n = n_dist(rng);
        int n_labels = nlabel_dist(rng);
        std::shuffle(class_order.begin(), class_order.end(), rng);
        std::vector<int> bag_classes(class_order.begin(), class_order.begin() + n_labels);
        std::sort(bag_classes.begin(), bag_classes.end());

        bag.label = LabelVector(static_cast<std::size_t>(cfg.num_classes));
        for (int k : bag_classes) bag.label.bits[static_cast<std::size_t>(k)] = 1;

        std::vector<bool> noisy(static_cast<std::size_t>(n));
        bool any_signal = false;
        for (int j = 0; j < n; ++j) {
            noisy[static_cast<std::size_t>(j)] = unif(rng) < cfg.noise_fraction;
            if (!noisy[static_cast<std::size_t>(j)]) any_signal = true;
        }
        if (!any_signal) noisy[0] = false;

        std::vector<int> signal_idx;
        for (int j = 0; j < n; ++j)
            if (!noisy[static_cast<std::size_t>(j)]) signal_idx.push_back(j);

        // Every bag label is carried by at least one signal instance.
        std::vector<LabelVector> truths(static_cast<std::size_t>(n),
                                        LabelVector(static_cast<std::size_t>(cfg.num_classes)));
        for (std::size_t li = 0; li < bag_classes.size(); ++li) {
            int j = signal_idx[li % signal_idx.size()];
            truths[static_cast<std::size_t>(j)]
                .bits[static_cast<std::size_t>(bag_classes[li])] = 1;
        }
        for (int j : signal_idx) {
            auto& t = truths[static_cast<std::size_t>(j)];
            for (int k : bag_classes)
                if (!t.bits[static_cast<std::size_t>(k)] && unif(rng) < 0.3)
                    t.bits[static_cast<std::size_t>(k)] = 1;
            if (t.popcount() == 0) {
                int pick = bag_classes[static_cast<std::size_t>(
                    std::uniform_int_distribution<int>(
                        0, static_cast<int>(bag_classes.size()) - 1)(rng))];
                t.bits[static_cast<std::size_t>(pick)] = 1;
            }
        }

        for (int j = 0; j < n; ++j) {
            Instance inst;
            inst.index = j;
            inst.truth = truths[static_cast<std::size_t>(j)];
            inst.features.resize(static_cast<std::size_t>(cfg.feature_dim));

            std::vector<double> mean(static_cast<std::size_t>(cfg.feature_dim), 0.0);
            int tpop = inst.truth->popcount();
            if (tpop > 0) {
                for (int k = 0; k < cfg.num_classes; ++k)
                    if (inst.truth->bits[static_cast<std::size_t>(k)])
                        mean[static_cast<std::size_t>(k)] +=
                            cfg.class_separation / static_cast<double>(tpop);
            }
            for (int d = 0; d < cfg.feature_dim; ++d)
                inst.features[static_cast<std::size_t>(d)] =
                    quantize9(mean[static_cast<std::size_t>(d)] + gauss(rng));
            bag.instances.push_back(std::move(inst));
        }
        bags.push_back(std::move(bag));
    }
    return bags;
}

void write_bags(const Dataset& bags, int num_classes, int feature_dim,
                const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "#MIMLBAGS v1\n";
    out << "K=" << num_classes << " D=" << feature_dim << "\n";
    for (const Bag& bag : bags) {
        out << "bag " << bag.id << " labels=" << join_indices(bag.label) << " n="
            << bag.instances.size() << "\n";
        for (const Instance& inst : bag.instances) {
            out << "inst";
            for (double f : inst.features) out << ' ' << format9(f);
            if (inst.truth) out << " truth=" << join_indices(*inst.truth);
            out << "\n";
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

BagFile read_bags(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);

    BagFile bf;
    std::string line;
    int line_no = 0;

    auto fail = [&](const std::string& msg) -> std::runtime_error {
        return std::runtime_error(path + ": line " + std::to_string(line_no) + ": " + msg);
    };

    if (!std::getline(in, line) || line != "#MIMLBAGS v1") {
        line_no = 1;
        throw fail("expected header '#MIMLBAGS v1'");
    }
    line_no = 1;

    if (!std::getline(in, line)) {
        line_no = 2;
        throw fail("missing K/D line");
    }
    line_no = 2;
    if (std::sscanf(line.c_str(), "K=%d D=%d", &bf.num_classes, &bf.feature_dim) != 2 ||
        bf.num_classes < 1 || bf.feature_dim < 1)
        throw fail("malformed K/D line");

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string kw;
        ss >> kw;
        if (kw != "bag") throw fail("expected 'bag' record, got '" + kw + "'");

        Bag bag;
        std::string labels_tok, n_tok;
        ss >> bag.id >> labels_tok >> n_tok;
        if (bag.id.empty() || labels_tok.rfind("labels=", 0) != 0 ||
            n_tok.rfind("n=", 0) != 0)
            throw fail("malformed bag record");
        bag.label = parse_indices(labels_tok.substr(7), bf.num_classes, line_no);
        int n = std::stoi(n_tok.substr(2));
        if (n < 1) throw fail("bag must have n >= 1");

        for (int j = 0; j < n; ++j) {
            if (!std::getline(in, line)) throw fail("unexpected end of file inside bag");
            ++line_no;
            std::stringstream is(line);
            std::string ikw;
            is >> ikw;
            if (ikw != "inst") throw fail("expected 'inst' record");
            Instance inst;
            inst.index = j;
            std::string tok;
            while (is >> tok) {
                if (tok.rfind("truth=", 0) == 0) {
                    inst.truth = parse_indices(tok.substr(6), bf.num_classes, line_no);
                    break;
                }
                char* end = nullptr;
                double v = std::strtod(tok.c_str(), &end);
                if (end == tok.c_str() || *end != '\0')
                    throw fail("bad feature value '" + tok + "'");
                inst.features.push_back(v);
            }
            if (static_cast<int>(inst.features.size()) != bf.feature_dim)
                throw fail("expected " + std::to_string(bf.feature_dim) + " features, got " +
                           std::to_string(inst.features.size()));
            bag.instances.push_back(std::move(inst));
        }
        bf.bags.push_back(std::move(bag));
    }
    return bf;
}

}  // namespace miml
