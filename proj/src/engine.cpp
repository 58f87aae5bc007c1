#include "miml/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "miml/dispatcher.hpp"
#include "miml/loss.hpp"
#include "miml/sampler.hpp"

namespace miml {

namespace {

std::string format_hex(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

std::string config_canonical(const TrainConfig& c) {
    std::ostringstream os;
    os << "tau=" << format_hex(c.tau) << ";c=" << c.coexist_c << ";lr_theta="
       << format_hex(c.lr_theta) << ";lr_alpha=" << format_hex(c.lr_alpha_base)
       << ";batch=" << c.batch_size << ";epochs=" << c.epochs << ";m=" << c.sample_count
       << ";gran=" << (c.granularity == Granularity::label_level ? "label" : "instance")
       << ";init=" << (c.init_mode == InitMode::global_freq ? "global" : "per_sample")
       << ";sampler=" << c.use_sampler << ";dispatcher=" << c.use_dispatcher
       << ";coeff=" << c.use_coefficients
       << ";dgrad=" << (c.dispatcher_gradient == DispatcherGradient::detached ? "detached" : "full")
       << ";seed=" << c.seed << ";clamp=" << format_hex(c.prob_clamp)
       << ";eps=" << format_hex(c.sampling_epsilon) << ";hidden=";
    for (std::size_t i = 0; i < c.hidden_layers.size(); ++i)
        os << (i ? "," : "") << c.hidden_layers[i];
    return os.str();
}

uint64_t fnv1a64_str(const std::string& s) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

void validate_combo(const TrainConfig& cfg) {
    if (cfg.granularity == Granularity::instance_level && cfg.use_dispatcher)
        throw std::invalid_argument(
            "instance-level weights cannot drive the pseudo-label dispatcher; "
            "use --no-dispatcher or label-level granularity");
    if (cfg.granularity == Granularity::instance_level &&
        cfg.init_mode == InitMode::per_sample_freq)
        throw std::invalid_argument(
            "per-sample initialization is not defined for instance-level weights");
}

}  // namespace

double label_aware_lambda(const LabelVector& t, int coexist_c, int num_classes) {
    if (coexist_c < 1 || coexist_c > num_classes)
        throw std::invalid_argument("label_aware_lambda: C must satisfy 1 <= C <= K");
    int pop = t.popcount();
    if (pop < 1) throw std::invalid_argument("label_aware_lambda: empty label");
    return static_cast<double>(pop) * coexist_c / static_cast<double>(num_classes);
}

Aggregate aggregate(const std::vector<Prediction>& instance_preds, double tau) {
    if (instance_preds.empty())
        throw std::invalid_argument("aggregate: no instance predictions");
    std::size_t num_classes = instance_preds.front().probs.size();
    Aggregate out;
    out.scores.assign(num_classes, 0.0);
    out.labels = LabelVector(num_classes);
    for (const Prediction& p : instance_preds) {
        if (p.probs.size() != num_classes)
            throw std::invalid_argument("aggregate: inconsistent class counts");
        for (std::size_t k = 0; k < num_classes; ++k)
            out.scores[k] = std::max(out.scores[k], p.probs[k]);
    }
    for (std::size_t k = 0; k < num_classes; ++k)
        out.labels.bits[k] = out.scores[k] > tau ? 1 : 0;
    return out;
}

TrainState init_state(const Dataset& dataset, const TrainConfig& cfg, int num_classes,
                      int feature_dim) {
    cfg.validate(num_classes);
    validate_combo(cfg);
    if (dataset.empty()) throw std::invalid_argument("init_state: empty dataset");

    TrainState st;
    st.config = cfg;
    st.num_classes = num_classes;
    st.feature_dim = feature_dim;

    std::vector<int> layers;
    layers.push_back(feature_dim);
    for (int h : cfg.hidden_layers) layers.push_back(h);
    layers.push_back(num_classes);
    st.predictor = Mlp(layers, cfg.prob_clamp);
    std::mt19937_64 wrng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    st.predictor.init_weights(wrng);

    st.weights = WeightStore(cfg.granularity, num_classes);
    initialize_store(st.weights, dataset, cfg.init_mode);
    return st;
}

double train_epoch(const Dataset& dataset, TrainState& state) {
    const TrainConfig& cfg = state.config;
    const int epoch = state.epoch;

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng = bag_rng(cfg.seed, epoch, "__shuffle__");
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    std::vector<double> t_as_double;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
        std::size_t stop =
            std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));

        std::vector<double> grad_sum(state.predictor.theta().size(), 0.0);
        std::size_t grad_count = 0;

        for (std::size_t bi = start; bi < stop; ++bi) {
            const Bag& bag = dataset[order[bi]];
            if (bag.label.popcount() == 0)
                throw std::runtime_error("train_epoch: bag '" + bag.id +
                                         "' has no positive label");
            double lam = cfg.use_coefficients
                             ? label_aware_lambda(bag.label, cfg.coexist_c, state.num_classes)
                             : 1.0;

            std::vector<double> scores(bag.instances.size(), 0.0);
            if (cfg.use_sampler)
                for (std::size_t j = 0; j < bag.instances.size(); ++j)
                    scores[j] = score(state.weights.get(bag.id, bag.instances[j].index),
                                      bag.label);

            int m = cfg.sample_count <= 0 ? static_cast<int>(bag.instances.size())
                                          : cfg.sample_count;
            std::mt19937_64 rng = bag_rng(cfg.seed, epoch, bag.id);
            std::vector<int> picked =
                sample_instances(scores, m, cfg.sampling_epsilon, rng);

            for (int j : picked) {
                const Instance& inst = bag.instances[static_cast<std::size_t>(j)];
                std::vector<double> alpha = state.weights.get(bag.id, inst.index);
                Prediction pred = state.predictor.predict(inst.features);

                std::vector<double> xi;
                std::vector<std::vector<double>> jac;
                const std::vector<std::vector<double>>* jac_ptr = nullptr;
                if (cfg.use_dispatcher) {
                    PseudoLabel pl = dispatch(alpha, bag.label);
                    xi = std::move(pl.xi_norm);
                    if (cfg.dispatcher_gradient == DispatcherGradient::full) {
                        jac = dispatch_jacobian(alpha, bag.label);
                        jac_ptr = &jac;
                    }
                } else {
                    xi.assign(bag.label.size(), 0.0);
                    for (std::size_t k = 0; k < bag.label.size(); ++k)
                        xi[k] = bag.label.bits[k] ? 1.0 : 0.0;
                }

                DispatcherGradient mode = cfg.use_dispatcher ? cfg.dispatcher_gradient
                                                             : DispatcherGradient::detached;
                // The store may hold negative weights (suppressed instances);
                // the loss weight floors at zero so a suppressed instance stops
                // contributing instead of inverting the predictor gradient.
                std::vector<double> alpha_eff = alpha;
                for (double& a : alpha_eff) a = std::max(0.0, a);
                SelfPacedGrads g =
                    selfpaced_grads(alpha_eff, xi, pred.probs, mode, jac_ptr);

                loss_sum += selfpaced_loss(alpha_eff, xi, pred.probs);
                ++loss_count;

                std::vector<double> theta_grad =
                    state.predictor.backward(inst.features, g.d_yhat);
                for (std::size_t p = 0; p < grad_sum.size(); ++p)
                    grad_sum[p] += theta_grad[p];
                ++grad_count;

                state.weights.update(bag.id, inst.index, g.d_alpha,
                                     cfg.lr_alpha_base * lam);
            }
        }

        if (grad_count > 0) {
            for (double& v : grad_sum) v /= static_cast<double>(grad_count);
            adam_step(state.adam, state.predictor.theta(), grad_sum, cfg.lr_theta);
        }
    }

    state.epoch += 1;
    return loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
}

MetricsReport evaluate(const Dataset& dataset, const TrainState& state, double tau) {
    if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
    std::vector<LabelVector> truths, preds;
    std::vector<std::vector<double>> scores;
    for (const Bag& bag : dataset) {
        std::vector<Prediction> ip;
        ip.reserve(bag.instances.size());
        for (const Instance& inst : bag.instances)
            ip.push_back(state.predictor.predict(inst.features));
        Aggregate agg = aggregate(ip, tau);
        truths.push_back(bag.label);
        preds.push_back(agg.labels);
        scores.push_back(std::move(agg.scores));
    }
    return compute_metrics(truths, preds, scores);
}

uint64_t config_hash(const TrainConfig& cfg) {
    return fnv1a64_str(config_canonical(cfg));
}

void save_checkpoint(const TrainState& state, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "#MIMLCKPT v1\n";
    out << "epoch=" << state.epoch << "\n";
    out << "seed=" << state.config.seed << "\n";
    char hashbuf[32];
    std::snprintf(hashbuf, sizeof(hashbuf), "%016llx",
                  static_cast<unsigned long long>(config_hash(state.config)));
    out << "config_hash=" << hashbuf << "\n";
    out << "config " << config_canonical(state.config) << "\n";
    out << "K=" << state.num_classes << " D=" << state.feature_dim << "\n";
    out << "layers=";
    const auto& layers = state.predictor.layer_sizes();
    for (std::size_t i = 0; i < layers.size(); ++i) out << (i ? "," : "") << layers[i];
    out << "\n";

    auto dump = [&](const char* tag, const std::vector<double>& v) {
        out << tag << " " << v.size();
        for (double x : v) out << ' ' << format_hex(x);
        out << "\n";
    };
    dump("theta", state.predictor.theta());
    dump("adam_m", state.adam.m);
    dump("adam_v", state.adam.v);
    out << "adam_step=" << state.adam.step << "\n";

    out << "weights " << state.weights.size() << "\n";
    for (const auto& [key, vals] : state.weights.entries()) {
        out << "w " << key.first << " " << key.second;
        for (double x : vals) out << ' ' << format_hex(x);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

TrainState load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "#MIMLCKPT v1")
        throw std::runtime_error(path + ": not a v1 checkpoint");

    TrainState st;
    std::string config_line, layers_line;
    uint64_t stored_hash = 0;

    auto expect_kv = [&](const std::string& key) -> std::string {
        if (!std::getline(in, line) || line.rfind(key + "=", 0) != 0)
            throw std::runtime_error(path + ": malformed checkpoint, expected " + key);
        return line.substr(key.size() + 1);
    };

    st.epoch = std::stoi(expect_kv("epoch"));
    st.config.seed = std::stoull(expect_kv("seed"));
    stored_hash = std::stoull(expect_kv("config_hash"), nullptr, 16);

    if (!std::getline(in, config_line) || config_line.rfind("config ", 0) != 0)
        throw std::runtime_error(path + ": missing config line");
    config_line = config_line.substr(7);

    if (!std::getline(in, line) ||
        std::sscanf(line.c_str(), "K=%d D=%d", &st.num_classes, &st.feature_dim) != 2)
        throw std::runtime_error(path + ": missing K/D line");

    if (!std::getline(in, layers_line) || layers_line.rfind("layers=", 0) != 0)
        throw std::runtime_error(path + ": missing layers line");

    // Parse the canonical config back into TrainConfig.
    {
        TrainConfig& c = st.config;
        std::stringstream ss(config_line);
        std::string tok;
        while (std::getline(ss, tok, ';')) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
            if (k == "tau") c.tau = std::strtod(v.c_str(), nullptr);
            else if (k == "c") c.coexist_c = std::stoi(v);
            else if (k == "lr_theta") c.lr_theta = std::strtod(v.c_str(), nullptr);
            else if (k == "lr_alpha") c.lr_alpha_base = std::strtod(v.c_str(), nullptr);
            else if (k == "batch") c.batch_size = std::stoi(v);
            else if (k == "epochs") c.epochs = std::stoi(v);
            else if (k == "m") c.sample_count = std::stoi(v);
            else if (k == "gran")
                c.granularity = v == "label" ? Granularity::label_level
                                             : Granularity::instance_level;
            else if (k == "init")
                c.init_mode = v == "global" ? InitMode::global_freq
                                            : InitMode::per_sample_freq;
            else if (k == "sampler") c.use_sampler = v == "1";
            else if (k == "dispatcher") c.use_dispatcher = v == "1";
            else if (k == "coeff") c.use_coefficients = v == "1";
            else if (k == "dgrad")
                c.dispatcher_gradient = v == "detached" ? DispatcherGradient::detached
                                                        : DispatcherGradient::full;
            else if (k == "seed") c.seed = std::stoull(v);
            else if (k == "clamp") c.prob_clamp = std::strtod(v.c_str(), nullptr);
            else if (k == "eps") c.sampling_epsilon = std::strtod(v.c_str(), nullptr);
            else if (k == "hidden") {
                c.hidden_layers.clear();
                std::stringstream hs(v);
                std::string h;
                while (std::getline(hs, h, ',')) c.hidden_layers.push_back(std::stoi(h));
            }
        }
    }
    if (config_hash(st.config) != stored_hash)
        throw std::runtime_error(path + ": config hash mismatch");

    std::vector<int> layers;
    {
        std::stringstream ls(layers_line.substr(7));
        std::string h;
        while (std::getline(ls, h, ',')) layers.push_back(std::stoi(h));
    }
    st.predictor = Mlp(layers, st.config.prob_clamp);

    auto read_vec = [&](const char* tag) {
        if (!std::getline(in, line))
            throw std::runtime_error(path + ": truncated checkpoint at " + tag);
        std::stringstream ss(line);
        std::string got;
        std::size_t n;
        ss >> got >> n;
        if (got != tag)
            throw std::runtime_error(path + ": expected '" + tag + "', got '" + got + "'");
        std::vector<double> v(n);
        std::string x;
        for (std::size_t i = 0; i < n; ++i) {
            ss >> x;
            v[i] = std::strtod(x.c_str(), nullptr);
        }
        return v;
    };
    st.predictor.theta() = read_vec("theta");
    if (st.predictor.theta().size() != Mlp(layers).theta().size())
        throw std::runtime_error(path + ": theta size mismatch");
    st.adam.m = read_vec("adam_m");
    st.adam.v = read_vec("adam_v");
    st.adam.step = std::stoll(expect_kv("adam_step"));

    if (!std::getline(in, line) || line.rfind("weights ", 0) != 0)
        throw std::runtime_error(path + ": missing weights section");
    std::size_t count = std::stoull(line.substr(8));
    st.weights = WeightStore(st.config.granularity, st.num_classes);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error(path + ": truncated weight entry");
        std::stringstream ss(line);
        std::string tag, bag_id, x;
        int j;
        ss >> tag >> bag_id >> j;
        if (tag != "w") throw std::runtime_error(path + ": malformed weight entry");
        std::vector<double> vals;
        while (ss >> x) vals.push_back(std::strtod(x.c_str(), nullptr));
        st.weights.set(bag_id, j, std::move(vals));
    }
    return st;
}

}  // namespace miml
