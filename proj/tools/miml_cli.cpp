#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "miml/engine.hpp"
#include "miml/patching.hpp"
#include "miml/sampler.hpp"
#include "miml/synthgen.hpp"

namespace fs = std::filesystem;
using namespace miml;

namespace {

constexpr const char* kErrPrefix = "miml: error: ";

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

void apply_config_file(TrainConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                     ": expected key=value");
        std::string k = line.substr(0, eq), v = line.substr(eq + 1);
        if (k == "tau") cfg.tau = std::stod(v);
        else if (k == "c") cfg.coexist_c = std::stoi(v);
        else if (k == "lr_theta" || k == "lr") cfg.lr_theta = std::stod(v);
        else if (k == "lr_alpha" || k == "alpha_lr") cfg.lr_alpha_base = std::stod(v);
        else if (k == "batch" || k == "batch_size") cfg.batch_size = std::stoi(v);
        else if (k == "epochs") cfg.epochs = std::stoi(v);
        else if (k == "m" || k == "sample_count") cfg.sample_count = std::stoi(v);
        else if (k == "granularity")
            cfg.granularity = v == "instance" ? Granularity::instance_level
                                              : Granularity::label_level;
        else if (k == "init")
            cfg.init_mode = v == "per-sample" ? InitMode::per_sample_freq
                                              : InitMode::global_freq;
        else if (k == "use_sampler") cfg.use_sampler = v == "1" || v == "true";
        else if (k == "use_dispatcher") cfg.use_dispatcher = v == "1" || v == "true";
        else if (k == "use_coefficients") cfg.use_coefficients = v == "1" || v == "true";
        else if (k == "dispatcher_grad")
            cfg.dispatcher_gradient = v == "full" ? DispatcherGradient::full
                                                  : DispatcherGradient::detached;
        else if (k == "seed") cfg.seed = std::stoull(v);
        else if (k == "prob_clamp") cfg.prob_clamp = std::stod(v);
        else if (k == "sampling_epsilon") cfg.sampling_epsilon = std::stod(v);
        else
            throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                     ": unknown key '" + k + "'");
    }
}

uint64_t default_seed() {
    if (const char* env = std::getenv("MIML_SEED")) return std::stoull(env);
    return 0;
}

struct TrainFlags {
    std::string data, out, config_path;
    std::string granularity = "label", init = "global", dgrad = "detached";
    bool no_sampler = false, no_dispatcher = false, no_coefficients = false;
};

void bind_train_flags(CLI::App* cmd, TrainFlags& f, TrainConfig& cfg) {
    cmd->add_option("--data", f.data, "bag file to train on")->required();
    cmd->add_option("--out", f.out, "output directory")->required();
    cmd->add_option("--config", f.config_path, "key=value config file (flags win)");
    cmd->add_option("--seed", cfg.seed, "RNG seed");
    cmd->add_option("--epochs", cfg.epochs, "training epochs");
    cmd->add_option("--lr", cfg.lr_theta, "predictor learning rate");
    cmd->add_option("--alpha-lr", cfg.lr_alpha_base, "base weight learning rate");
    cmd->add_option("--batch", cfg.batch_size, "batch size in bags");
    cmd->add_option("--c", cfg.coexist_c, "max coexisting labels parameter C");
    cmd->add_option("--tau", cfg.tau, "aggregation threshold");
    cmd->add_option("--m", cfg.sample_count, "instances sampled per bag (<=0: all)");
    cmd->add_option("--granularity", f.granularity, "weight granularity: label|instance");
    cmd->add_option("--init", f.init, "weight init: global|per-sample");
    cmd->add_option("--dispatcher-grad", f.dgrad, "dispatcher gradient: detached|full");
    cmd->add_flag("--no-sampler", f.no_sampler, "disable confidence-weighted sampling");
    cmd->add_flag("--no-dispatcher", f.no_dispatcher, "disable the pseudo-label dispatcher");
    cmd->add_flag("--no-coefficients", f.no_coefficients, "disable label-aware coefficients");
}

TrainConfig resolve_train_config(CLI::App* cmd, const TrainFlags& f, TrainConfig flags_cfg) {
    TrainConfig cfg = flags_cfg;
    if (!f.config_path.empty()) {
        TrainConfig file_cfg;
        file_cfg.seed = default_seed();
        apply_config_file(file_cfg, f.config_path);
        // Start from file values, then re-apply any flag explicitly given.
        TrainConfig merged = file_cfg;
        auto took = [&](const std::string& name) { return cmd->count(name) > 0; };
        if (took("--seed")) merged.seed = flags_cfg.seed;
        if (took("--epochs")) merged.epochs = flags_cfg.epochs;
        if (took("--lr")) merged.lr_theta = flags_cfg.lr_theta;
        if (took("--alpha-lr")) merged.lr_alpha_base = flags_cfg.lr_alpha_base;
        if (took("--batch")) merged.batch_size = flags_cfg.batch_size;
        if (took("--c")) merged.coexist_c = flags_cfg.coexist_c;
        if (took("--tau")) merged.tau = flags_cfg.tau;
        if (took("--m")) merged.sample_count = flags_cfg.sample_count;
        cfg = merged;
    } else if (cmd->count("--seed") == 0) {
        cfg.seed = default_seed();
    }
    if (cmd->count("--granularity") > 0 || f.config_path.empty())
        cfg.granularity = f.granularity == "instance" ? Granularity::instance_level
                                                      : Granularity::label_level;
    if (cmd->count("--init") > 0 || f.config_path.empty())
        cfg.init_mode = f.init == "per-sample" ? InitMode::per_sample_freq
                                               : InitMode::global_freq;
    if (cmd->count("--dispatcher-grad") > 0 || f.config_path.empty())
        cfg.dispatcher_gradient = f.dgrad == "full" ? DispatcherGradient::full
                                                    : DispatcherGradient::detached;
    if (f.no_sampler) cfg.use_sampler = false;
    if (f.no_dispatcher) cfg.use_dispatcher = false;
    if (f.no_coefficients) cfg.use_coefficients = false;
    return cfg;
}

int run_generate(const SynthConfig& scfg, const std::string& out_path) {
    Dataset bags = generate(scfg);
    write_bags(bags, scfg.num_classes, scfg.feature_dim, out_path);

    int true_max = 0;
    for (const Bag& b : bags) true_max = std::max(true_max, b.label.popcount());

    std::ofstream man(out_path + ".manifest");
    man << "k=" << scfg.num_classes << "\n"
        << "d=" << scfg.feature_dim << "\n"
        << "bags=" << scfg.bags << "\n"
        << "instances_min=" << scfg.instances_min << "\n"
        << "instances_max=" << scfg.instances_max << "\n"
        << "max_labels=" << scfg.max_labels << "\n"
        << "noise_fraction=" << scfg.noise_fraction << "\n"
        << "class_separation=" << scfg.class_separation << "\n"
        << "seed=" << scfg.seed << "\n"
        << "true_max_coexisting=" << true_max << "\n";
    std::cout << "wrote " << bags.size() << " bags to " << out_path << "\n";
    return 0;
}

int run_train(const std::string& data, const std::string& out_dir, const TrainConfig& cfg) {
    BagFile bf = read_bags(data);
    TrainState st = init_state(bf.bags, cfg, bf.num_classes, bf.feature_dim);

    fs::create_directories(out_dir);
    std::ofstream log(fs::path(out_dir) / "train.log");
    for (int e = 0; e < cfg.epochs; ++e) {
        auto t0 = std::chrono::steady_clock::now();
        double loss = train_epoch(bf.bags, st);
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
        char row[128];
        std::snprintf(row, sizeof(row), "epoch=%d loss=%.9f wall_ms=%lld\n", e, loss,
                      static_cast<long long>(ms));
        log << row;
        std::cout << row;
    }
    save_checkpoint(st, (fs::path(out_dir) / "checkpoint.ckpt").string());
    std::cout << "checkpoint written to " << (fs::path(out_dir) / "checkpoint.ckpt").string()
              << "\n";
    return 0;
}

void print_report(const MetricsReport& r, std::ostream& os) {
    os << r.to_kv_lines();
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "\n  %-10s %-10s %-10s %-10s\n  %-10.4f %-10.4f %-10.4f %-10.4f\n",
                  "F1-micro", "F1-macro", "SubsetAcc", "mAP", r.f1_micro, r.f1_macro,
                  r.subset_accuracy, r.map);
    os << buf;
}

int run_eval(const std::string& data, const std::string& ckpt, const std::string& out) {
    BagFile bf = read_bags(data);
    TrainState st = load_checkpoint(ckpt);
    if (st.num_classes != bf.num_classes || st.feature_dim != bf.feature_dim)
        throw std::runtime_error("checkpoint dimensions do not match dataset");
    MetricsReport r = evaluate(bf.bags, st, st.config.tau);
    print_report(r, std::cout);
    if (!out.empty()) {
        std::ofstream f(out);
        f << r.to_kv_lines();
    }
    return 0;
}

struct SweepRow {
    std::string name;
    std::vector<MetricsReport> reports;
};

void print_sweep(const std::vector<SweepRow>& rows) {
    auto mean_std = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        s = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
        return std::pair<double, double>(m, s);
    };
    std::printf("%-28s %-16s %-16s %-16s %-16s %-16s\n", "config", "f1_micro", "f1_macro",
                "subset_acc", "map", "overall");
    for (const SweepRow& row : rows) {
        std::vector<double> mi, ma, ac, mp, ov;
        for (const MetricsReport& r : row.reports) {
            mi.push_back(r.f1_micro);
            ma.push_back(r.f1_macro);
            ac.push_back(r.subset_accuracy);
            mp.push_back(r.map);
            ov.push_back(r.overall());
        }
        auto pmi = mean_std(mi), pma = mean_std(ma), pac = mean_std(ac),
             pmp = mean_std(mp), pov = mean_std(ov);
        std::printf("%-28s %.3f±%.3f      %.3f±%.3f      %.3f±%.3f      %.3f±%.3f      "
                    "%.3f±%.3f\n",
                    row.name.c_str(), pmi.first, pmi.second, pma.first, pma.second,
                    pac.first, pac.second, pmp.first, pmp.second, pov.first, pov.second);
    }
}

int run_ablate(const std::string& train_path, const std::string& test_path,
               const std::vector<int>& seeds, TrainConfig base,
               const std::vector<int>& c_sweep) {
    BagFile train_bf = read_bags(train_path);
    BagFile test_bf = read_bags(test_path);

    struct Variant {
        std::string name;
        TrainConfig cfg;
    };
    std::vector<Variant> variants;
    if (!c_sweep.empty()) {
        for (int c : c_sweep) {
            TrainConfig cfg = base;
            cfg.coexist_c = c;
            variants.push_back({"C=" + std::to_string(c), cfg});
        }
    } else {
        TrainConfig full = base;
        TrainConfig ns = base;
        ns.use_sampler = false;
        TrainConfig nd = base;
        nd.use_dispatcher = false;
        TrainConfig nc = base;
        nc.use_coefficients = false;
        variants.push_back({"full", full});
        variants.push_back({"no-sampler", ns});
        variants.push_back({"no-dispatcher", nd});
        variants.push_back({"no-coefficients", nc});
    }

    for (const Variant& v : variants)
        if (v.cfg.granularity == Granularity::instance_level && v.cfg.use_dispatcher)
            throw std::runtime_error(
                "instance-level granularity is not able to implement the probabilistic "
                "pseudo-label dispatcher; drop --granularity instance or use --no-dispatcher");

    std::vector<SweepRow> rows;
    for (const Variant& v : variants) {
        SweepRow row;
        row.name = v.name;
        for (int seed : seeds) {
            TrainConfig cfg = v.cfg;
            cfg.seed = static_cast<uint64_t>(seed);
            TrainState st = init_state(train_bf.bags, cfg, train_bf.num_classes,
                                       train_bf.feature_dim);
            for (int e = 0; e < cfg.epochs; ++e) train_epoch(train_bf.bags, st);
            row.reports.push_back(evaluate(test_bf.bags, st, cfg.tau));
        }
        rows.push_back(std::move(row));
    }
    print_sweep(rows);
    return 0;
}

int run_featurize(const std::string& manifest, int num_classes, int patch_size,
                  const std::string& policy, int bins, const std::string& out) {
    std::ifstream in(manifest);
    if (!in) throw std::runtime_error("cannot open manifest " + manifest);

    PatchSpec spec;
    spec.size = patch_size;
    spec.policy = policy == "zero-pad" ? PartialPolicy::zero_pad
                                       : PartialPolicy::drop_partial;

    Dataset bags;
    int feature_dim = -1;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string id, path, labels_tok;
        ss >> id >> path >> labels_tok;
        if (id.empty() || path.empty() || labels_tok.rfind("labels=", 0) != 0)
            throw std::runtime_error(manifest + ": line " + std::to_string(line_no) +
                                     ": expected '<id> <path> labels=<indices>'");
        Bag bag;
        bag.id = id;
        bag.label = LabelVector(static_cast<std::size_t>(num_classes));
        for (int k : parse_int_list(labels_tok.substr(7))) {
            if (k < 0 || k >= num_classes)
                throw std::runtime_error(manifest + ": line " + std::to_string(line_no) +
                                         ": class index out of range");
            bag.label.bits[static_cast<std::size_t>(k)] = 1;
        }
        RasterImage img = read_pnm(path);
        int j = 0;
        for (const RasterImage& patch : partition(img, spec)) {
            Instance inst;
            inst.index = j++;
            inst.features = featurize(patch, bins);
            bag.instances.push_back(std::move(inst));
        }
        if (feature_dim < 0) feature_dim = static_cast<int>(bag.instances[0].features.size());
        else if (feature_dim != static_cast<int>(bag.instances[0].features.size()))
            throw std::runtime_error(manifest + ": line " + std::to_string(line_no) +
                                     ": inconsistent feature dimension (mixed channel counts?)");
        bags.push_back(std::move(bag));
    }
    if (bags.empty()) throw std::runtime_error(manifest + ": no images listed");
    write_bags(bags, num_classes, feature_dim, out);
    std::cout << "wrote " << bags.size() << " bags (D=" << feature_dim << ") to " << out
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-paced multi-instance multi-label trainer"};
    app.require_subcommand(1);

    // generate
    SynthConfig scfg;
    std::string gen_out;
    auto* gen = app.add_subcommand("generate", "generate a synthetic bag dataset");
    gen->add_option("--k", scfg.num_classes, "number of classes");
    gen->add_option("--d", scfg.feature_dim, "feature dimension");
    gen->add_option("--bags", scfg.bags, "number of bags");
    gen->add_option("--inst-min", scfg.instances_min, "min instances per bag");
    gen->add_option("--inst-max", scfg.instances_max, "max instances per bag");
    gen->add_option("--max-labels", scfg.max_labels, "max labels per bag");
    gen->add_option("--noise", scfg.noise_fraction, "fraction of signal-free instances");
    gen->add_option("--separation", scfg.class_separation, "class prototype separation");
    gen->add_option("--seed", scfg.seed, "RNG seed");
    gen->add_option("--out", gen_out, "output bag file")->required();

    // train
    TrainFlags tf;
    TrainConfig tcfg;
    auto* train = app.add_subcommand("train", "train on a bag dataset");
    bind_train_flags(train, tf, tcfg);

    // eval
    std::string ev_data, ev_ckpt, ev_out;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->add_option("--data", ev_data, "bag file to evaluate on")->required();
    ev->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
    ev->add_option("--out", ev_out, "optional metrics output file");

    // ablate
    TrainFlags af;
    TrainConfig acfg;
    std::string ab_test, ab_seeds = "1,2,3,4,5", ab_csweep;
    auto* ab = app.add_subcommand("ablate", "component / C sweeps across seeds");
    bind_train_flags(ab, af, acfg);
    ab->get_option("--out")->required(false);
    ab->add_option("--test", ab_test, "held-out bag file")->required();
    ab->add_option("--seeds", ab_seeds, "comma-separated seed list");
    ab->add_option("--c-sweep", ab_csweep, "comma-separated C values (replaces the grid)");

    // featurize
    std::string fz_manifest, fz_out, fz_policy = "drop-partial";
    int fz_k = 8, fz_patch = 448, fz_bins = 8;
    auto* fz = app.add_subcommand("featurize", "patch raster images into a bag file");
    fz->add_option("--images", fz_manifest, "manifest: '<id> <path> labels=<indices>'")
        ->required();
    fz->add_option("--k", fz_k, "number of classes");
    fz->add_option("--patch-size", fz_patch, "patch size in pixels");
    fz->add_option("--policy", fz_policy, "partial patch policy: drop-partial|zero-pad");
    fz->add_option("--bins", fz_bins, "histogram bins per channel");
    fz->add_option("--out", fz_out, "output bag file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_generate(scfg, gen_out);
        if (train->parsed())
            return run_train(tf.data, tf.out, resolve_train_config(train, tf, tcfg));
        if (ev->parsed()) return run_eval(ev_data, ev_ckpt, ev_out);
        if (ab->parsed()) {
            TrainConfig cfg = resolve_train_config(ab, af, acfg);
            std::vector<int> cs =
                ab_csweep.empty() ? std::vector<int>{} : parse_int_list(ab_csweep);
            return run_ablate(af.data, ab_test, parse_int_list(ab_seeds), cfg, cs);
        }
        if (fz->parsed())
            return run_featurize(fz_manifest, fz_k, fz_patch, fz_policy, fz_bins, fz_out);
    } catch (const std::exception& e) {
        std::cerr << kErrPrefix << e.what() << "\n";
        return 1;
    }
    return 0;
}
