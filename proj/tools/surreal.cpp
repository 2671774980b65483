// Command-line entry point: gen, train, eval, verify, bench.

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "surreal/bench.hpp"
#include "surreal/checkpoint.hpp"
#include "surreal/config.hpp"
#include "surreal/data.hpp"
#include "surreal/train.hpp"
#include "surreal/verify.hpp"

namespace fs = std::filesystem;
using namespace surreal;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename F>
auto io(F&& f) {
    try {
        return f();
    } catch (const std::runtime_error& e) {
        throw IoError(e.what());
    }
}

double parse_snr(const std::string& s) {
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError("--snr: expected a number or inf, got '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw UsageError("--snr: expected a number or inf, got '" + s + "'");
    return v;
}

// ---- gen ------------------------------------------------------------------

struct GenArgs {
    std::string kind;
    std::size_t classes = 4;
    std::vector<std::string> modulations;
    std::size_t per_class = 100;
    std::string snr = "10";
    std::size_t length = 128;
    std::size_t height = 32;
    std::size_t width = 32;
    double noise = 0.1;
    std::uint64_t seed = 7;
    std::uint64_t layout_seed = 1234;
    std::string out;
};

Dataset generate(const GenArgs& a);

int run_gen(const GenArgs& a) {
    Dataset data;
    try {
        data = generate(a);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    io([&] {
        write_cvds(a.out, data);
        return 0;
    });
    nlohmann::ordered_json j;
    j["kind"] = a.kind;
    j["path"] = a.out;
    j["n"] = data.size();
    j["shape"] = {data.shape.c, data.shape.h, data.shape.w};
    j["classes"] = data.num_classes;
    j["bytes"] = cvds_file_size(data.size(), data.shape);
    std::cout << j.dump() << "\n";
    return kOk;
}

Dataset generate(const GenArgs& a) {
    Dataset data;
    if (a.kind == "modulation") {
        ModulationSpec spec;
        if (!a.modulations.empty()) {
            spec.classes.clear();
            for (const auto& m : a.modulations) spec.classes.push_back(parse_modulation(m));
        } else {
            if (a.classes < 1 || a.classes > spec.classes.size()) {
                throw UsageError("--classes must be between 1 and 4 for modulation data");
            }
            spec.classes.resize(a.classes);
        }
        spec.per_class = a.per_class;
        spec.snr_db = parse_snr(a.snr);
        spec.length = a.length;
        spec.seed = a.seed;
        data = gen_modulation(spec);
    } else {
        if (!a.modulations.empty()) throw UsageError("--modulations applies to --kind modulation only");
        BlobSpec spec;
        spec.classes = a.classes;
        spec.per_class = a.per_class;
        spec.height = a.height;
        spec.width = a.width;
        spec.noise = a.noise;
        spec.seed = a.seed;
        spec.layout_seed = a.layout_seed;
        data = gen_blobs(spec);
    }
    return data;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string config_path;
    std::string resume;
    bool quiet = false;
};

int run_train(CLI::App& cmd, const TrainArgs& a, RunConfig flags) {
    // Precedence: flags, then --config, then the resumed checkpoint's settings.
    std::optional<LoadedCheckpoint> ck;
    if (!a.resume.empty()) ck.emplace(io([&] { return load_checkpoint(a.resume); }));
    RunConfig run = ck ? ck->run : RunConfig{};
    if (!a.config_path.empty()) {
        const auto text = io([&] {
            std::ifstream f(a.config_path);
            if (!f) throw std::runtime_error("cannot open " + a.config_path);
            std::stringstream ss;
            ss << f.rdbuf();
            return ss.str();
        });
        try {
            run = apply_key_values(parse_key_values(text), run);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    // Flags given on the command line override the file.
    KeyValues overrides;
    auto given = [&](const char* opt) { return cmd.count(opt) > 0; };
    if (given("--arch")) overrides["arch"] = flags.arch;
    if (given("--data")) overrides["dataset"] = flags.dataset;
    if (given("--test")) overrides["test_dataset"] = flags.test_dataset;
    if (given("--out")) overrides["out_dir"] = flags.out_dir;
    if (given("--epochs")) overrides["epochs"] = std::to_string(flags.epochs);
    if (given("--batch")) overrides["batch"] = std::to_string(flags.batch);
    if (given("--optimizer")) overrides["optimizer"] = flags.optimizer;
    if (given("--preset")) overrides["preset"] = flags.preset;
    if (given("--tr-rank")) overrides["tr_rank"] = std::to_string(flags.tr_rank);
    if (given("--dist-sets")) overrides["dist_sets"] = std::to_string(flags.dist_sets);
    if (given("--seed")) overrides["seed"] = std::to_string(flags.seed);
    if (given("--trelu")) overrides["trelu"] = flags.trelu ? "true" : "false";
    try {
        run = apply_key_values(overrides, run);
        if (given("--lr")) run.lr = flags.lr;
        if (given("--clip-norm")) run.clip_norm = flags.clip_norm;
        if (given("--logit-init")) run.logit_init = flags.logit_init;
        run.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (run.dataset.empty()) throw UsageError("train: no dataset (use --data or dataset = ... in --config)");

    const Dataset train = io([&] { return read_cvds(run.dataset); });
    Dataset test;
    if (!run.test_dataset.empty()) test = io([&] { return read_cvds(run.test_dataset); });

    std::size_t done = 0;
    ArchConfig arch = run.arch_config(train.shape, std::max<std::size_t>(train.num_classes, 2));
    std::optional<Model> model;
    if (ck) {
        if (ck->arch.input != train.shape) {
            throw std::invalid_argument("checkpoint expects input " + ck->arch.input.str() + ", dataset has " +
                                        train.shape.str());
        }
        if (ck->run.arch != run.arch) {
            throw std::invalid_argument("checkpoint arch " + ck->run.arch + " differs from " + run.arch);
        }
        arch = ck->arch;
        done = ck->epochs_completed;
        model.emplace(std::move(ck->model));
    } else {
        model.emplace(build_model(arch));
    }

    io([&] {
        fs::create_directories(run.out_dir);
        return 0;
    });
    const fs::path metrics_path = fs::path(run.out_dir) / "metrics.jsonl";
    std::ofstream metrics(metrics_path, done > 0 ? std::ios::app : std::ios::trunc);
    if (!metrics) throw IoError("cannot open " + metrics_path.string());

    TrainConfig tc;
    tc.epochs = run.epochs > done ? run.epochs - done : 0;
    tc.batch = run.batch;
    tc.seed = run.seed;
    tc.first_epoch = done + 1;
    tc.optimizer = run.optimizer_config();
    const fs::path ck_path = fs::path(run.out_dir) / "checkpoint.srck";
    std::size_t completed = done;
    train_loop(*model, train, test.size() ? &test : nullptr, tc, [&](const EpochMetrics& m) {
        const auto line = m.json();
        metrics << line << "\n" << std::flush;
        if (!a.quiet) std::cout << line << "\n" << std::flush;
        if (m.split == "train") completed = m.epoch;
    });
    io([&] {
        save_checkpoint(ck_path, *model, run, arch, completed);
        return 0;
    });
    nlohmann::ordered_json j;
    j["checkpoint"] = ck_path.string();
    j["metrics"] = metrics_path.string();
    j["epochs_completed"] = completed;
    j["params"] = model->params().trainable_count();
    std::cerr << j.dump() << "\n";
    return kOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::optional<std::uint64_t> augment_seed;
    std::string augment_log;
    std::size_t batch = 64;
};

int run_eval(const EvalArgs& a) {
    auto ck = io([&] { return load_checkpoint(a.checkpoint); });
    Dataset data = io([&] { return read_cvds(a.data); });
    if (data.shape != ck.model.input_shape()) {
        throw std::invalid_argument("checkpoint expects input " + ck.model.input_shape().str() + ", dataset has " +
                                    data.shape.str());
    }
    nlohmann::ordered_json j;
    std::optional<double> clean;
    if (a.augment_seed) {
        clean = evaluate(ck.model, data, a.batch).accuracy;
        AugmentSpec spec;
        spec.seed = *a.augment_seed;
        auto aug = augment_scale(data, spec);
        const fs::path log = a.augment_log.empty()
                                 ? fs::path(a.checkpoint).parent_path() / ("augment-" + std::to_string(spec.seed) + ".jsonl")
                                 : fs::path(a.augment_log);
        std::ofstream f(log, std::ios::trunc);
        if (!f) throw IoError("cannot open " + log.string());
        for (std::size_t i = 0; i < aug.draws.size(); ++i) {
            nlohmann::ordered_json d;
            d["sample"] = i;
            d["scale"] = aug.draws[i].scale;
            d["angle"] = aug.draws[i].angle;
            f << d.dump() << "\n";
        }
        data = std::move(aug.data);
        j["augment_seed"] = spec.seed;
        j["augment_log"] = log.string();
    }
    const auto report = evaluate(ck.model, data, a.batch);
    auto r = nlohmann::ordered_json::parse(report.json());
    j["checkpoint"] = a.checkpoint;
    j["dataset"] = a.data;
    j["n"] = data.size();
    for (auto& [k, v] : r.items()) j[k] = v;
    if (clean) {
        j["clean_accuracy"] = *clean;
        j["accuracy_drop"] = *clean - report.accuracy;
    }
    std::cout << j.dump() << "\n";
    return kOk;
}

// ---- verify ---------------------------------------------------------------

struct VerifyArgs {
    std::vector<std::string> properties;
    std::size_t trials = 0;
    std::uint64_t seed = 1;
};

int run_verify(const VerifyArgs& a) {
    VerifyOptions opt;
    opt.seed = a.seed;
    opt.trials = a.trials;
    const auto& names = a.properties.empty() ? property_names() : a.properties;
    for (const auto& n : names) {
        const auto& all = property_names();
        if (std::find(all.begin(), all.end(), n) == all.end()) throw UsageError("unknown property '" + n + "'");
    }
    std::size_t failed = 0;
    for (const auto& n : names) {
        const auto r = run_property(n, opt);
        if (!r.passed) ++failed;
        std::cout << r.json() << "\n" << std::flush;
    }
    nlohmann::ordered_json j;
    j["properties"] = names.size();
    j["failed"] = failed;
    j["passed"] = failed == 0;
    std::cout << j.dump() << "\n";
    return failed ? kFailure : kOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
    std::vector<std::string> archs{"surreal", "surreal-res", "real-baseline"};
    std::string input = "1,100,100";
    std::size_t classes = 11;
    std::string preset = "auto";
    std::vector<std::size_t> tr_ranks{0, 2};
    std::size_t batch = 4;
    std::size_t repeats = 1;
};

Shape parse_shape(const std::string& s) {
    std::vector<std::size_t> v;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            v.push_back(std::stoul(part));
        } catch (const std::exception&) {
            throw UsageError("bad shape '" + s + "' (expected c,h,w)");
        }
    }
    if (v.size() != 3 || v[0] == 0 || v[1] == 0 || v[2] == 0) throw UsageError("bad shape '" + s + "' (expected c,h,w)");
    return {v[0], v[1], v[2]};
}

int run_bench(const BenchArgs& a) {
    const Shape input = parse_shape(a.input);
    for (const auto& arch : a.archs) {
        for (auto rank : a.tr_ranks) {
            ArchConfig cfg;
            cfg.arch = parse_arch(arch);
            cfg.input = input;
            cfg.classes = a.classes;
            cfg.preset = parse_preset(a.preset);
            cfg.tr_rank = rank;
            std::cout << bench_model(cfg, a.batch, a.repeats).json() << "\n" << std::flush;
        }
    }
    return kOk;
}

void apply_thread_cap() {
    if (const char* env = std::getenv("SURREAL_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) omp_set_num_threads(n);
        } catch (const std::exception&) {
            std::cerr << "ignoring SURREAL_THREADS=" << env << "\n";
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_cap();
    CLI::App app{"Complex-valued deep learning on the scaling-rotation manifold"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "generate a synthetic dataset (CVDS)");
    g->add_option("--kind", gen.kind, "modulation | blobs")->required()->check(CLI::IsMember({"modulation", "blobs"}));
    g->add_option("--classes", gen.classes, "number of classes");
    g->add_option("--modulations", gen.modulations, "explicit class list (BPSK QPSK PSK8 PAM4)")->delimiter(',');
    g->add_option("--per-class", gen.per_class, "samples per class");
    g->add_option("--snr", gen.snr, "SNR in dB, or inf");
    g->add_option("--length", gen.length, "signal length");
    g->add_option("--height", gen.height, "blob image height");
    g->add_option("--width", gen.width, "blob image width");
    g->add_option("--noise", gen.noise, "blob noise level");
    g->add_option("--seed", gen.seed, "RNG seed");
    g->add_option("--layout-seed", gen.layout_seed, "blob template seed");
    g->add_option("--out", gen.out, "output path")->required();

    TrainArgs train;
    RunConfig flags;
    std::optional<double> clip;
    auto* t = app.add_subcommand("train", "train a model");
    t->add_option("--config", train.config_path, "key = value run configuration");
    t->add_option("--arch", flags.arch, "surreal | surreal-res | real-baseline");
    t->add_option("--data", flags.dataset, "training dataset (CVDS)");
    t->add_option("--test", flags.test_dataset, "test dataset (CVDS)");
    t->add_option("--out", flags.out_dir, "output directory");
    t->add_option("--epochs", flags.epochs, "total epochs");
    t->add_option("--batch", flags.batch, "batch size");
    t->add_option("--lr", flags.lr, "learning rate");
    t->add_option("--seed", flags.seed, "seed");
    t->add_option("--optimizer", flags.optimizer, "adam | sgd");
    t->add_option("--clip-norm", clip, "gradient clip norm");
    t->add_option("--preset", flags.preset, "auto | table | desk");
    t->add_option("--tr-rank", flags.tr_rank, "tensor-ring rank (0 = dense)");
    t->add_option("--dist-sets", flags.dist_sets, "distance-transform weight sets");
    t->add_option("--logit-init", flags.logit_init, "std of the initial wFM and distance logits (0 = uniform weights)");
    t->add_flag("--trelu,!--no-trelu", flags.trelu, "tReLU instead of G-transport");
    t->add_option("--resume", train.resume, "checkpoint to continue from");
    t->add_flag("--quiet", train.quiet, "do not echo metrics to stdout");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
    e->add_option("--checkpoint", ev.checkpoint, "checkpoint path")->required();
    e->add_option("--data", ev.data, "dataset (CVDS)")->required();
    e->add_option("--augment-scale", ev.augment_seed, "apply random complex scaling with this seed");
    e->add_option("--augment-log", ev.augment_log, "where to record the drawn scalings");
    e->add_option("--batch", ev.batch, "evaluation batch size");

    VerifyArgs ver;
    auto* v = app.add_subcommand("verify", "run the property suites");
    v->add_option("--property", ver.properties, "property to run (repeatable)");
    v->add_option("--trials", ver.trials, "trials per property (0 = defaults)");
    v->add_option("--seed", ver.seed, "seed");

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "parameter counts and per-layer timings");
    b->add_option("--arch", bench.archs, "architectures")->delimiter(',');
    b->add_option("--input", bench.input, "input shape c,h,w");
    b->add_option("--classes", bench.classes, "classes");
    b->add_option("--preset", bench.preset, "auto | table | desk");
    b->add_option("--tr-rank", bench.tr_ranks, "tensor-ring ranks (0 = dense)")->delimiter(',');
    b->add_option("--batch", bench.batch, "batch size for timing");
    b->add_option("--repeats", bench.repeats, "timed repetitions (0 = counts only)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        return app.exit(err) == 0 ? kOk : kUsage;
    }

    try {
        if (*g) return run_gen(gen);
        if (*t) {
            flags.clip_norm = clip;
            return run_train(*t, train, flags);
        }
        if (*e) return run_eval(ev);
        if (*v) return run_verify(ver);
        if (*b) return run_bench(bench);
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return kUsage;
    } catch (const IoError& err) {
        std::cerr << "I/O error: " << err.what() << "\n";
        return kIo;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kFailure;
    }
    return kUsage;
}
