// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. P8 trains two models and dominates the runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "surreal/data.hpp"
#include "surreal/model.hpp"
#include "surreal/tensor_ring.hpp"
#include "surreal/train.hpp"
#include "surreal/verify.hpp"

using namespace surreal;

namespace {

// Desk configuration for P8.
constexpr double kDeskLogitInit = 30.0;
constexpr std::size_t kDeskDistSets = 8;
constexpr std::size_t kDeskEpochs = 8;
constexpr double kDeskLr = 1e-2;
constexpr std::size_t kBaselineEpochs = 5;

struct Line {
    bool passed = false;
    std::string detail;
};

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Runs the named properties and checks each result plus the wall-time bound.
Line properties(const std::vector<std::string>& names, double max_seconds) {
    Line l{true, {}};
    double seconds = 0.0;
    for (const auto& name : names) {
        const auto r = run_property(name, {});
        seconds += r.seconds;
        l.passed = l.passed && r.passed;
        l.detail += name + " max_err=" + fmt("%.3g", r.max_error) + " tol=" + fmt("%.3g", r.tolerance) + " n=" +
                    std::to_string(r.trials) + (r.detail.empty() ? "" : " [" + r.detail + "]") + "; ";
    }
    l.passed = l.passed && seconds < max_seconds;
    l.detail += fmt("%.2fs", seconds) + fmt(" (limit %.0fs)", max_seconds);
    return l;
}

Line p8() {
    const auto t0 = std::chrono::steady_clock::now();
    ModulationSpec ms;
    ms.per_class = 500;
    ms.snr_db = 10.0;
    ms.seed = 7;
    const auto train = gen_modulation(ms);
    ms.seed = 8;
    const auto test = gen_modulation(ms);
    AugmentSpec as;
    as.seed = 11;
    const auto augmented = augment_scale(test, as).data;

    auto fit = [&](ArchConfig cfg, std::size_t epochs, double lr) {
        cfg.input = train.shape;
        cfg.classes = train.num_classes;
        auto m = build_model(cfg);
        TrainConfig tc;
        tc.epochs = epochs;
        tc.optimizer.lr = lr;
        train_loop(m, train, nullptr, tc, [](const EpochMetrics&) {});
        const double clean = evaluate(m, test).accuracy;
        return std::make_pair(clean, clean - evaluate(m, augmented).accuracy);
    };

    ArchConfig surreal_cfg;
    surreal_cfg.logit_init = kDeskLogitInit;
    surreal_cfg.dist_sets = kDeskDistSets;
    const auto [s_clean, s_drop] = fit(surreal_cfg, kDeskEpochs, kDeskLr);
    ArchConfig real_cfg;
    real_cfg.arch = Arch::real_baseline;
    const auto [r_clean, r_drop] = fit(real_cfg, kBaselineEpochs, 1e-3);

    const double seconds = since(t0);
    Line l;
    l.passed = s_clean >= 0.90 && s_drop <= 0.005 && r_drop >= 0.10 && seconds <= 600.0;
    l.detail = "surreal clean=" + fmt("%.4f", s_clean) + " drop=" + fmt("%.4f", s_drop) +
               "; real-baseline clean=" + fmt("%.4f", r_clean) + " drop=" + fmt("%.4f", r_drop) + "; " +
               fmt("%.1fs", seconds);
    return l;
}

Line p9() {
    ArchConfig cfg;
    cfg.input = {1, 100, 100};
    cfg.classes = 11;
    const auto count = build_model(cfg).params().trainable_count();
    bool ok = std::abs(static_cast<double>(count) - 67000.0) <= 6700.0;

    // Every factorised kernel must hold exactly rank^2 * sum(modes) values.
    std::size_t kernels = 0;
    for (std::size_t rank : {1, 2, 3, 5}) {
        cfg.tr_rank = rank;
        const auto m = build_model(cfg);
        std::map<std::string, std::pair<std::size_t, std::size_t>> by_kernel;  // values, sum of modes
        for (const auto* p : m.params().all()) {
            const auto at = p->name.rfind(".tr");
            if (at == std::string::npos) continue;
            auto& e = by_kernel[p->name.substr(0, at)];
            e.first += p->size();
            e.second += p->shape[1];
        }
        for (const auto& [name, e] : by_kernel) {
            ok = ok && e.first == rank * rank * e.second;
            ++kernels;
        }
    }
    const auto spec = TensorRingSpec::zeros({5, 5, 10}, 4);
    ok = ok && tensor_ring_param_count(spec) == 320 && kernels > 0;
    return {ok, "table preset trainable=" + std::to_string(count) + " (67000 +-10%); " + std::to_string(kernels) +
                    " tensor-ring kernels match rank^2*sum(n)"};
}

Line p10() {
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<std::size_t> dim(1, 5), count(0, 20);
    std::normal_distribution<float> v(0.0f, 3.0f);
    std::size_t exact = 0, lengths = 0;
    for (int trial = 0; trial < 50; ++trial) {
        Dataset d;
        d.shape = {dim(rng), dim(rng), dim(rng)};
        d.num_classes = static_cast<std::uint32_t>(dim(rng) + 1);
        const std::size_t n = count(rng);
        for (std::size_t i = 0; i < n; ++i) {
            d.labels.push_back(static_cast<std::uint32_t>(rng() % d.num_classes));
            for (std::size_t k = 0; k < d.shape.size(); ++k) d.values.emplace_back(v(rng), v(rng));
        }
        const auto bytes = encode_cvds(d);
        lengths += bytes.size() == 20 + n * (4 + 8 * d.shape.size()) + 4 && bytes.size() == cvds_file_size(n, d.shape);
        const auto back = decode_cvds(bytes);
        exact += encode_cvds(back) == bytes && back.values == d.values && back.labels == d.labels;
    }

    ModulationSpec ms;
    ms.per_class = 2;
    const auto good = encode_cvds(gen_modulation(ms));
    auto rejects = [](std::vector<std::uint8_t> b, const char* expect) {
        try {
            decode_cvds(b);
        } catch (const std::runtime_error& e) {
            return expect == nullptr || std::strcmp(e.what(), expect) == 0;
        }
        return false;
    };
    auto magic = good;
    std::memcpy(magic.data(), "XVDS", 4);
    auto shorter = good;
    shorter.pop_back();
    auto longer = good;
    longer.push_back(0);
    auto label = good;
    label[20] = 99;
    const int rejected = rejects(magic, "not a CVDS file") + rejects(shorter, nullptr) + rejects(longer, nullptr) +
                         rejects({good.begin(), good.begin() + 12}, nullptr) + rejects(label, nullptr);
    const bool small = encode_cvds(Dataset{{1, 1, 2}, 1, {}, {}}).size() == 24;
    return {exact == 50 && lengths == 50 && rejected == 5 && small,
            "round trips " + std::to_string(exact) + "/50, length formula " + std::to_string(lengths) +
                "/50, corrupt files rejected " + std::to_string(rejected) + "/5"};
}

}  // namespace

int main(int argc, char** argv) {
    // Optional filter: criterion ids to run, e.g. `acceptance P1 P9`.
    std::vector<std::string> only(argv + 1, argv + argc);
    const std::vector<std::pair<std::string, std::function<Line()>>> criteria{
        {"P1", [] { return properties({"isometry"}, 1.0); }},
        {"P2", [] { return properties({"equivariance"}, 5.0); }},
        {"P3", [] { return properties({"invariance"}, 10.0); }},
        {"P4", [] { return properties({"logit-invariance"}, 30.0); }},
        {"P5", [] { return properties({"wfm-oracle", "wfm-bruteforce"}, 60.0); }},
        {"P6", [] { return properties({"trelu"}, 60.0); }},
        {"P7", [] { return properties({"gradient"}, 120.0); }},
        {"P8", p8},
        {"P9", p9},
        {"P10", p10},
    };
    int failed = 0;
    for (const auto& [id, run] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        Line l;
        try {
            l = run();
        } catch (const std::exception& e) {
            l = {false, std::string("error: ") + e.what()};
        }
        failed += !l.passed;
        std::printf("%-4s %s  %s\n", id.c_str(), l.passed ? "PASS" : "FAIL", l.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
