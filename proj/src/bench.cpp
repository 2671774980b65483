#include "surreal/bench.hpp"

#include <random>

#include <json.hpp>

namespace surreal {

std::string BenchReport::json() const {
    nlohmann::ordered_json j;
    j["arch"] = arch;
    j["preset"] = preset;
    j["input"] = {input.c, input.h, input.w};
    j["classes"] = classes;
    j["tr_rank"] = tr_rank;
    j["params"] = params;
    j["buffers"] = buffers;
    j["batch"] = batch;
    j["layers"] = nlohmann::json::array();
    for (const auto& l : layers) {
        nlohmann::ordered_json e;
        e["name"] = l.name;
        e["kind"] = l.kind;
        e["out"] = {l.out.c, l.out.h, l.out.w};
        e["params"] = l.params;
        e["forward_ms"] = l.forward_ms;
        e["backward_ms"] = l.backward_ms;
        j["layers"].push_back(e);
    }
    return j.dump();
}

BenchReport bench_model(const ArchConfig& config, std::size_t batch, std::size_t repeats) {
    auto model = build_model(config);
    BenchReport r;
    r.arch = model.arch();
    r.preset = config.preset == Preset::table ? "table" : config.preset == Preset::desk ? "desk" : "auto";
    r.input = config.input;
    r.classes = config.classes;
    r.tr_rank = config.tr_rank;
    r.params = model.params().trainable_count();
    r.buffers = model.params().buffer_count();
    r.batch = batch;
    for (const auto& l : model.layers()) r.layers.push_back({l.name, l.kind, l.out, l.params, 0.0, 0.0});
    if (repeats == 0 || batch == 0) return r;

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> lr(-1.0, 1.0), th(-kPi, kPi);
    ChartBatch x(batch, config.input);
    for (auto& v : x.logr) v = lr(rng);
    for (auto& v : x.theta) v = th(rng);
    const std::vector<double> coeffs(batch * config.classes, 1.0);

    std::vector<double> seconds;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        model.params().zero_grad();
        Tape tape(true);
        tape.profile(true);
        const Value out = model.forward(tape, tape.constant(x), &seconds);
        for (std::size_t i = 0; i < seconds.size(); ++i) r.layers[i].forward_ms += 1e3 * seconds[i];
        tape.backward(ops::weighted_sum(tape, out, coeffs));
        const auto& node_s = tape.node_seconds();
        for (std::size_t n = 0; n < tape.node_count(); ++n) {
            const auto& name = tape.node_name(n);
            const auto scope = name.substr(0, name.find('/'));
            for (auto& l : r.layers)
                if (l.name == scope) l.backward_ms += 1e3 * node_s[n];
        }
    }
    for (auto& l : r.layers) {
        l.forward_ms /= static_cast<double>(repeats);
        l.backward_ms /= static_cast<double>(repeats);
    }
    return r;
}

}  // namespace surreal
