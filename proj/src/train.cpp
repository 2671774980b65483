#include "surreal/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace surreal {

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw std::invalid_argument("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

void OptimizerConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be finite and >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("Adam eps must be positive");
    if (clip_norm && !(*clip_norm > 0.0)) throw std::invalid_argument("clip norm must be positive");
}

void optimizer_step(ParamStore& params, const OptimizerConfig& config) {
    auto learning = params.all();
    std::erase_if(learning, [](const Param* p) { return !p->learns(); });

    double scale = 1.0;
    if (config.clip_norm) {
        double sq = 0.0;
        for (const auto* p : learning)
            for (double g : p->grad) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > *config.clip_norm) scale = *config.clip_norm / norm;
    }

    if (config.kind == OptimizerKind::sgd) {
        for (auto* p : learning)
            for (std::size_t i = 0; i < p->size(); ++i) p->value[i] -= config.lr * scale * p->grad[i];
        return;
    }

    ++params.adam_step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(params.adam_step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(params.adam_step));
    for (auto* p : learning) {
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double g = scale * p->grad[i];
            p->m[i] = config.beta1 * p->m[i] + (1.0 - config.beta1) * g;
            p->v[i] = config.beta2 * p->v[i] + (1.0 - config.beta2) * g * g;
            p->value[i] -= config.lr * (p->m[i] / c1) / (std::sqrt(p->v[i] / c2) + config.eps);
        }
    }
}

namespace {

std::size_t count_correct(const RealBatch& logits, std::span<const std::uint32_t> labels) {
    const std::size_t k = logits.shape.size();
    std::size_t correct = 0;
    for (std::size_t b = 0; b < logits.n; ++b) {
        const auto* row = logits.data.data() + b * k;
        const auto pred = static_cast<std::size_t>(std::max_element(row, row + k) - row);
        if (pred == labels[b]) ++correct;
    }
    return correct;
}

void check_labels(const std::vector<std::uint32_t>& labels, std::size_t classes) {
    for (auto l : labels)
        if (l >= classes) throw std::invalid_argument("label " + std::to_string(l) + " out of range for " +
                                                     std::to_string(classes) + " classes");
}

void check_dataset(const Model& model, const Dataset& data) {
    if (data.shape != model.input_shape()) {
        throw std::invalid_argument("dataset shape " + data.shape.str() + " does not match model input " +
                                    model.input_shape().str());
    }
    if (data.num_classes > model.classes()) {
        throw std::invalid_argument("dataset has " + std::to_string(data.num_classes) + " classes, model " +
                                    std::to_string(model.classes()));
    }
}

}  // namespace

StepResult train_step(Model& model, const ChartBatch& batch, const std::vector<std::uint32_t>& labels,
                      const OptimizerConfig& optimizer) {
    if (batch.n == 0) throw std::invalid_argument("train_step: empty batch");
    if (labels.size() != batch.n) throw std::invalid_argument("train_step: label count differs from batch size");
    check_labels(labels, model.classes());

    model.params().zero_grad();
    Tape tape(true);
    const Value logits = model.forward(tape, batch);
    const Value loss = ops::softmax_cross_entropy(tape, logits, labels);
    StepResult r;
    r.loss = tape.real(loss).data[0];
    if (!std::isfinite(r.loss)) {
        const auto layer = tape.first_nonfinite();
        throw std::runtime_error("non-finite loss; first non-finite output at " +
                                 (layer.empty() ? std::string("loss") : layer));
    }
    r.correct = count_correct(tape.real(logits), labels);
    tape.backward(loss);
    optimizer_step(model.params(), optimizer);
    return r;
}

std::string EpochMetrics::json() const {
    nlohmann::ordered_json j;
    j["epoch"] = epoch;
    j["split"] = split;
    j["loss"] = loss;
    j["accuracy"] = accuracy;
    j["seconds"] = seconds;
    return j.dump();
}

void train_loop(Model& model, const Dataset& train, const Dataset* test, const TrainConfig& config,
                const MetricsSink& sink) {
    config.optimizer.validate();
    if (config.batch == 0) throw std::invalid_argument("batch size must be positive");
    check_dataset(model, train);
    if (test) check_dataset(model, *test);
    if (train.size() == 0 && config.epochs > 0) throw std::invalid_argument("empty training set");

    std::vector<std::size_t> order(train.size());
    for (std::size_t e = 0; e < config.epochs; ++e) {
        const std::size_t epoch = config.first_epoch + e;
        const auto start = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), 0);
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                          static_cast<std::uint32_t>(epoch)};
        std::mt19937_64 rng(seq);
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t at = 0; at < order.size(); at += config.batch) {
            const std::span<const std::size_t> idx(order.data() + at, std::min(config.batch, order.size() - at));
            const auto r = train_step(model, train.batch(idx), train.batch_labels(idx), config.optimizer);
            loss_sum += r.loss * static_cast<double>(idx.size());
            correct += r.correct;
        }
        const auto train_end = std::chrono::steady_clock::now();
        EpochMetrics m;
        m.epoch = epoch;
        m.split = "train";
        m.loss = loss_sum / static_cast<double>(order.size());
        m.accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        m.seconds = std::chrono::duration<double>(train_end - start).count();
        sink(m);

        if (test) {
            const auto report = evaluate(model, *test);
            EpochMetrics t;
            t.epoch = epoch;
            t.split = "test";
            t.loss = report.loss;
            t.accuracy = report.accuracy;
            t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - train_end).count();
            sink(t);
        }
    }
}

std::string EvalReport::json() const {
    nlohmann::ordered_json j;
    j["accuracy"] = accuracy;
    j["loss"] = loss;
    j["per_class"] = nlohmann::json::array();
    for (double a : per_class) {
        if (std::isnan(a)) j["per_class"].push_back(nullptr);
        else j["per_class"].push_back(a);
    }
    j["confusion"] = confusion;
    return j.dump();
}

RealBatch predict(const Model& model, const ChartBatch& input) {
    Tape tape(false);
    return tape.real(model.forward(tape, input));
}

EvalReport evaluate(const Model& model, const Dataset& data, std::size_t batch) {
    check_dataset(model, data);
    const std::size_t k = model.classes();
    EvalReport r;
    r.confusion.assign(k, std::vector<std::size_t>(k, 0));
    if (batch == 0) batch = 64;

    std::vector<std::size_t> idx;
    double loss_sum = 0.0;
    for (std::size_t at = 0; at < data.size(); at += batch) {
        idx.resize(std::min(batch, data.size() - at));
        std::iota(idx.begin(), idx.end(), at);
        Tape tape(false);
        const auto labels = data.batch_labels(idx);
        const Value logits = model.forward(tape, data.batch(idx));
        const Value loss = ops::softmax_cross_entropy(tape, logits, labels);
        loss_sum += tape.real(loss).data[0] * static_cast<double>(idx.size());
        const auto& out = tape.real(logits);
        for (std::size_t b = 0; b < out.n; ++b) {
            const auto* row = out.data.data() + b * k;
            const auto pred = static_cast<std::size_t>(std::max_element(row, row + k) - row);
            ++r.confusion[labels[b]][pred];
        }
    }
    std::size_t correct = 0;
    r.per_class.assign(k, std::nan(""));
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t total = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), std::size_t{0});
        correct += r.confusion[c][c];
        if (total > 0) r.per_class[c] = static_cast<double>(r.confusion[c][c]) / static_cast<double>(total);
    }
    const double n = static_cast<double>(data.size());
    r.accuracy = data.size() ? static_cast<double>(correct) / n : 0.0;
    r.loss = data.size() ? loss_sum / n : 0.0;
    return r;
}

GradCheckReport grad_check(ParamStore& params, const Objective& objective, const GradCheckOptions& options) {
    if (!(options.h >= 1e-6 && options.h <= 1e-3)) throw std::invalid_argument("grad_check: h must lie in [1e-6, 1e-3]");

    // Training-mode forwards touch batch-norm buffers; restore them afterwards.
    std::vector<std::vector<double>> snapshot;
    for (const auto* p : params.all()) snapshot.push_back(p->value);

    auto eval = [&](std::uint64_t& sig) {
        Tape tape(true);
        tape.record_kinks(true);
        const Value v = objective(tape);
        sig = tape.signature();
        return tape.real(v).data[0];
    };

    params.zero_grad();
    std::uint64_t base_sig = 0;
    {
        Tape tape(true);
        tape.record_kinks(true);
        const Value v = objective(tape);
        base_sig = tape.signature();
        tape.backward(v);
    }

    std::vector<Param*> chosen;
    for (auto* p : params.all()) {
        if (!p->learns()) continue;
        if (!options.params.empty() &&
            std::find(options.params.begin(), options.params.end(), p->name) == options.params.end())
            continue;
        chosen.push_back(p);
    }

    GradCheckReport report;
    std::mt19937_64 rng(options.seed);
    const double h = options.h;
    for (auto* p : chosen) {
        std::vector<std::size_t> entries(p->size());
        std::iota(entries.begin(), entries.end(), 0);
        if (options.per_param > 0 && entries.size() > options.per_param) {
            std::shuffle(entries.begin(), entries.end(), rng);
            entries.resize(options.per_param);
        }
        const std::vector<double> analytic = p->grad;
        for (auto i : entries) {
            const double p0 = p->value[i];
            std::uint64_t s_plus = 0, s_minus = 0, s_far_plus = 0, s_far_minus = 0;
            p->value[i] = p0 + h;
            const double f_plus = eval(s_plus);
            p->value[i] = p0 - h;
            const double f_minus = eval(s_minus);
            p->value[i] = p0 + 10 * h;
            eval(s_far_plus);
            p->value[i] = p0 - 10 * h;
            eval(s_far_minus);
            p->value[i] = p0;
            if (s_plus != base_sig || s_minus != base_sig || s_far_plus != base_sig || s_far_minus != base_sig) {
                ++report.excluded;
                continue;
            }
            const double numeric = (f_plus - f_minus) / (2 * h);
            const double a = analytic[i];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.floor});
            ++report.checked;
            if (rel >= report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst = p->name + "[" + std::to_string(i) + "]";
            }
        }
    }

    auto all = params.all();
    for (std::size_t k = 0; k < all.size(); ++k) all[k]->value = snapshot[k];
    report.passed = report.max_rel_error < options.tol;
    return report;
}

GradCheckReport grad_check(Model& model, const ChartBatch& input, const GradCheckOptions& options) {
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> coeffs(input.n * model.classes());
    for (auto& c : coeffs) c = normal(rng);
    const Objective objective = [&](Tape& tape) {
        return ops::weighted_sum(tape, model.forward(tape, input), coeffs);
    };
    return grad_check(model.params(), objective, options);
}

}  // namespace surreal
