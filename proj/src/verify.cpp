#include "surreal/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "surreal/data.hpp"
#include "surreal/layers.hpp"
#include "surreal/model.hpp"
#include "surreal/tensor_ring.hpp"
#include "surreal/train.hpp"
#include "surreal/wfm.hpp"

namespace surreal {

std::string PropertyResult::json() const {
    nlohmann::ordered_json j;
    j["property"] = name;
    j["max_error"] = max_error;
    j["tolerance"] = tolerance;
    j["passed"] = passed;
    j["trials"] = trials;
    j["seconds"] = seconds;
    if (!detail.empty()) j["detail"] = detail;
    return j.dump();
}

namespace {

using Rng = std::mt19937_64;

struct Sampler {
    explicit Sampler(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    std::size_t index(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }
    PolarComplex point() { return {std::exp(uniform(-3.0, 3.0)), wrap_phase(uniform(-kPi, kPi))}; }
    GroupElement group() { return {std::exp(uniform(-3.0, 3.0)), wrap_phase(uniform(-kPi, kPi))}; }
    std::vector<double> weights(std::size_t n) {
        std::vector<double> w(n);
        for (auto& x : w) x = uniform(0.01, 1.0);
        return w;
    }
    ComplexTensor tensor(Shape s) {
        ComplexTensor t(s);
        for (auto& p : t.data) p = point();
        return t;
    }

    Rng rng;
};

// Weighted arithmetic mean in (log r, theta) with phases lifted next to the
// first point: the exact minimiser when every phase lies within a half-turn.
PolarComplex chart_mean(std::span<const PolarComplex> pts, std::span<const double> w) {
    double total = 0.0, lr = 0.0, th = 0.0;
    const double ref = pts[0].phase;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        total += w[k];
        lr += w[k] * std::log(pts[k].magnitude);
        th += w[k] * (ref + wrap_phase(pts[k].phase - ref));
    }
    return {std::exp(lr / total), wrap_phase(th / total)};
}

double tensor_gap(const ComplexTensor& a, const ComplexTensor& b) {
    if (a.shape != b.shape) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) worst = std::max(worst, distance(a.data[k], b.data[k]));
    return worst;
}

struct Outcome {
    double max_error = 0.0;
    std::size_t trials = 0;
    std::string detail;
    bool extra_ok = true;
};

using Body = std::function<Outcome(Sampler&, std::size_t)>;

struct Property {
    std::string name;
    std::size_t default_trials;
    double tolerance;
    Body body;
};

Outcome transitivity(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    for (std::size_t i = 0; i < trials; ++i) {
        const auto a = s.point(), b = s.point();
        o.max_error = std::max(o.max_error, distance(act(transporter(a, b), a), b));
    }
    return o;
}

Outcome isometry(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    for (std::size_t i = 0; i < trials; ++i) {
        const auto g = s.group();
        const auto a = s.point(), b = s.point();
        o.max_error = std::max(o.max_error, std::abs(distance(act(g, a), act(g, b)) - distance(a, b)));
    }
    return o;
}

Outcome metric(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    for (std::size_t i = 0; i < trials; ++i) {
        const auto a = s.point(), b = s.point(), c = s.point();
        const double ab = distance(a, b), ba = distance(b, a), bc = distance(b, c), ac = distance(a, c);
        double err = std::abs(ab - ba);
        err = std::max(err, distance(a, a));
        if (ab < 0.0 || (ab == 0.0 && a != b)) err = std::numeric_limits<double>::infinity();
        err = std::max(err, ac - ab - bc);
        o.max_error = std::max(o.max_error, err);
    }
    return o;
}

Outcome chart(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    for (std::size_t i = 0; i < trials; ++i) {
        const auto a = s.point(), b = s.point();
        const auto la = log_map(a), lb = log_map(b);
        const double flat = std::hypot(lb.d_logr - la.d_logr, std::sqrt(2.0) * wrap_phase(lb.d_theta - la.d_theta));
        o.max_error = std::max(o.max_error, std::abs(distance(a, b) - flat));
    }
    return o;
}

Outcome wrap(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    for (std::size_t i = 0; i < trials; ++i) {
        // Every fourth sample sits exactly on an odd multiple of pi.
        const double x = i % 4 == 0 ? kPi * static_cast<double>(2 * static_cast<long>(s.index(0, 40)) - 39)
                                    : s.uniform(-100.0, 100.0);
        const double w = wrap_phase(x);
        double err = std::abs(wrap_phase(w) - w);
        if (!(w > -kPi && w <= kPi)) err = std::numeric_limits<double>::infinity();
        o.max_error = std::max(o.max_error, err);
    }
    return o;
}

Outcome equivariance(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    std::vector<PolarComplex> pts, moved;
    for (std::size_t i = 0; i < trials; ++i) {
        const std::size_t n = s.index(1, 25);
        pts.resize(n);
        for (auto& p : pts) p = s.point();
        const WeightVector w(s.weights(n));
        const auto g = s.group();
        moved.clear();
        for (const auto& p : pts) moved.push_back(act(g, p));
        o.max_error = std::max(o.max_error, distance(act(g, wfm_incremental(pts, w)), wfm_incremental(moved, w)));
    }
    return o;
}

// Points clustered inside an arc of width below `spread` around a random centre.
std::vector<PolarComplex> clustered(Sampler& s, std::size_t n, double spread) {
    const double centre = s.uniform(-kPi, kPi);
    const double logr = s.uniform(-2.0, 2.0);
    std::vector<PolarComplex> pts(n);
    for (auto& p : pts) {
        p = {std::exp(logr + s.uniform(-1.0, 1.0)), wrap_phase(centre + s.uniform(-spread / 2, spread / 2))};
    }
    return pts;
}

Outcome contraction(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    for (std::size_t i = 0; i < trials; ++i) {
        const std::size_t n = s.index(1, 25);
        // An arc shorter than a half-turn, clear of the cut, so the principal
        // chart box is the hull.
        std::vector<PolarComplex> pts(n);
        const double lo = s.uniform(-kPi + 0.01, kPi - 0.02);
        const double hi = s.uniform(lo, std::min(lo + kPi - 0.01, kPi - 0.01));
        for (auto& p : pts) p = {std::exp(s.uniform(-3.0, 3.0)), s.uniform(lo, hi)};
        const auto m = wfm_incremental(pts, WeightVector(s.weights(n)));
        double rmin = pts[0].magnitude, rmax = rmin, tmin = pts[0].phase, tmax = tmin;
        for (const auto& p : pts) {
            rmin = std::min(rmin, p.magnitude);
            rmax = std::max(rmax, p.magnitude);
            tmin = std::min(tmin, p.phase);
            tmax = std::max(tmax, p.phase);
        }
        const double lm = std::log(m.magnitude);
        const double out = std::max({std::log(rmin) - lm, lm - std::log(rmax), tmin - m.phase, m.phase - tmax, 0.0});
        o.max_error = std::max(o.max_error, out);
    }
    return o;
}

Outcome wfm_oracle(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    for (std::size_t i = 0; i < trials; ++i) {
        const std::size_t n = s.index(1, 16);
        const auto pts = clustered(s, n, kPi / 2);
        const auto raw = s.weights(n);
        const WeightVector w(raw);
        const auto inc = wfm_incremental(pts, w);
        const auto closed = chart_mean(pts, w.values());
        const auto fixed = wfm_fixed_point(pts, w).mean;
        o.max_error = std::max({o.max_error, distance(inc, closed), distance(fixed, closed)});
    }
    return o;
}

Outcome wfm_brute(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    for (std::size_t i = 0; i < trials; ++i) {
        const std::size_t n = s.index(1, 16);
        const auto pts = clustered(s, n, kPi / 2);
        const WeightVector w(s.weights(n));
        o.max_error = std::max(o.max_error, distance(wfm_incremental(pts, w), wfm_bruteforce(pts, w, 1024)));
    }
    return o;
}

WfmConvSpec random_spec(Sampler& s, std::size_t in, std::size_t out, kernels::Window win) {
    auto spec = WfmConvSpec::uniform(in, out, win);
    for (auto& l : spec.logits) l = s.uniform(-2.0, 2.0);
    return spec;
}

Outcome layer_equivariance(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    for (std::size_t i = 0; i < trials; ++i) {
        const std::size_t c = s.index(1, 3);
        const kernels::Window win{s.index(1, 3), s.index(1, 3), s.index(1, 2), s.index(1, 2)};
        const Shape shape{c, win.kh + s.index(0, 4), win.kw + s.index(0, 4)};
        const auto x = s.tensor(shape);
        const auto g = s.group();
        const auto gx = act(g, x);

        const auto spec = random_spec(s, c, s.index(1, 3), win);
        o.max_error = std::max(o.max_error, tensor_gap(wfm_conv(gx, spec), act(g, wfm_conv(x, spec))));

        GTransportSpec gt;
        for (std::size_t k = 0; k < c; ++k) {
            gt.log_scale.push_back(s.uniform(-1.0, 1.0));
            gt.angle.push_back(s.uniform(-kPi, kPi));
        }
        o.max_error = std::max(o.max_error, tensor_gap(g_transport(gx, gt), act(g, g_transport(x, gt))));

        const auto f1 = wfm_conv(x, spec);
        const auto align = random_spec(s, c, s.index(1, 3), win);
        o.max_error = std::max(o.max_error, tensor_gap(residual_combine(act(g, f1), gx, align),
                                                       act(g, residual_combine(f1, x, align))));
    }
    return o;
}

Outcome invariance(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    for (std::size_t i = 0; i < trials; ++i) {
        const Shape shape{s.index(1, 3), s.index(1, 6), s.index(1, 6)};
        const auto x = s.tensor(shape);
        std::vector<WeightVector> sets;
        for (std::size_t k = s.index(1, 2); k > 0; --k) sets.emplace_back(s.weights(shape.size()));
        const auto a = distance_transform(x, sets);
        const auto b = distance_transform(act(s.group(), x), sets);
        for (std::size_t k = 0; k < a.data.size(); ++k) o.max_error = std::max(o.max_error, std::abs(a.data[k] - b.data[k]));
    }
    return o;
}

Outcome trelu_property(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    const std::vector<std::pair<PolarComplex, PolarComplex>> quadrants = {
        {{0.5, -1.0}, {1.0, 0.0}}, {{2.0, 1.0}, {2.0, 1.0}}, {{0.5, 1.0}, {1.0, 1.0}}, {{2.0, -1.0}, {2.0, 0.0}}};
    ComplexTensor q(Shape{1, 1, quadrants.size()});
    for (std::size_t k = 0; k < quadrants.size(); ++k) q.data[k] = quadrants[k].first;
    const auto tq = trelu(q);
    for (std::size_t k = 0; k < quadrants.size(); ++k) {
        if (tq.data[k] != quadrants[k].second) {
            o.max_error = std::numeric_limits<double>::infinity();
            o.detail = "quadrant example " + std::to_string(k) + " differs";
        }
    }
    ComplexTensor x(Shape{1, 1, trials});
    for (auto& p : x.data) p = s.point();
    const auto once = trelu(x);
    const auto twice = trelu(once);
    for (std::size_t k = 0; k < trials; ++k) o.max_error = std::max(o.max_error, distance(once.data[k], twice.data[k]));

    // Activation, not a convolution: a generic g must not commute with it.
    const auto g = GroupElement{0.5, 2.0};
    if (tensor_gap(trelu(act(g, x)), act(g, trelu(x))) < 1e-3) {
        o.extra_ok = false;
        o.detail = "trelu unexpectedly commutes with the group action";
    }
    return o;
}

Outcome softmax_property(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    std::vector<double> logits;
    for (std::size_t i = 0; i < trials; ++i) {
        logits.resize(s.index(1, 50));
        for (auto& l : logits) l = s.uniform(-30.0, 30.0);
        const auto w = softmax(logits);
        const double sum = std::accumulate(w.begin(), w.end(), 0.0);
        o.max_error = std::max(o.max_error, std::abs(sum - 1.0));
        for (double x : w)
            if (!(x > 0.0)) o.max_error = std::numeric_limits<double>::infinity();
    }
    return o;
}

Outcome tensor_ring_property(Sampler& s, std::size_t trials) {
    Outcome o{0.0, trials, {}};
    for (std::size_t i = 0; i < trials; ++i) {
        TensorRingSpec spec;
        spec.rank = s.index(1, 4);
        spec.modes.resize(s.index(1, 4));
        for (auto& n : spec.modes) n = s.index(1, 6);
        const std::size_t sum = std::accumulate(spec.modes.begin(), spec.modes.end(), std::size_t{0});
        o.max_error = std::max(o.max_error, std::abs(static_cast<double>(tensor_ring_param_count(spec)) -
                                                     static_cast<double>(spec.rank * spec.rank * sum)));
    }
    ArchConfig cfg;
    cfg.input = {1, 100, 100};
    cfg.classes = 11;
    cfg.preset = Preset::table;
    cfg.tr_rank = 3;
    const auto model = build_model(cfg);
    // Each factorised layer holds b^2 * (out + in + kh + kw) core entries,
    // plus the bias for real convolutions.
    const std::size_t b2 = cfg.tr_rank * cfg.tr_rank;
    for (const auto& layer : model.layers()) {
        if (layer.kind != "wfm_conv" && layer.kind != "conv") continue;
        const std::string base = layer.name + (layer.kind == "conv" ? ".weight" : ".logits");
        std::size_t mode_sum = 0;
        for (int k = 0; k < 4; ++k) mode_sum += model.params().at(base + ".tr" + std::to_string(k)).shape[1];
        const std::size_t expected = b2 * mode_sum + (layer.kind == "conv" ? layer.out.c : 0);
        o.max_error = std::max(o.max_error, std::abs(static_cast<double>(layer.params) - static_cast<double>(expected)));
        if (model.params().at(base + ".tr0").shape[1] != layer.out.c ||
            model.params().at(base + ".tr1").shape[1] != layer.in.c) {
            o.max_error = std::numeric_limits<double>::infinity();
            o.detail = layer.name + ": cores do not follow (out, in, kh, kw)";
        }
    }
    return o;
}

ChartBatch random_chart(Sampler& s, std::size_t n, Shape shape) {
    ChartBatch b(n, shape);
    for (auto& v : b.logr) v = s.uniform(-2.0, 2.0);
    for (auto& v : b.theta) v = s.uniform(-kPi, kPi);
    return b;
}

ChartBatch act(GroupElement g, const ChartBatch& b) {
    ChartBatch out = b;
    const double ls = std::log(g.scale);
    for (auto& v : out.logr) v += ls;
    for (auto& v : out.theta) v = wrap_phase(v + g.angle);
    return out;
}

double logit_gap(const Model& model, Sampler& s, std::size_t inputs) {
    double worst = 0.0;
    for (std::size_t i = 0; i < inputs; ++i) {
        const auto x = random_chart(s, 1, model.input_shape());
        const auto a = predict(model, x);
        const auto b = predict(model, act(s.group(), x));
        double diff = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < a.data.size(); ++k) {
            diff = std::max(diff, std::abs(a.data[k] - b.data[k]));
            scale = std::max(scale, std::abs(a.data[k]));
        }
        worst = std::max(worst, diff / std::max(scale, std::numeric_limits<double>::min()));
    }
    return worst;
}

Outcome logit_invariance(Sampler& s, std::size_t trials) {
    ArchConfig cfg;
    cfg.input = {1, 100, 100};
    cfg.classes = 11;
    cfg.preset = Preset::table;
    cfg.seed = s.rng();
    auto model = build_model(cfg);
    // Random parameters: move the wFM logits and transports off their
    // symmetric initial values.
    for (auto* p : model.params().all()) {
        if (!p->learns()) continue;
        for (auto& v : p->value) v += s.uniform(-0.5, 0.5);
    }
    const std::size_t half = trials / 2;
    Outcome o{logit_gap(model, s, trials - half), trials, {}};

    // Trained parameters: a few optimiser steps on separable blobs.
    BlobSpec blobs;
    blobs.classes = 11;
    blobs.per_class = 1;
    blobs.height = blobs.width = 100;
    blobs.seed = s.rng();
    const auto data = gen_blobs(blobs);
    OptimizerConfig opt;
    opt.lr = 1e-2;
    // A few images are enough to move every parameter; the full set would
    // dominate the runtime.
    std::vector<std::size_t> idx(4);
    std::iota(idx.begin(), idx.end(), 0);
    for (int step = 0; step < 3; ++step) train_step(model, data.batch(idx), data.batch_labels(idx), opt);
    o.max_error = std::max(o.max_error, logit_gap(model, s, half));
    return o;
}

Model gradient_probe(int kind, std::uint64_t seed, Sampler& s) {
    const bool image = kind == 3;
    const Shape in = image ? Shape{2, 8, 8} : Shape{2, 1, 24};
    ModelBuilder b(in, true, seed, kind == 2 ? 2 : 0);
    const kernels::Window win = image ? kernels::Window{2, 2, 1, 1} : kernels::Window{1, 3, 1, 2};
    const kernels::ConvGeometry geom = image ? kernels::ConvGeometry{2, 2, 1, 1, 0, 0} : kernels::ConvGeometry{1, 3, 1, 1, 0, 0};
    if (kind == 1) {
        b.to_cartesian().conv(4, geom).batch_norm().relu().max_pool(1, 2, 1, 2).fully_connected(5).fully_connected(3);
    } else {
        b.wfm_conv(3, win).g_transport().trelu().wfm_residual(2, win, win).g_transport().distance_transform(2);
        b.conv(4, geom).batch_norm().relu().conv_stack_residual(!image);
        if (image)
            b.max_pool(2, 2, 2, 2);
        else
            b.max_pool(1, 2, 1, 2);
        b.fully_connected(5).fully_connected(3);
    }
    auto model = b.build("probe", 3);
    for (auto* p : model.params().all()) {
        if (!p->learns()) continue;
        for (auto& v : p->value) v += s.uniform(-0.2, 0.2);
    }
    return model;
}

Outcome gradient(Sampler& s, std::size_t seeds) {
    Outcome o{0.0, 0, {}};
    std::size_t checked = 0, excluded = 0;
    for (std::size_t seed = 1; seed <= seeds; ++seed) {
        for (int kind = 0; kind < 4; ++kind) {
            auto model = gradient_probe(kind, seed, s);
            const auto x = random_chart(s, 3, model.input_shape());
            GradCheckOptions opt;
            opt.seed = seed;
            opt.per_param = 0;
            const auto r = grad_check(model, x, opt);
            checked += r.checked;
            excluded += r.excluded;
            if (r.max_rel_error >= o.max_error) {
                o.max_error = r.max_rel_error;
                o.detail = "worst " + r.worst;
            }
        }
    }
    o.trials = checked;
    o.detail += ", " + std::to_string(excluded) + " entries excluded near kinks";
    return o;
}

const std::vector<Property>& registry() {
    static const std::vector<Property> props = {
        {"transitivity", 10000, 1e-12, transitivity},
        {"isometry", 10000, 1e-9, isometry},
        {"metric", 10000, 1e-12, metric},
        {"chart", 10000, 1e-12, chart},
        {"wrap", 10000, 0.0, wrap},
        {"equivariance", 1000, 1e-9, equivariance},
        {"contraction", 1000, 1e-12, contraction},
        {"wfm-oracle", 200, 1e-8, wfm_oracle},
        {"wfm-bruteforce", 200, 2e-3, wfm_brute},
        {"softmax", 10000, 1e-12, softmax_property},
        {"layer-equivariance", 200, 1e-9, layer_equivariance},
        {"invariance", 1000, 1e-9, invariance},
        {"trelu", 10000, 0.0, trelu_property},
        {"tensor-ring", 1000, 0.0, tensor_ring_property},
        {"logit-invariance", 100, 1e-6, logit_invariance},
        {"gradient", 20, 1e-4, gradient},
    };
    return props;
}

}  // namespace

const std::vector<std::string>& property_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& p : registry()) out.push_back(p.name);
        return out;
    }();
    return names;
}

PropertyResult run_property(const std::string& name, const VerifyOptions& options) {
    const auto& props = registry();
    const auto it = std::find_if(props.begin(), props.end(), [&](const Property& p) { return p.name == name; });
    if (it == props.end()) throw std::invalid_argument("unknown property '" + name + "'");
    // Each property draws from its own stream so results do not depend on
    // which other properties ran.
    std::seed_seq seq(name.begin(), name.end());
    std::vector<std::uint32_t> mix(2);
    seq.generate(mix.begin(), mix.end());
    Sampler sampler(options.seed ^ (static_cast<std::uint64_t>(mix[0]) << 32 | mix[1]));

    const auto start = std::chrono::steady_clock::now();
    const auto outcome = it->body(sampler, options.trials ? options.trials : it->default_trials);
    PropertyResult r;
    r.name = it->name;
    r.max_error = outcome.max_error;
    r.tolerance = it->tolerance;
    r.trials = outcome.trials;
    r.detail = outcome.detail;
    // Exact properties (tolerance 0) need zero error; the rest a strict bound.
    r.passed = outcome.extra_ok &&
               (it->tolerance > 0.0 ? outcome.max_error < it->tolerance : outcome.max_error == 0.0);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<PropertyResult> run_all(const VerifyOptions& options) {
    std::vector<PropertyResult> out;
    for (const auto& name : property_names()) out.push_back(run_property(name, options));
    return out;
}

}  // namespace surreal
