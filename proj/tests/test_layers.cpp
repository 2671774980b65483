#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "surreal/layers.hpp"
#include "surreal/model.hpp"
#include "surreal/tensor_ring.hpp"

using namespace surreal;

namespace {

struct Rand {
    std::mt19937_64 rng;
    explicit Rand(std::uint64_t s = 3) : rng(s) {}
    double u(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    GroupElement g() { return {std::exp(u(-2, 2)), u(-kPi, kPi)}; }
    ComplexTensor tensor(Shape s) {
        ComplexTensor t(s);
        for (auto& p : t.data) p = {std::exp(u(-2, 2)), u(-kPi, kPi)};
        return t;
    }
    WfmConvSpec spec(std::size_t in, std::size_t out, kernels::Window w) {
        auto s = WfmConvSpec::uniform(in, out, w);
        for (auto& l : s.logits) l = u(-2, 2);
        return s;
    }
};

double max_distance(const ComplexTensor& a, const ComplexTensor& b) {
    EXPECT_EQ(a.shape, b.shape);
    double worst = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) worst = std::max(worst, distance(a.data[k], b.data[k]));
    return worst;
}

std::size_t trainable(const Model& m) { return m.params().trainable_count(); }

}  // namespace

TEST(Softmax, PositiveAndNormalised) {
    Rand r;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> l(7);
        for (auto& x : l) x = r.u(-30, 30);
        const auto w = softmax(l);
        EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
        for (double x : w) EXPECT_GT(x, 0.0);
    }
    const auto u = softmax(std::vector<double>(4, 0.0));
    for (double x : u) EXPECT_EQ(x, 0.25);
}

TEST(WfmConv, IdentityKernel) {
    Rand r;
    const auto x = r.tensor({1, 4, 5});
    const auto y = wfm_conv(x, WfmConvSpec::uniform(1, 1, {1, 1, 1, 1}));
    EXPECT_EQ(max_distance(x, y), 0.0);
}

TEST(WfmConv, TableShape) {
    const auto y = wfm_conv(ComplexTensor({1, 100, 100}), WfmConvSpec::uniform(1, 20, {5, 5, 2, 2}));
    EXPECT_EQ(y.shape, (Shape{20, 48, 48}));
    const auto z = wfm_conv(y, WfmConvSpec::uniform(20, 20, {5, 5, 2, 2}));
    EXPECT_EQ(z.shape, (Shape{20, 22, 22}));
}

TEST(WfmConv, ConstantImage) {
    const PolarComplex v{1.7, -2.2};
    const auto y = wfm_conv(ComplexTensor({2, 6, 6}, v), WfmConvSpec::uniform(2, 3, {2, 2, 1, 1}));
    for (const auto& p : y.data) EXPECT_LT(distance(p, v), 1e-14);
}

TEST(WfmConv, MatchesPointwiseMean) {
    Rand r;
    const auto x = r.tensor({2, 3, 3});
    const auto spec = r.spec(2, 1, {2, 2, 1, 1});
    const auto y = wfm_conv(x, spec);
    // Output (0, 1, 1): window rows 1..2, cols 1..2, channel-major.
    std::vector<PolarComplex> pts;
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) pts.push_back(x.at(c, 1 + i, 1 + j));
    EXPECT_LT(distance(y.at(0, 1, 1), wfm_incremental(pts, WeightVector(spec.weights()))), 1e-14);
}

TEST(TRelu, QuadrantRegions) {
    ComplexTensor x({1, 1, 4});
    x.data = {{0.5, -1}, {2, 1}, {0.5, 1}, {2, -1}};
    const auto y = trelu(x);
    EXPECT_EQ(y.data[0], (PolarComplex{1, 0}));
    EXPECT_EQ(y.data[1], (PolarComplex{2, 1}));
    EXPECT_EQ(y.data[2], (PolarComplex{1, 1}));
    EXPECT_EQ(y.data[3], (PolarComplex{2, 0}));
}

TEST(TRelu, Idempotent) {
    Rand r;
    const auto x = r.tensor({1, 100, 100});
    const auto y = trelu(x);
    EXPECT_EQ(trelu(y).data, y.data);
}

TEST(TRelu, NotEquivariant) {
    Rand r;
    const auto x = r.tensor({1, 8, 8});
    const GroupElement g{0.5, 2.0};
    EXPECT_GT(max_distance(trelu(act(g, x)), act(g, trelu(x))), 0.1);
}

TEST(GTransport, Identity) {
    Rand r;
    const auto x = r.tensor({3, 4, 4});
    EXPECT_EQ(max_distance(g_transport(x, GTransportSpec::identity(3)), x), 0.0);
}

TEST(GTransport, KnownAction) {
    Rand r;
    const auto x = r.tensor({1, 3, 3});
    const auto y = g_transport(x, GTransportSpec::constant(1, {1.5, 100 * kPi / 180}));
    for (std::size_t k = 0; k < x.data.size(); ++k) {
        EXPECT_NEAR(y.data[k].magnitude, 1.5 * x.data[k].magnitude, 1e-12);
        EXPECT_NEAR(wrap_phase(y.data[k].phase - x.data[k].phase - 100 * kPi / 180), 0.0, 1e-12);
    }
}

TEST(GTransport, Composition) {
    Rand r;
    const auto x = r.tensor({1, 5, 5});
    const auto g = r.g(), h = r.g();
    const auto two = g_transport(g_transport(x, GTransportSpec::constant(1, h)), GTransportSpec::constant(1, g));
    const auto one = g_transport(x, GTransportSpec::constant(1, compose(g, h)));
    EXPECT_LT(max_distance(two, one), 1e-12);
}

TEST(DistanceTransform, ConstantInputIsZero) {
    const ComplexTensor x({3, 4, 4}, PolarComplex{2.0, 1.0});
    const auto y = distance_transform(x, {WeightVector::uniform(48)});
    for (double v : y.data) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(DistanceTransform, SymmetricPair) {
    ComplexTensor x({1, 1, 2});
    x.data = {{1, kPi / 6}, {1, -kPi / 6}};
    const auto y = distance_transform(x, {WeightVector::uniform(2)});
    EXPECT_NEAR(y.data[0], std::sqrt(2.0) * kPi / 6, 1e-14);
    EXPECT_NEAR(y.data[1], std::sqrt(2.0) * kPi / 6, 1e-14);
}

TEST(DistanceTransform, SetsStackOnChannels) {
    Rand r;
    const auto x = r.tensor({2, 3, 3});
    std::vector<double> a(18), b(18);
    for (auto& v : a) v = r.u(0.1, 1);
    for (auto& v : b) v = r.u(0.1, 1);
    const auto both = distance_transform(x, {WeightVector(a), WeightVector(b)});
    const auto first = distance_transform(x, {WeightVector(a)});
    const auto second = distance_transform(x, {WeightVector(b)});
    EXPECT_EQ(both.shape, (Shape{4, 3, 3}));
    for (std::size_t k = 0; k < 18; ++k) {
        EXPECT_EQ(both.data[k], first.data[k]);
        EXPECT_EQ(both.data[18 + k], second.data[k]);
    }
}

TEST(DistanceTransform, Invariance) {
    Rand r;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = r.tensor({3, 4, 4});
        std::vector<double> w(48);
        for (auto& v : w) v = r.u(0.01, 1);
        const auto g = r.g();
        const auto a = distance_transform(x, {WeightVector(w)});
        const auto b = distance_transform(act(g, x), {WeightVector(w)});
        for (std::size_t k = 0; k < a.data.size(); ++k) worst = std::max(worst, std::abs(a.data[k] - b.data[k]));
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Residual, TableShapes) {
    const ComplexTensor f1({20, 22, 22}), f2({20, 48, 48});
    const auto y = residual_combine(f1, f2, WfmConvSpec::uniform(20, 20, {5, 5, 2, 2}));
    EXPECT_EQ(y.shape, (Shape{40, 22, 22}));
}

TEST(Residual, SelfWithIdentityAlignDuplicates) {
    Rand r;
    const auto x = r.tensor({2, 3, 3});
    auto align = WfmConvSpec::uniform(2, 2, {1, 1, 1, 1});
    align.logits = {50, -50, -50, 50};
    const auto y = residual_combine(x, x, align);
    EXPECT_EQ(y.shape, (Shape{4, 3, 3}));
    for (std::size_t k = 0; k < x.data.size(); ++k) {
        EXPECT_EQ(y.data[k], x.data[k]);
        EXPECT_LT(distance(y.data[x.data.size() + k], x.data[k]), 1e-12);
    }
}

TEST(Equivariance, Layers) {
    Rand r;
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = r.tensor({2, 6, 6});
        const auto g = r.g();
        const auto conv = r.spec(2, 3, {3, 3, 1, 1});
        EXPECT_LT(max_distance(wfm_conv(act(g, x), conv), act(g, wfm_conv(x, conv))), 1e-9);
        GTransportSpec gt{{r.u(-1, 1), r.u(-1, 1)}, {r.u(-3, 3), r.u(-3, 3)}};
        EXPECT_LT(max_distance(g_transport(act(g, x), gt), act(g, g_transport(x, gt))), 1e-9);
        const auto f1 = wfm_conv(x, r.spec(2, 2, {2, 2, 2, 2}));
        const auto align = r.spec(2, 2, {2, 2, 2, 2});
        EXPECT_LT(max_distance(residual_combine(act(g, f1), act(g, x), align), act(g, residual_combine(f1, x, align))),
                  1e-9);
    }
}

TEST(TensorRing, SingleCoreIsItself) {
    auto spec = TensorRingSpec::zeros({5}, 1);
    spec.cores[0] = {1, 2, 3, 4, 5};
    EXPECT_EQ(tensor_ring_reconstruct(spec), spec.cores[0]);
}

TEST(TensorRing, Counts) {
    const auto spec = TensorRingSpec::zeros({5, 5, 10}, 4);
    EXPECT_EQ(tensor_ring_param_count(spec), 320u);
    EXPECT_EQ(tensor_ring_dense_count(spec), 250u);
}

TEST(TensorRing, TraceFormula) {
    Rand r;
    auto spec = TensorRingSpec::zeros({2, 3}, 2);
    for (auto& c : spec.cores)
        for (auto& v : c) v = r.u(-1, 1);
    const auto w = tensor_ring_reconstruct(spec);
    auto core = [&](std::size_t k, std::size_t a, std::size_t i, std::size_t b) {
        return spec.cores[k][(a * spec.modes[k] + i) * 2 + b];
    };
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double tr = 0;
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t b = 0; b < 2; ++b) tr += core(0, a, i, b) * core(1, b, j, a);
            EXPECT_NEAR(w[i * 3 + j], tr, 1e-14);
        }
}

TEST(TensorRing, RefitRoundTrip) {
    Rand r(17);
    auto target_spec = TensorRingSpec::zeros({2, 2, 2}, 2);
    for (auto& c : target_spec.cores)
        for (auto& v : c) v = r.u(-1, 1);
    const auto target = tensor_ring_reconstruct(target_spec);
    auto spec = target_spec;
    for (auto& c : spec.cores)
        for (auto& v : c) v += r.u(-0.1, 0.1);
    for (int it = 0; it < 20000; ++it) {
        const auto w = tensor_ring_reconstruct(spec);
        std::vector<double> diff(w.size());
        for (std::size_t k = 0; k < w.size(); ++k) diff[k] = w[k] - target[k];
        std::vector<std::vector<double>> g;
        for (const auto& c : spec.cores) g.emplace_back(c.size(), 0.0);
        tensor_ring_backward(spec, diff, g);
        for (std::size_t k = 0; k < spec.cores.size(); ++k)
            for (std::size_t j = 0; j < spec.cores[k].size(); ++j) spec.cores[k][j] -= 0.05 * g[k][j];
    }
    const auto w = tensor_ring_reconstruct(spec);
    for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(w[k], target[k], 1e-6);
}

TEST(Model, TableChainShapes) {
    ArchConfig cfg;
    cfg.input = {1, 100, 100};
    cfg.classes = 11;
    const auto m = build_model(cfg);
    std::vector<std::pair<std::string, Shape>> expect{
        {"wfm_conv", {20, 48, 48}}, {"g_transport", {20, 48, 48}}, {"wfm_conv", {20, 22, 22}},
        {"g_transport", {20, 22, 22}}, {"distance_transform", {20, 22, 22}}, {"conv", {30, 18, 18}},
        {"batch_norm", {30, 18, 18}}, {"relu", {30, 18, 18}}, {"max_pool", {30, 9, 9}},
        {"conv", {30, 2, 2}}, {"batch_norm", {30, 2, 2}}, {"relu", {30, 2, 2}},
        {"conv", {30, 1, 1}}, {"batch_norm", {30, 1, 1}}, {"relu", {30, 1, 1}},
        {"fully_connected", {50, 1, 1}}, {"fully_connected", {11, 1, 1}}};
    ASSERT_EQ(m.layers().size(), expect.size());
    for (std::size_t k = 0; k < expect.size(); ++k) {
        EXPECT_EQ(m.layers()[k].kind, expect[k].first) << k;
        EXPECT_EQ(m.layers()[k].out, expect[k].second) << k;
    }
}

TEST(Model, ResidualShapes) {
    ArchConfig cfg;
    cfg.arch = Arch::surreal_res;
    cfg.input = {1, 100, 100};
    cfg.classes = 11;
    const auto m = build_model(cfg);
    std::map<std::string, Shape> by_name;
    for (const auto& l : m.layers()) by_name[l.name] = l.out;
    EXPECT_EQ(by_name["wfmres1"], (Shape{40, 22, 22}));
    EXPECT_EQ(by_name["conv1"], (Shape{30, 18, 18}));
    EXPECT_EQ(by_name["pool1"], (Shape{30, 9, 9}));
    EXPECT_EQ(by_name["conv2"], (Shape{50, 2, 2}));
    EXPECT_EQ(by_name["conv3"], (Shape{70, 1, 1}));
    EXPECT_EQ(by_name["fc2"], (Shape{11, 1, 1}));
}

TEST(Model, ParameterCounts) {
    ArchConfig cfg;
    cfg.input = {1, 100, 100};
    cfg.classes = 11;
    const auto surreal = build_model(cfg);
    EXPECT_NEAR(static_cast<double>(trainable(surreal)), 67000.0, 6700.0);
    cfg.arch = Arch::real_baseline;
    EXPECT_GT(trainable(build_model(cfg)), trainable(surreal));
}

TEST(Model, TensorRingCounts) {
    ArchConfig cfg;
    cfg.input = {1, 100, 100};
    cfg.classes = 11;
    cfg.tr_rank = 3;
    const auto m = build_model(cfg);
    // wfm1 logits: modes (20, 1, 5, 5); wfm2: (20, 20, 5, 5).
    EXPECT_EQ(m.layers()[0].params, 9u * (20 + 1 + 5 + 5));
    EXPECT_EQ(m.layers()[2].params, 9u * (20 + 20 + 5 + 5));
    std::size_t cores = 0;
    for (const auto* p : m.params().all())
        if (p->name.starts_with("wfm1.logits.tr")) cores += p->size();
    EXPECT_EQ(cores, 9u * 31);
}

TEST(Model, TablePresetNeedsImage) {
    ArchConfig cfg;
    cfg.input = {1, 1, 128};
    cfg.preset = Preset::table;
    EXPECT_THROW(build_model(cfg), std::invalid_argument);
}

TEST(Model, LogitInitSpreadsChannels) {
    ArchConfig cfg;
    cfg.input = {1, 1, 128};
    const auto flat = build_model(cfg);
    for (double v : flat.params().at("wfm1.logits").value) EXPECT_EQ(v, 0.0);
    cfg.logit_init = 2.0;
    const auto spread = build_model(cfg);
    const auto& l = spread.params().at("wfm1.logits").value;
    EXPECT_NE(l[0], l[5]);
}
