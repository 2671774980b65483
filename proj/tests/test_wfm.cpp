#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "surreal/wfm.hpp"

using namespace surreal;

namespace {

struct Rand {
    std::mt19937_64 rng;
    explicit Rand(std::uint64_t s = 7) : rng(s) {}
    double u(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    std::size_t n(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }
};

// Weighted arithmetic mean in (log r, theta) with phases lifted around the
// first point; valid when the points sit within a short arc.
PolarComplex chart_mean(const std::vector<PolarComplex>& pts, const std::vector<double>& w) {
    double sw = 0, l = 0, t = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        sw += w[k];
        l += w[k] * std::log(pts[k].magnitude);
        t += w[k] * (pts[0].phase + wrap_phase(pts[k].phase - pts[0].phase));
    }
    return {std::exp(l / sw), wrap_phase(t / sw)};
}

struct Cluster {
    std::vector<PolarComplex> pts;
    std::vector<double> w;
};

Cluster cluster(Rand& r, double arc, std::size_t max_points = 25) {
    Cluster c;
    const std::size_t n = r.n(1, max_points);
    const double centre = r.u(-kPi, kPi), lc = r.u(-2, 2);
    for (std::size_t k = 0; k < n; ++k) {
        c.pts.push_back({std::exp(lc + r.u(-1, 1)), wrap_phase(centre + r.u(-arc / 2, arc / 2))});
        c.w.push_back(r.u(0.01, 1.0));
    }
    return c;
}

}  // namespace

TEST(WeightVector, Normalises) {
    const WeightVector w({1, 3});
    EXPECT_DOUBLE_EQ(w[0], 0.25);
    EXPECT_DOUBLE_EQ(w[1], 0.75);
    EXPECT_EQ(WeightVector::uniform(4)[2], 0.25);
}

TEST(WeightVector, Rejects) {
    EXPECT_THROW(WeightVector({0, 0}), std::invalid_argument);
    EXPECT_THROW(WeightVector({1, -1}), std::invalid_argument);
    EXPECT_THROW(WeightVector({1, NAN}), std::invalid_argument);
}

TEST(Incremental, SinglePoint) {
    const std::vector<PolarComplex> p{{2.5, -1.0}};
    EXPECT_EQ(wfm_incremental(p, WeightVector({1.0})), p[0]);
}

TEST(Incremental, SymmetricPair) {
    const std::vector<PolarComplex> p{{1, kPi / 6}, {1, -kPi / 6}};
    const auto m = wfm_incremental(p, WeightVector({0.5, 0.5}));
    EXPECT_NEAR(m.magnitude, 1.0, 1e-15);
    EXPECT_NEAR(m.phase, 0.0, 1e-15);
}

TEST(Incremental, FourPointChartMean) {
    const std::vector<PolarComplex> p{{1, 0.1}, {2, 0.2}, {3, 0.3}, {4, 0.4}};
    const auto oracle = chart_mean(p, {1, 1, 1, 1});
    EXPECT_NEAR(oracle.magnitude, 2.21336, 1e-5);
    const auto m = wfm_incremental(p, WeightVector::uniform(4));
    EXPECT_NEAR(m.magnitude, std::pow(24.0, 0.25), 1e-12);
    EXPECT_NEAR(m.phase, 0.25, 1e-12);
}

TEST(Incremental, ZeroLeadingWeightsSkipped) {
    const std::vector<PolarComplex> p{{9, 3.0}, {2, 0.5}};
    EXPECT_LT(distance(wfm_incremental(p, WeightVector({0.0, 1.0})), p[1]), 1e-15);
}

TEST(Incremental, RawWeightsMatchNormalised) {
    const std::vector<PolarComplex> p{{1, 0.1}, {2, -0.4}, {0.5, 0.9}};
    const std::vector<double> raw{2, 1, 5};
    EXPECT_LT(distance(wfm_incremental(p, raw), wfm_incremental(p, WeightVector(raw))), 1e-14);
}

TEST(Incremental, LengthMismatch) {
    const std::vector<PolarComplex> p{{1, 0}};
    EXPECT_THROW(wfm_incremental(p, WeightVector::uniform(2)), std::invalid_argument);
}

TEST(FixedPoint, FourPoint) {
    const std::vector<PolarComplex> p{{1, 0.1}, {2, 0.2}, {3, 0.3}, {4, 0.4}};
    const auto r = wfm_fixed_point(p, WeightVector::uniform(4));
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.mean.magnitude, std::pow(24.0, 0.25), 1e-10);
    EXPECT_NEAR(r.mean.phase, 0.25, 1e-10);
}

TEST(FixedPoint, TwoPointsUnchanged) {
    const std::vector<PolarComplex> p{{0.3, 2.9}, {1.7, -2.8}};
    const WeightVector w({0.3, 0.7});
    const auto r = wfm_fixed_point(p, w);
    EXPECT_LT(distance(r.mean, wfm_incremental(p, w)), 1e-10);
}

TEST(FixedPoint, DispersedAcrossCutAgreesWithBruteforce) {
    Rand r(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto c = cluster(r, 2.0, 8);
        const WeightVector w(c.w);
        const auto fp = wfm_fixed_point(c.pts, w).mean;
        const auto bf = wfm_bruteforce(c.pts, w, 512);
        EXPECT_LT(distance(fp, bf), 2e-2) << "trial " << trial;
        EXPECT_LE(wfm_objective(c.pts, w, fp), wfm_objective(c.pts, w, bf) + 1e-9);
    }
}

TEST(Bruteforce, EqualPoints) {
    const std::vector<PolarComplex> p{{1.5, 0.7}, {1.5, 0.7}};
    const auto m = wfm_bruteforce(p, WeightVector::uniform(2), 64);
    EXPECT_LT(distance(m, p[0]), 1e-12);
}

TEST(Bruteforce, FourPoint) {
    const std::vector<PolarComplex> p{{1, 0.1}, {2, 0.2}, {3, 0.3}, {4, 0.4}};
    const auto m = wfm_bruteforce(p, WeightVector::uniform(4), 1024);
    EXPECT_NEAR(m.magnitude, std::pow(24.0, 0.25), 1e-3);
    EXPECT_NEAR(m.phase, 0.25, 1e-3);
}

TEST(Bruteforce, Guards) {
    const std::vector<PolarComplex> many(17, PolarComplex{1, 0});
    EXPECT_THROW(wfm_bruteforce(many, WeightVector::uniform(17), 64), std::invalid_argument);
    const std::vector<PolarComplex> p{{1, 0}};
    EXPECT_THROW(wfm_bruteforce(p, WeightVector::uniform(1), 4096), std::invalid_argument);
}

// A small trapezoid: the equal-weight mean is the geometric mean of the
// magnitudes and the mean of the phases, and moves with the trapezoid.
TEST(Trapezoid, MeanAndTransport) {
    const std::vector<PolarComplex> p{{1.0, 0.30}, {1.0, 0.50}, {1.3, 0.22}, {1.3, 0.58}};
    const auto w = WeightVector::uniform(4);
    const auto m = wfm_incremental(p, w);
    EXPECT_NEAR(m.magnitude, std::sqrt(1.3), 1e-12);
    EXPECT_NEAR(m.phase, 0.40, 1e-12);
    EXPECT_LT(distance(m, wfm_bruteforce(p, w, 1024)), 1e-3);

    const GroupElement g{1.5, 100 * kPi / 180};
    std::vector<PolarComplex> q;
    for (const auto& x : p) q.push_back(act(g, x));
    EXPECT_LT(distance(wfm_incremental(q, w), act(g, m)), 1e-12);
    for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(distance(p[k], m), distance(q[k], act(g, m)), 1e-12);
}

TEST(Properties, Equivariance) {
    Rand r(11);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        auto c = cluster(r, 2 * kPi);
        const WeightVector w(c.w);
        const GroupElement g{std::exp(r.u(-3, 3)), r.u(-kPi, kPi)};
        std::vector<PolarComplex> moved;
        for (const auto& p : c.pts) moved.push_back(act(g, p));
        worst = std::max(worst, distance(act(g, wfm_incremental(c.pts, w)), wfm_incremental(moved, w)));
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Properties, OracleAgreementShortArc) {
    Rand r(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto c = cluster(r, kPi / 2 - 1e-3);
        const WeightVector w(c.w);
        const auto oracle = chart_mean(c.pts, c.w);
        const auto inc = wfm_incremental(c.pts, w);
        EXPECT_LT(distance(inc, oracle), 1e-8);
        EXPECT_LT(distance(wfm_fixed_point(c.pts, w).mean, oracle), 1e-8);
        if (c.pts.size() <= kBruteforceMaxPoints) EXPECT_LT(distance(wfm_bruteforce(c.pts, w, 256), oracle), 1e-2);
    }
}

TEST(Properties, ContractionAndConvexity) {
    Rand r(9);
    for (int trial = 0; trial < 1000; ++trial) {
        auto c = cluster(r, r.u(0.0, kPi - 1e-3));
        const double ref = c.pts[0].phase;
        double lo_l = INFINITY, hi_l = -INFINITY, lo_t = INFINITY, hi_t = -INFINITY;
        for (const auto& p : c.pts) {
            const double l = std::log(p.magnitude), t = ref + wrap_phase(p.phase - ref);
            lo_l = std::min(lo_l, l), hi_l = std::max(hi_l, l);
            lo_t = std::min(lo_t, t), hi_t = std::max(hi_t, t);
        }
        // Reweighting, including near-degenerate weights, stays in the box.
        for (int rw = 0; rw < 3; ++rw) {
            std::vector<double> w = c.w;
            w[r.n(0, w.size() - 1)] *= r.u(0, 50);
            const auto m = wfm_incremental(c.pts, WeightVector(w));
            const double l = std::log(m.magnitude), t = ref + wrap_phase(m.phase - ref);
            EXPECT_GE(l, lo_l - 1e-12);
            EXPECT_LE(l, hi_l + 1e-12);
            EXPECT_GE(t, lo_t - 1e-12);
            EXPECT_LE(t, hi_t + 1e-12);
        }
    }
}
