#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "surreal/data.hpp"
#include "surreal/layers.hpp"

using namespace surreal;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("surreal_test_" + name);
}

Dataset random_dataset(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dim(1, 4), count(0, 6);
    std::normal_distribution<float> v(0.0f, 2.0f);
    Dataset d;
    d.shape = {dim(rng), dim(rng), dim(rng)};
    d.num_classes = static_cast<std::uint32_t>(dim(rng) + 1);
    const std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
        d.labels.push_back(static_cast<std::uint32_t>(rng() % d.num_classes));
        for (std::size_t k = 0; k < d.shape.size(); ++k) d.values.emplace_back(v(rng), v(rng));
    }
    return d;
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
    return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

}  // namespace

TEST(Modulation, NoiselessBpskPhases) {
    ModulationSpec s;
    s.classes = {Modulation::bpsk};
    s.per_class = 4;
    s.snr_db = std::numeric_limits<double>::infinity();
    const auto d = gen_modulation(s);
    ASSERT_EQ(d.size(), 4u);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto raw = d.raw(i);
        for (std::size_t k = 0; k < raw.size(); k += s.samples_per_symbol) {
            // Symbol centres: the pulse has zero crossings at the other symbols.
            EXPECT_NEAR(raw[k].imag(), 0.0f, 1e-5f);
            EXPECT_GT(std::abs(raw[k].real()), 0.1f);
        }
    }
}

TEST(Modulation, UnitPower) {
    ModulationSpec s;
    s.per_class = 50;
    s.snr_db = std::numeric_limits<double>::infinity();
    const auto d = gen_modulation(s);
    double p = 0;
    for (const auto& v : d.values) p += std::norm(std::complex<double>(v));
    p /= static_cast<double>(d.values.size());
    EXPECT_GE(p, 0.95);
    EXPECT_LE(p, 1.05);
}

TEST(Modulation, DeterministicAndBalanced) {
    ModulationSpec s;
    s.per_class = 7;
    const auto a = encode_cvds(gen_modulation(s));
    const auto b = encode_cvds(gen_modulation(s));
    EXPECT_EQ(a, b);
    const auto d = gen_modulation(s);
    std::vector<std::size_t> counts(4);
    for (auto l : d.labels) ++counts[l];
    for (auto c : counts) EXPECT_EQ(c, 7u);
    s.seed = 8;
    EXPECT_NE(encode_cvds(gen_modulation(s)), a);
}

TEST(Modulation, Constellations) {
    EXPECT_EQ(constellation(Modulation::qpsk).size(), 4u);
    EXPECT_EQ(constellation(Modulation::psk8).size(), 8u);
    EXPECT_EQ(parse_modulation("8PSK"), Modulation::psk8);
    EXPECT_EQ(modulation_name(Modulation::pam4), "PAM4");
    EXPECT_THROW(parse_modulation("QAM64"), std::invalid_argument);
    EXPECT_DOUBLE_EQ(raised_cosine(0.0, 0.35), 1.0);
    EXPECT_NEAR(raised_cosine(1.0, 0.35), 0.0, 1e-15);
    EXPECT_NEAR(raised_cosine(1.0 / 0.7, 0.35), 0.35 / 2 * std::sin(kPi / 0.7), 1e-12);
}

TEST(Modulation, RejectsBadSnr) {
    ModulationSpec s;
    s.snr_db = std::nan("");
    EXPECT_THROW(gen_modulation(s), std::invalid_argument);
}

TEST(Blobs, EmptyAndNoiseless) {
    BlobSpec s;
    s.per_class = 0;
    EXPECT_EQ(gen_blobs(s).size(), 0u);
    s.classes = 2;
    s.per_class = 3;
    s.noise = 0.0;
    const auto d = gen_blobs(s);
    ASSERT_EQ(d.size(), 6u);
    for (std::size_t i = 1; i < 3; ++i) {
        EXPECT_TRUE(std::equal(d.raw(0).begin(), d.raw(0).end(), d.raw(i).begin()));
        EXPECT_TRUE(std::equal(d.raw(3).begin(), d.raw(3).end(), d.raw(3 + i).begin()));
    }
    EXPECT_FALSE(std::equal(d.raw(0).begin(), d.raw(0).end(), d.raw(3).begin()));
}

TEST(Blobs, LayoutSeedSharedAcrossSplits) {
    BlobSpec s;
    s.noise = 0.0;
    s.per_class = 1;
    const auto a = gen_blobs(s);
    s.seed = 99;
    const auto b = gen_blobs(s);
    EXPECT_EQ(a.values, b.values);
}

TEST(Augment, IdentityRange) {
    ModulationSpec ms;
    ms.per_class = 2;
    const auto d = gen_modulation(ms);
    AugmentSpec s;
    s.min_scale = s.max_scale = 1.0;
    s.min_angle = s.max_angle = 0.0;
    const auto a = augment_scale(d, s);
    EXPECT_EQ(a.data.values, d.values);
    EXPECT_EQ(a.data.labels, d.labels);
    ASSERT_EQ(a.draws.size(), d.size());
    for (const auto& g : a.draws) EXPECT_EQ(g, (GroupElement{1.0, 0.0}));
}

TEST(Augment, DrawsAreRecordedAndApplied) {
    ModulationSpec ms;
    ms.per_class = 3;
    const auto d = gen_modulation(ms);
    AugmentSpec s;
    s.seed = 5;
    const auto a = augment_scale(d, s);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& g = a.draws[i];
        EXPECT_GE(g.scale, 0.5);
        EXPECT_LE(g.scale, 2.0);
        const auto z = std::complex<double>(d.raw(i)[0]) * std::polar(g.scale, g.angle);
        EXPECT_NEAR(a.data.raw(i)[0].real(), z.real(), 1e-5);
        EXPECT_NEAR(a.data.raw(i)[0].imag(), z.imag(), 1e-5);
    }
    EXPECT_EQ(encode_cvds(augment_scale(d, s).data), encode_cvds(a.data));
}

TEST(Augment, DistanceFeaturesUnchanged) {
    ModulationSpec ms;
    ms.per_class = 1;
    const auto d = gen_modulation(ms);
    const auto a = augment_scale(d, {});
    const std::vector<WeightVector> w{WeightVector::uniform(d.shape.size())};
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto x = distance_transform(d.sample(i), w);
        const auto y = distance_transform(a.data.sample(i), w);
        // f32 storage of the scaled samples bounds the agreement.
        for (std::size_t k = 0; k < x.data.size(); ++k) EXPECT_NEAR(x.data[k], y.data[k], 1e-5);
    }
}

TEST(Dataset, ZeroValuesAreClamped) {
    Dataset d;
    d.shape = {1, 1, 2};
    d.num_classes = 1;
    d.labels = {0};
    d.values = {{0.0f, 0.0f}, {0.0f, 2.0f}};
    const auto t = d.sample(0);
    EXPECT_EQ(t.data[0], (PolarComplex{1e-6, 0.0}));
    EXPECT_DOUBLE_EQ(t.data[1].phase, kPi / 2);
}

TEST(Cvds, LengthFormula) {
    EXPECT_EQ(cvds_file_size(0, {1, 1, 1}), 24u);
    EXPECT_EQ(cvds_file_size(1, {1, 1, 2}), 44u);
    Dataset empty;
    empty.shape = {2, 3, 4};
    empty.num_classes = 3;
    const auto bytes = encode_cvds(empty);
    EXPECT_EQ(bytes.size(), 24u);
    EXPECT_EQ(std::memcmp(bytes.data(), "CVDS", 4), 0);
    EXPECT_EQ(read_u32(bytes, 20), 3u);
}

TEST(Cvds, LayoutIsLittleEndian) {
    Dataset d;
    d.shape = {1, 1, 2};
    d.num_classes = 2;
    d.labels = {1};
    d.values = {{1.0f, -2.0f}, {0.5f, 0.0f}};
    const auto b = encode_cvds(d);
    ASSERT_EQ(b.size(), 44u);
    EXPECT_EQ(read_u32(b, 4), 1u);
    EXPECT_EQ(read_u32(b, 12), 1u);
    EXPECT_EQ(read_u32(b, 16), 2u);
    EXPECT_EQ(read_u32(b, 20), 1u);
    float f;
    const std::uint32_t bits = read_u32(b, 28);
    std::memcpy(&f, &bits, 4);
    EXPECT_EQ(f, -2.0f);
    EXPECT_EQ(read_u32(b, 40), 2u);
}

TEST(Cvds, RoundTripRandomDatasets) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = random_dataset(rng);
        const auto bytes = encode_cvds(d);
        EXPECT_EQ(bytes.size(), cvds_file_size(d.size(), d.shape));
        const auto back = decode_cvds(bytes);
        EXPECT_EQ(back.shape, d.shape);
        EXPECT_EQ(back.labels, d.labels);
        EXPECT_EQ(back.values, d.values);
        EXPECT_EQ(back.num_classes, d.num_classes);
        EXPECT_EQ(encode_cvds(back), bytes);
    }
}

TEST(Cvds, FileRoundTrip) {
    ModulationSpec ms;
    ms.per_class = 3;
    const auto d = gen_modulation(ms);
    const auto path = temp_path("rt.cvds");
    write_cvds(path, d);
    EXPECT_EQ(std::filesystem::file_size(path), cvds_file_size(d.size(), d.shape));
    EXPECT_EQ(encode_cvds(read_cvds(path)), encode_cvds(d));
    std::filesystem::remove(path);
    EXPECT_THROW(read_cvds(path), std::runtime_error);
}

TEST(Cvds, RejectsCorruptInput) {
    ModulationSpec ms;
    ms.per_class = 1;
    auto bytes = encode_cvds(gen_modulation(ms));

    auto bad = bytes;
    std::memcpy(bad.data(), "XVDS", 4);
    try {
        decode_cvds(bad);
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "not a CVDS file");
    }

    bad = bytes;
    bad.pop_back();
    EXPECT_THROW(decode_cvds(bad), std::runtime_error);
    EXPECT_THROW(decode_cvds(std::span(bytes.data(), 10)), std::runtime_error);

    bad = bytes;
    bad.push_back(0);
    EXPECT_THROW(decode_cvds(bad), std::runtime_error);

    // A label outside the class count.
    bad = bytes;
    bad[20] = 200;
    EXPECT_THROW(decode_cvds(bad), std::runtime_error);
}
