#pragma once

// Labeled complex-valued datasets: synthetic generators, complex-scaling
// augmentation and the CVDS binary format.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "surreal/manifold.hpp"
#include "surreal/tensor.hpp"

namespace surreal {

/// Samples stored as acquired: Cartesian f32 values, converted to the
/// manifold (with the zero clamp) on access.
struct Dataset {
    Shape shape;
    std::uint32_t num_classes = 0;
    std::vector<std::uint32_t> labels;
    std::vector<std::complex<float>> values;  // size() * shape.size()

    std::size_t size() const { return labels.size(); }
    std::span<const std::complex<float>> raw(std::size_t i) const;
    ComplexTensor sample(std::size_t i) const;
    /// Chart-coordinate batch of the listed samples.
    ChartBatch batch(std::span<const std::size_t> indices) const;
    std::vector<std::uint32_t> batch_labels(std::span<const std::size_t> indices) const;

    void push(const ComplexTensor& t, std::uint32_t label);
    void push(std::span<const std::complex<double>> values, std::uint32_t label);
};

enum class Modulation { bpsk, qpsk, psk8, pam4 };

Modulation parse_modulation(const std::string& name);
std::string modulation_name(Modulation m);
std::vector<std::complex<double>> constellation(Modulation m);

struct ModulationSpec {
    std::vector<Modulation> classes{Modulation::bpsk, Modulation::qpsk, Modulation::psk8, Modulation::pam4};
    std::size_t per_class = 100;
    std::size_t length = 128;
    double snr_db = 10.0;  // +inf disables noise
    std::uint64_t seed = 7;
    std::size_t samples_per_symbol = 4;
    double rolloff = 0.35;
    std::size_t span_symbols = 8;
};

/// Raised-cosine impulse response sampled at 1/samples_per_symbol.
double raised_cosine(double t_symbols, double rolloff);

/// Symbols drawn per class, pulse shaped, normalised to unit power, then AWGN.
/// Samples are class-major; symbol centres sit at multiples of the
/// samples-per-symbol factor.
Dataset gen_modulation(const ModulationSpec& spec);

struct BlobSpec {
    std::size_t classes = 4;
    std::size_t per_class = 50;
    std::size_t height = 32;
    std::size_t width = 32;
    double noise = 0.1;
    std::uint64_t seed = 7;
    /// Seeds the per-class templates; keep it fixed across train/test splits.
    std::uint64_t layout_seed = 1234;
};

/// Each class is a fixed Gaussian-blob layout with a class-specific phase
/// ramp; samples add circular Gaussian noise.
Dataset gen_blobs(const BlobSpec& spec);

struct AugmentSpec {
    double min_scale = 0.5;
    double max_scale = 2.0;  // log-uniform in [min, max]
    double min_angle = -kPi;
    double max_angle = kPi;  // uniform
    std::uint64_t seed = 1;
};

struct Augmented {
    Dataset data;
    std::vector<GroupElement> draws;  // one per sample
};

/// Applies one random complex scaling per sample; labels are unchanged.
Augmented augment_scale(const Dataset& data, const AugmentSpec& spec);

// CVDS: "CVDS", u32 n, u32 c, u32 h, u32 w, then per sample a u32 label and
// c*h*w (re, im) f32 pairs, then a u32 class count. All little-endian.
inline constexpr std::size_t kCvdsHeaderBytes = 20;

std::size_t cvds_file_size(std::size_t n, Shape shape);
std::vector<std::uint8_t> encode_cvds(const Dataset& data);
/// Throws std::runtime_error("not a CVDS file") / ("truncated dataset").
Dataset decode_cvds(std::span<const std::uint8_t> bytes);

void write_cvds(const std::filesystem::path& path, const Dataset& data);
Dataset read_cvds(const std::filesystem::path& path);

}  // namespace surreal
