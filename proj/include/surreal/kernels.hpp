#pragma once

// Batched compute kernels behind the network layers. The default namespace
// holds the OpenMP versions used in training; kernels::reference holds
// straightforward serial versions written against the public manifold/wfm
// API, kept for tests and benchmarks.
//
// Complex feature maps arrive in chart coordinates (log r, theta). Gradients
// with respect to complex values are taken in the same coordinates, with the
// phase wrap treated as locally the identity.

#include <cstdint>
#include <span>
#include <vector>

#include "surreal/tensor.hpp"

namespace surreal::kernels {

struct Window {
    std::size_t kh = 1, kw = 1;
    std::size_t sh = 1, sw = 1;
};

struct ConvGeometry {
    std::size_t kh = 1, kw = 1;
    std::size_t sh = 1, sw = 1;
    std::size_t ph = 0, pw = 0;
};

/// Per-sample hashes of every discrete branch taken (phase lifts in the wFM
/// recursion, wraps in distances). Only filled when requested.
using KinkLog = std::vector<std::uint64_t>;

inline std::uint64_t kink_mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

Shape wfm_conv_shape(Shape in, std::size_t out_channels, Window win);

/// weights: out_channels x (in.c * kh * kw), rows nonnegative.
void wfm_conv_forward(const ChartBatch& in, std::span<const double> weights, std::size_t out_channels, Window win,
                      ChartBatch& out, KinkLog* kinks = nullptr);

/// Accumulates into gin_* (size in.size()) and gweights.
void wfm_conv_backward(const ChartBatch& in, std::span<const double> weights, std::size_t out_channels, Window win,
                       std::span<const double> gout_logr, std::span<const double> gout_theta,
                       std::span<double> gin_logr, std::span<double> gin_theta, std::span<double> gweights);

/// weights: sets x in.shape.size(). Output has sets * in.c channels; the
/// per-(sample, set) means are returned in chart coordinates.
void distance_forward(const ChartBatch& in, std::span<const double> weights, std::size_t sets, RealBatch& out,
                      std::vector<double>& mean_logr, std::vector<double>& mean_theta, KinkLog* kinks = nullptr);

void distance_backward(const ChartBatch& in, std::span<const double> weights, std::size_t sets, const RealBatch& out,
                       std::span<const double> mean_logr, std::span<const double> mean_theta,
                       std::span<const double> gout, std::span<double> gin_logr, std::span<double> gin_theta,
                       std::span<double> gweights);

Shape conv2d_shape(Shape in, std::size_t out_channels, ConvGeometry geom);

/// weights: out x in x kh x kw; bias: out (may be empty).
void conv2d_forward(const RealBatch& in, std::span<const double> weights, std::span<const double> bias,
                    std::size_t out_channels, ConvGeometry geom, RealBatch& out);

/// gin may be empty when the input needs no gradient.
void conv2d_backward(const RealBatch& in, std::span<const double> weights, std::size_t out_channels,
                     ConvGeometry geom, std::span<const double> gout, std::span<double> gin, std::span<double> gweights,
                     std::span<double> gbias);

namespace reference {

void wfm_conv_forward(const ChartBatch& in, std::span<const double> weights, std::size_t out_channels, Window win,
                      ChartBatch& out);

void distance_forward(const ChartBatch& in, std::span<const double> weights, std::size_t sets, RealBatch& out);

void conv2d_forward(const RealBatch& in, std::span<const double> weights, std::span<const double> bias,
                    std::size_t out_channels, ConvGeometry geom, RealBatch& out);

}  // namespace reference

}  // namespace surreal::kernels
