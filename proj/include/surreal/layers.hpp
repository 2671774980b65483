#pragma once

// Single-tensor forms of the complex-valued layers. Training goes through the
// tape primitives in ops.hpp; these wrappers share the same kernels.

#include <vector>

#include "surreal/kernels.hpp"
#include "surreal/tensor.hpp"
#include "surreal/wfm.hpp"

namespace surreal {

/// wFM convolution: each output channel is the weighted Frechet mean over a
/// kh x kw window spanning every input channel. Weights are the row-wise
/// softmax of the logits, so they are positive and sum to one.
struct WfmConvSpec {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    kernels::Window window;
    /// out_channels x (in_channels * kh * kw); zeros give uniform weights.
    std::vector<double> logits;

    static WfmConvSpec uniform(std::size_t in_channels, std::size_t out_channels, kernels::Window window);
    std::size_t taps() const { return in_channels * window.kh * window.kw; }
    std::vector<double> weights() const;
};

/// Per-channel group elements stored as unconstrained (log_scale, angle).
struct GTransportSpec {
    std::vector<double> log_scale;
    std::vector<double> angle;

    static GTransportSpec identity(std::size_t channels);
    static GTransportSpec constant(std::size_t channels, GroupElement g);
    GroupElement element(std::size_t channel) const;
    std::size_t channels() const { return log_scale.size(); }
};

std::vector<double> softmax(std::span<const double> logits);

ComplexTensor wfm_conv(const ComplexTensor& input, const WfmConvSpec& spec);
ComplexTensor trelu(const ComplexTensor& input);
ComplexTensor g_transport(const ComplexTensor& input, const GTransportSpec& spec);

/// One output block of input.shape.c channels per weight set, stacked along
/// the channel axis.
RealTensor distance_transform(const ComplexTensor& input, const std::vector<WeightVector>& weight_sets);

/// Aligns f2 to f1's spatial size with a wFM convolution and concatenates
/// [f1 | aligned f2] along channels.
ComplexTensor residual_combine(const ComplexTensor& f1, const ComplexTensor& f2, const WfmConvSpec& align);

ComplexTensor act(GroupElement g, const ComplexTensor& t);

}  // namespace surreal
