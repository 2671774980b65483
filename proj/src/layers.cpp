#include "surreal/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace surreal {

WfmConvSpec WfmConvSpec::uniform(std::size_t in_channels, std::size_t out_channels, kernels::Window window) {
    WfmConvSpec s;
    s.in_channels = in_channels;
    s.out_channels = out_channels;
    s.window = window;
    s.logits.assign(out_channels * s.taps(), 0.0);
    return s;
}

std::vector<double> WfmConvSpec::weights() const {
    if (logits.size() != out_channels * taps()) throw std::invalid_argument("wfm_conv: logits have wrong size");
    std::vector<double> w;
    w.reserve(logits.size());
    for (std::size_t oc = 0; oc < out_channels; ++oc) {
        const auto row = softmax(std::span<const double>(logits).subspan(oc * taps(), taps()));
        w.insert(w.end(), row.begin(), row.end());
    }
    return w;
}

GTransportSpec GTransportSpec::identity(std::size_t channels) {
    return {std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
}

GTransportSpec GTransportSpec::constant(std::size_t channels, GroupElement g) {
    return {std::vector<double>(channels, std::log(g.scale)), std::vector<double>(channels, g.angle)};
}

GroupElement GTransportSpec::element(std::size_t channel) const {
    return {std::exp(log_scale.at(channel)), wrap_phase(angle.at(channel))};
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.begin(), logits.end());
    if (out.empty()) return out;
    const double mx = *std::max_element(out.begin(), out.end());
    double sum = 0.0;
    for (double& v : out) sum += (v = std::exp(v - mx));
    for (double& v : out) v /= sum;
    return out;
}

ComplexTensor wfm_conv(const ComplexTensor& input, const WfmConvSpec& spec) {
    if (input.shape.c != spec.in_channels) {
        throw std::invalid_argument("wfm_conv: input " + input.shape.str() + " does not match kernel expecting " +
                                    std::to_string(spec.in_channels) + " channels, window " +
                                    std::to_string(spec.window.kh) + "x" + std::to_string(spec.window.kw));
    }
    if (input.shape.h < spec.window.kh || input.shape.w < spec.window.kw) {
        throw std::invalid_argument("wfm_conv: kernel " + std::to_string(spec.window.kh) + "x" +
                                    std::to_string(spec.window.kw) + " does not fit input " + input.shape.str());
    }
    ChartBatch out;
    kernels::wfm_conv_forward(to_chart(input), spec.weights(), spec.out_channels, spec.window, out);
    return from_chart(out, 0);
}

ComplexTensor trelu(const ComplexTensor& input) {
    ComplexTensor out = input;
    for (auto& p : out.data) p = {std::max(p.magnitude, 1.0), std::max(p.phase, 0.0)};
    return out;
}

ComplexTensor g_transport(const ComplexTensor& input, const GTransportSpec& spec) {
    if (spec.channels() != input.shape.c || spec.angle.size() != input.shape.c) {
        throw std::invalid_argument("g_transport: " + std::to_string(spec.channels()) +
                                    " channel parameters for input " + input.shape.str());
    }
    ComplexTensor out = input;
    for (std::size_t c = 0; c < input.shape.c; ++c) {
        const GroupElement g = spec.element(c);
        for (std::size_t k = 0; k < input.shape.plane(); ++k) {
            auto& p = out.data[c * input.shape.plane() + k];
            p = act(g, p);
        }
    }
    return out;
}

RealTensor distance_transform(const ComplexTensor& input, const std::vector<WeightVector>& weight_sets) {
    const std::size_t count = input.shape.size();
    if (weight_sets.empty()) throw std::invalid_argument("distance_transform: no weight sets");
    std::vector<double> flat;
    flat.reserve(weight_sets.size() * count);
    for (const auto& w : weight_sets) {
        if (w.size() != count) {
            throw std::invalid_argument("distance_transform: weight set of length " + std::to_string(w.size()) +
                                        " for " + std::to_string(count) + " input values");
        }
        flat.insert(flat.end(), w.values().begin(), w.values().end());
    }
    RealBatch out;
    std::vector<double> ml, mt;
    kernels::distance_forward(to_chart(input), flat, weight_sets.size(), out, ml, mt);
    return real_sample(out, 0);
}

ComplexTensor residual_combine(const ComplexTensor& f1, const ComplexTensor& f2, const WfmConvSpec& align) {
    const ComplexTensor aligned = wfm_conv(f2, align);
    if (aligned.shape.h != f1.shape.h || aligned.shape.w != f1.shape.w) {
        throw std::invalid_argument("residual_combine: aligned " + aligned.shape.str() + " does not match " +
                                    f1.shape.str());
    }
    ComplexTensor out({f1.shape.c + aligned.shape.c, f1.shape.h, f1.shape.w});
    std::copy(f1.data.begin(), f1.data.end(), out.data.begin());
    std::copy(aligned.data.begin(), aligned.data.end(), out.data.begin() + f1.data.size());
    return out;
}

ComplexTensor act(GroupElement g, const ComplexTensor& t) {
    ComplexTensor out = t;
    for (auto& p : out.data) p = act(g, p);
    return out;
}

}  // namespace surreal
