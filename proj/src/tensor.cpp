#include "surreal/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace surreal {

std::string Shape::str() const {
    return "[" + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + "]";
}

ChartBatch to_chart(const std::vector<ComplexTensor>& samples) {
    if (samples.empty()) return {};
    ChartBatch out(samples.size(), samples.front().shape);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].shape != out.shape) {
            throw std::invalid_argument("batch shape mismatch: " + samples[i].shape.str() + " vs " + out.shape.str());
        }
        const std::size_t base = out.offset(i);
        for (std::size_t k = 0; k < out.shape.size(); ++k) {
            out.logr[base + k] = std::log(samples[i].data[k].magnitude);
            out.theta[base + k] = samples[i].data[k].phase;
        }
    }
    return out;
}

ChartBatch to_chart(const ComplexTensor& sample) { return to_chart(std::vector<ComplexTensor>{sample}); }

ComplexTensor from_chart(const ChartBatch& batch, std::size_t sample) {
    ComplexTensor out(batch.shape);
    const std::size_t base = batch.offset(sample);
    for (std::size_t k = 0; k < batch.shape.size(); ++k) {
        out.data[k] = {std::exp(batch.logr[base + k]), wrap_phase(batch.theta[base + k])};
    }
    return out;
}

RealTensor real_sample(const RealBatch& batch, std::size_t sample) {
    RealTensor out(batch.shape);
    const std::size_t base = batch.offset(sample);
    for (std::size_t k = 0; k < batch.shape.size(); ++k) out.data[k] = batch.data[base + k];
    return out;
}

RealBatch to_batch(const RealTensor& t) {
    RealBatch out(1, t.shape);
    out.data = t.data;
    return out;
}

std::size_t window_out(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
    if (kernel == 0 || stride == 0) throw std::invalid_argument("kernel and stride must be positive");
    const std::size_t padded = in + 2 * pad;
    if (padded < kernel) {
        throw std::invalid_argument("kernel " + std::to_string(kernel) + " does not fit input extent " +
                                    std::to_string(in));
    }
    return (padded - kernel) / stride + 1;
}

}  // namespace surreal
