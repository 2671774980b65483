#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "surreal/manifold.hpp"

namespace surreal {

/// (channels, height, width); 1-D signals use height 1.
struct Shape {
    std::size_t c = 1;
    std::size_t h = 1;
    std::size_t w = 1;

    std::size_t size() const { return c * h * w; }
    std::size_t plane() const { return h * w; }
    std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;
};

struct ComplexTensor {
    Shape shape;
    std::vector<PolarComplex> data;

    ComplexTensor() = default;
    explicit ComplexTensor(Shape s, PolarComplex fill = {}) : shape(s), data(s.size(), fill) {}

    PolarComplex& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * shape.h + y) * shape.w + x]; }
    const PolarComplex& at(std::size_t c, std::size_t y, std::size_t x) const {
        return data[(c * shape.h + y) * shape.w + x];
    }
};

struct RealTensor {
    Shape shape;
    std::vector<double> data;

    RealTensor() = default;
    explicit RealTensor(Shape s, double fill = 0.0) : shape(s), data(s.size(), fill) {}

    double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * shape.h + y) * shape.w + x]; }
    double at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * shape.h + y) * shape.w + x]; }
};

/// A batch of complex feature maps in chart coordinates (log r, theta),
/// stored as two planes. theta is kept on the principal branch.
struct ChartBatch {
    std::size_t n = 0;
    Shape shape;
    std::vector<double> logr;
    std::vector<double> theta;

    ChartBatch() = default;
    ChartBatch(std::size_t batch, Shape s) : n(batch), shape(s), logr(batch * s.size()), theta(batch * s.size()) {}

    std::size_t size() const { return n * shape.size(); }
    std::size_t offset(std::size_t sample) const { return sample * shape.size(); }
};

/// A batch of real feature maps, NCHW.
struct RealBatch {
    std::size_t n = 0;
    Shape shape;
    std::vector<double> data;

    RealBatch() = default;
    RealBatch(std::size_t batch, Shape s, double fill = 0.0) : n(batch), shape(s), data(batch * s.size(), fill) {}

    std::size_t size() const { return n * shape.size(); }
    std::size_t offset(std::size_t sample) const { return sample * shape.size(); }
};

ChartBatch to_chart(const std::vector<ComplexTensor>& samples);
ChartBatch to_chart(const ComplexTensor& sample);
ComplexTensor from_chart(const ChartBatch& batch, std::size_t sample);
RealTensor real_sample(const RealBatch& batch, std::size_t sample);
RealBatch to_batch(const RealTensor& t);

/// Output length of a valid (unpadded unless pad > 0) sliding window.
std::size_t window_out(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad = 0);

}  // namespace surreal
