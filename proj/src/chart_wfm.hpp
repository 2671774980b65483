#pragma once

// Incremental wFM recursion in chart coordinates, shared by the kernels.
// The phase accumulator is left unwrapped; wrapping it at every step (as the
// geodesic form does) changes it only by multiples of 2*pi.

#include <cstdint>

#include "surreal/kernels.hpp"
#include "surreal/manifold.hpp"

namespace surreal::detail {

inline double wrap_delta(double x, std::uint64_t* kink = nullptr) {
    int lift = 0;
    if (x > kPi) {
        x -= kTwoPi;
        lift = -1;
    } else if (x <= -kPi) {
        x += kTwoPi;
        lift = 1;
    }
    if (x > kPi || x <= -kPi) {
        x = wrap_phase(x);
        lift = 7;
    }
    if (kink) *kink = kernels::kink_mix(*kink, static_cast<std::uint64_t>(lift + 8));
    return x;
}

struct ChartMean {
    double logr = 0.0;
    double theta = 0.0;  // unwrapped accumulator
    double total = 0.0;
};

/// point(j, logr, theta) loads the j-th point. When lifted is non-null it
/// receives each point's phase lifted next to the running mean.
template <typename Point>
inline ChartMean chart_wfm(std::size_t count, const double* weights, Point&& point, double* lifted = nullptr,
                           std::uint64_t* kink = nullptr) {
    ChartMean m;
    bool started = false;
    for (std::size_t j = 0; j < count; ++j) {
        const double w = weights[j];
        if (w == 0.0) {
            if (lifted) lifted[j] = 0.0;
            continue;
        }
        double l, t;
        point(j, l, t);
        if (!started) {
            m.logr = l;
            m.theta = t;
            m.total = w;
            started = true;
            if (lifted) lifted[j] = t;
            continue;
        }
        m.total += w;
        const double step = w / m.total;
        const double dt = wrap_delta(t - m.theta, kink);
        if (lifted) lifted[j] = m.theta + dt;
        m.logr += step * (l - m.logr);
        m.theta += step * dt;
    }
    return m;
}

}  // namespace surreal::detail
