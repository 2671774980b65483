// Serial reference kernels built directly on the public manifold and wFM
// functions. They trade speed for an obviously-correct structure.

#include <cmath>
#include <stdexcept>

#include "surreal/kernels.hpp"
#include "surreal/wfm.hpp"

namespace surreal::kernels::reference {

void wfm_conv_forward(const ChartBatch& in, std::span<const double> weights, std::size_t out_channels, Window win,
                      ChartBatch& out) {
    const Shape os = wfm_conv_shape(in.shape, out_channels, win);
    const std::size_t taps = in.shape.c * win.kh * win.kw;
    if (weights.size() != out_channels * taps) throw std::invalid_argument("wfm_conv: weight size mismatch");
    out = ChartBatch(in.n, os);

    for (std::size_t b = 0; b < in.n; ++b) {
        const ComplexTensor x = from_chart(in, b);
        std::vector<PolarComplex> window;
        window.reserve(taps);
        for (std::size_t oc = 0; oc < out_channels; ++oc) {
            const auto w = weights.subspan(oc * taps, taps);
            for (std::size_t oy = 0; oy < os.h; ++oy) {
                for (std::size_t ox = 0; ox < os.w; ++ox) {
                    window.clear();
                    for (std::size_t ic = 0; ic < in.shape.c; ++ic)
                        for (std::size_t ky = 0; ky < win.kh; ++ky)
                            for (std::size_t kx = 0; kx < win.kw; ++kx)
                                window.push_back(x.at(ic, oy * win.sh + ky, ox * win.sw + kx));
                    const PolarComplex m = wfm_incremental(window, w);
                    const std::size_t o = out.offset(b) + (oc * os.h + oy) * os.w + ox;
                    out.logr[o] = std::log(m.magnitude);
                    out.theta[o] = m.phase;
                }
            }
        }
    }
}

void distance_forward(const ChartBatch& in, std::span<const double> weights, std::size_t sets, RealBatch& out) {
    const std::size_t count = in.shape.size();
    if (weights.size() != sets * count) throw std::invalid_argument("distance_transform: weight size mismatch");
    out = RealBatch(in.n, {sets * in.shape.c, in.shape.h, in.shape.w});
    for (std::size_t b = 0; b < in.n; ++b) {
        const ComplexTensor x = from_chart(in, b);
        for (std::size_t s = 0; s < sets; ++s) {
            const PolarComplex m = wfm_incremental(x.data, weights.subspan(s * count, count));
            for (std::size_t k = 0; k < count; ++k) {
                out.data[out.offset(b) + s * count + k] = distance(x.data[k], m);
            }
        }
    }
}

void conv2d_forward(const RealBatch& in, std::span<const double> weights, std::span<const double> bias,
                    std::size_t out_channels, ConvGeometry geom, RealBatch& out) {
    const Shape is = in.shape;
    const Shape os = conv2d_shape(is, out_channels, geom);
    out = RealBatch(in.n, os);
    for (std::size_t b = 0; b < in.n; ++b)
        for (std::size_t oc = 0; oc < out_channels; ++oc)
            for (std::size_t oy = 0; oy < os.h; ++oy)
                for (std::size_t ox = 0; ox < os.w; ++ox) {
                    double acc = bias.empty() ? 0.0 : bias[oc];
                    for (std::size_t ic = 0; ic < is.c; ++ic)
                        for (std::size_t ky = 0; ky < geom.kh; ++ky)
                            for (std::size_t kx = 0; kx < geom.kw; ++kx) {
                                const long iy = static_cast<long>(oy * geom.sh + ky) - static_cast<long>(geom.ph);
                                const long ix = static_cast<long>(ox * geom.sw + kx) - static_cast<long>(geom.pw);
                                if (iy < 0 || ix < 0 || iy >= static_cast<long>(is.h) || ix >= static_cast<long>(is.w))
                                    continue;
                                acc += weights[((oc * is.c + ic) * geom.kh + ky) * geom.kw + kx] *
                                       in.data[in.offset(b) + (ic * is.h + iy) * is.w + ix];
                            }
                    out.data[out.offset(b) + (oc * os.h + oy) * os.w + ox] = acc;
                }
}

}  // namespace surreal::kernels::reference
