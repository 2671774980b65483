#include "surreal/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "chart_wfm.hpp"

namespace surreal::kernels {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

// Row-major (channel, row, column) traversal of one kernel window. Tap
// offsets are tabulated once so the inner loop does no division.
struct WindowIndex {
    std::vector<std::size_t> offsets;
    std::size_t row;

    WindowIndex(Shape in, Window win) : offsets(in.c * win.kh * win.kw), row(in.w) {
        std::size_t j = 0;
        for (std::size_t ic = 0; ic < in.c; ++ic)
            for (std::size_t ky = 0; ky < win.kh; ++ky)
                for (std::size_t kx = 0; kx < win.kw; ++kx) offsets[j++] = (ic * in.h + ky) * in.w + kx;
    }

    std::size_t operator()(std::size_t j, std::size_t y0, std::size_t x0) const { return offsets[j] + y0 * row + x0; }
};

}  // namespace

Shape wfm_conv_shape(Shape in, std::size_t out_channels, Window win) {
    return {out_channels, window_out(in.h, win.kh, win.sh), window_out(in.w, win.kw, win.sw)};
}

void wfm_conv_forward(const ChartBatch& in, std::span<const double> weights, std::size_t out_channels, Window win,
                      ChartBatch& out, KinkLog* kinks) {
    const Shape os = wfm_conv_shape(in.shape, out_channels, win);
    const std::size_t taps = in.shape.c * win.kh * win.kw;
    require(weights.size() == out_channels * taps, "wfm_conv: weight size mismatch");
    out = ChartBatch(in.n, os);
    if (kinks) kinks->assign(in.n * out_channels, 0);

    const std::size_t n = in.n;
    const WindowIndex index{in.shape, win};
#pragma omp parallel for collapse(2) schedule(static)
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t oc = 0; oc < out_channels; ++oc) {
            const double* lr = in.logr.data() + in.offset(b);
            const double* th = in.theta.data() + in.offset(b);
            const double* w = weights.data() + oc * taps;
            std::uint64_t* kink = kinks ? &(*kinks)[b * out_channels + oc] : nullptr;
            for (std::size_t oy = 0; oy < os.h; ++oy) {
                for (std::size_t ox = 0; ox < os.w; ++ox) {
                    const std::size_t y0 = oy * win.sh, x0 = ox * win.sw;
                    const auto m = detail::chart_wfm(
                        taps, w,
                        [&](std::size_t j, double& l, double& t) {
                            const std::size_t idx = index(j, y0, x0);
                            l = lr[idx];
                            t = th[idx];
                        },
                        nullptr, kink);
                    const std::size_t o = out.offset(b) + (oc * os.h + oy) * os.w + ox;
                    out.logr[o] = m.logr;
                    out.theta[o] = wrap_phase(m.theta);
                }
            }
        }
    }
}

void wfm_conv_backward(const ChartBatch& in, std::span<const double> weights, std::size_t out_channels, Window win,
                       std::span<const double> gout_logr, std::span<const double> gout_theta,
                       std::span<double> gin_logr, std::span<double> gin_theta, std::span<double> gweights) {
    const Shape os = wfm_conv_shape(in.shape, out_channels, win);
    const std::size_t taps = in.shape.c * win.kh * win.kw;
    const std::size_t wsize = out_channels * taps;
    const std::size_t n = in.n;
    require(gweights.size() == wsize, "wfm_conv_backward: weight gradient size mismatch");
    require(gout_logr.size() == n * os.size() && gout_theta.size() == n * os.size(),
            "wfm_conv_backward: output gradient size mismatch");
    const bool want_input = !gin_logr.empty();
    const WindowIndex index{in.shape, win};

    // Weight gradients are collected per sample and reduced in sample order
    // so the result is independent of the thread count.
    std::vector<double> per_sample(n * wsize, 0.0);

#pragma omp parallel
    {
        std::vector<double> lifted(taps);
#pragma omp for schedule(static)
        for (std::size_t b = 0; b < n; ++b) {
            const double* lr = in.logr.data() + in.offset(b);
            const double* th = in.theta.data() + in.offset(b);
            double* gl = want_input ? gin_logr.data() + in.offset(b) : nullptr;
            double* gt = want_input ? gin_theta.data() + in.offset(b) : nullptr;
            double* gw_sample = per_sample.data() + b * wsize;
            const std::size_t obase = b * os.size();
            for (std::size_t oc = 0; oc < out_channels; ++oc) {
                const double* w = weights.data() + oc * taps;
                double* gw = gw_sample + oc * taps;
                for (std::size_t oy = 0; oy < os.h; ++oy) {
                    for (std::size_t ox = 0; ox < os.w; ++ox) {
                        const std::size_t o = obase + (oc * os.h + oy) * os.w + ox;
                        const double go_l = gout_logr[o];
                        const double go_t = gout_theta[o];
                        if (go_l == 0.0 && go_t == 0.0) continue;
                        const std::size_t y0 = oy * win.sh, x0 = ox * win.sw;
                        const auto m = detail::chart_wfm(
                            taps, w,
                            [&](std::size_t j, double& l, double& t) {
                                const std::size_t idx = index(j, y0, x0);
                                l = lr[idx];
                                t = th[idx];
                            },
                            lifted.data());
                        const double inv_total = 1.0 / m.total;
                        for (std::size_t j = 0; j < taps; ++j) {
                            if (w[j] == 0.0) continue;
                            const std::size_t idx = index(j, y0, x0);
                            gw[j] += ((lr[idx] - m.logr) * go_l + (lifted[j] - m.theta) * go_t) * inv_total;
                            if (want_input) {
                                const double share = w[j] * inv_total;
                                gl[idx] += share * go_l;
                                gt[idx] += share * go_t;
                            }
                        }
                    }
                }
            }
        }
    }
    for (std::size_t b = 0; b < n; ++b) {
        const double* src = per_sample.data() + b * wsize;
        for (std::size_t k = 0; k < wsize; ++k) gweights[k] += src[k];
    }
}

void distance_forward(const ChartBatch& in, std::span<const double> weights, std::size_t sets, RealBatch& out,
                      std::vector<double>& mean_logr, std::vector<double>& mean_theta, KinkLog* kinks) {
    const std::size_t count = in.shape.size();
    require(weights.size() == sets * count, "distance_transform: weight size mismatch");
    const std::size_t n = in.n;
    out = RealBatch(n, {sets * in.shape.c, in.shape.h, in.shape.w});
    mean_logr.assign(n * sets, 0.0);
    mean_theta.assign(n * sets, 0.0);
    if (kinks) kinks->assign(n * sets, 0);

#pragma omp parallel for collapse(2) schedule(static)
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t s = 0; s < sets; ++s) {
            const double* lr = in.logr.data() + in.offset(b);
            const double* th = in.theta.data() + in.offset(b);
            std::uint64_t* kink = kinks ? &(*kinks)[b * sets + s] : nullptr;
            const auto m = detail::chart_wfm(
                count, weights.data() + s * count,
                [&](std::size_t j, double& l, double& t) {
                    l = lr[j];
                    t = th[j];
                },
                nullptr, kink);
            const double mt = wrap_phase(m.theta);
            mean_logr[b * sets + s] = m.logr;
            mean_theta[b * sets + s] = mt;
            double* dst = out.data.data() + out.offset(b) + s * count;
            for (std::size_t k = 0; k < count; ++k) {
                const double dl = lr[k] - m.logr;
                const double dt = detail::wrap_delta(th[k] - mt, kink);
                dst[k] = std::sqrt(dl * dl + 2.0 * dt * dt);
            }
        }
    }
}

void distance_backward(const ChartBatch& in, std::span<const double> weights, std::size_t sets, const RealBatch& out,
                       std::span<const double> mean_logr, std::span<const double> mean_theta,
                       std::span<const double> gout, std::span<double> gin_logr, std::span<double> gin_theta,
                       std::span<double> gweights) {
    const std::size_t count = in.shape.size();
    const std::size_t n = in.n;
    const std::size_t wsize = sets * count;
    require(gweights.size() == wsize, "distance_backward: weight gradient size mismatch");
    require(gout.size() == out.size(), "distance_backward: output gradient size mismatch");
    const bool want_input = !gin_logr.empty();
    std::vector<double> per_sample(n * wsize, 0.0);

#pragma omp parallel
    {
        std::vector<double> lifted(count);
#pragma omp for schedule(static)
        for (std::size_t b = 0; b < n; ++b) {
            const double* lr = in.logr.data() + in.offset(b);
            const double* th = in.theta.data() + in.offset(b);
            double* gl = want_input ? gin_logr.data() + in.offset(b) : nullptr;
            double* gt = want_input ? gin_theta.data() + in.offset(b) : nullptr;
            for (std::size_t s = 0; s < sets; ++s) {
                const double ml = mean_logr[b * sets + s];
                const double mt = mean_theta[b * sets + s];
                const double* d = out.data.data() + out.offset(b) + s * count;
                const double* g = gout.data() + out.offset(b) + s * count;
                double gm_l = 0.0, gm_t = 0.0;
                for (std::size_t k = 0; k < count; ++k) {
                    if (d[k] == 0.0 || g[k] == 0.0) continue;
                    const double dl = (lr[k] - ml) / d[k] * g[k];
                    const double dt = 2.0 * detail::wrap_delta(th[k] - mt) / d[k] * g[k];
                    if (want_input) {
                        gl[k] += dl;
                        gt[k] += dt;
                    }
                    gm_l -= dl;
                    gm_t -= dt;
                }
                if (gm_l == 0.0 && gm_t == 0.0) continue;
                const double* w = weights.data() + s * count;
                const auto m = detail::chart_wfm(
                    count, w,
                    [&](std::size_t j, double& l, double& t) {
                        l = lr[j];
                        t = th[j];
                    },
                    lifted.data());
                const double inv_total = 1.0 / m.total;
                double* gw = per_sample.data() + b * wsize + s * count;
                for (std::size_t j = 0; j < count; ++j) {
                    if (w[j] == 0.0) continue;
                    gw[j] += ((lr[j] - m.logr) * gm_l + (lifted[j] - m.theta) * gm_t) * inv_total;
                    if (want_input) {
                        const double share = w[j] * inv_total;
                        gl[j] += share * gm_l;
                        gt[j] += share * gm_t;
                    }
                }
            }
        }
    }
    for (std::size_t b = 0; b < n; ++b) {
        const double* src = per_sample.data() + b * wsize;
        for (std::size_t k = 0; k < wsize; ++k) gweights[k] += src[k];
    }
}

Shape conv2d_shape(Shape in, std::size_t out_channels, ConvGeometry geom) {
    return {out_channels, window_out(in.h, geom.kh, geom.sh, geom.ph), window_out(in.w, geom.kw, geom.sw, geom.pw)};
}

void conv2d_forward(const RealBatch& in, std::span<const double> weights, std::span<const double> bias,
                    std::size_t out_channels, ConvGeometry geom, RealBatch& out) {
    const Shape is = in.shape;
    const Shape os = conv2d_shape(is, out_channels, geom);
    require(weights.size() == out_channels * is.c * geom.kh * geom.kw, "conv2d: weight size mismatch");
    require(bias.empty() || bias.size() == out_channels, "conv2d: bias size mismatch");
    out = RealBatch(in.n, os);
    const std::size_t n = in.n;
    const auto ph = static_cast<std::ptrdiff_t>(geom.ph), pw = static_cast<std::ptrdiff_t>(geom.pw);

#pragma omp parallel for collapse(2) schedule(static)
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t oc = 0; oc < out_channels; ++oc) {
            const double* x = in.data.data() + in.offset(b);
            double* y = out.data.data() + out.offset(b) + oc * os.plane();
            const double b0 = bias.empty() ? 0.0 : bias[oc];
            for (std::size_t k = 0; k < os.plane(); ++k) y[k] = b0;
            for (std::size_t ic = 0; ic < is.c; ++ic) {
                const double* wk = weights.data() + (oc * is.c + ic) * geom.kh * geom.kw;
                const double* xc = x + ic * is.plane();
                for (std::size_t ky = 0; ky < geom.kh; ++ky) {
                    for (std::size_t kx = 0; kx < geom.kw; ++kx) {
                        const double wv = wk[ky * geom.kw + kx];
                        for (std::size_t oy = 0; oy < os.h; ++oy) {
                            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geom.sh + ky) - ph;
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(is.h)) continue;
                            const double* row = xc + iy * is.w;
                            double* yrow = y + oy * os.w;
                            for (std::size_t ox = 0; ox < os.w; ++ox) {
                                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geom.sw + kx) - pw;
                                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(is.w)) continue;
                                yrow[ox] += wv * row[ix];
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward(const RealBatch& in, std::span<const double> weights, std::size_t out_channels,
                     ConvGeometry geom, std::span<const double> gout, std::span<double> gin, std::span<double> gweights,
                     std::span<double> gbias) {
    const Shape is = in.shape;
    const Shape os = conv2d_shape(is, out_channels, geom);
    const std::size_t n = in.n;
    const std::size_t ksize = geom.kh * geom.kw;
    require(gout.size() == n * os.size(), "conv2d_backward: output gradient size mismatch");
    const auto ph = static_cast<std::ptrdiff_t>(geom.ph), pw = static_cast<std::ptrdiff_t>(geom.pw);
    const auto ih = static_cast<std::ptrdiff_t>(is.h), iw = static_cast<std::ptrdiff_t>(is.w);

    // Weight and bias gradients: each output channel owns its slice.
#pragma omp parallel for schedule(static)
    for (std::size_t oc = 0; oc < out_channels; ++oc) {
        for (std::size_t b = 0; b < n; ++b) {
            const double* x = in.data.data() + in.offset(b);
            const double* g = gout.data() + b * os.size() + oc * os.plane();
            if (!gbias.empty()) {
                double s = 0.0;
                for (std::size_t k = 0; k < os.plane(); ++k) s += g[k];
                gbias[oc] += s;
            }
            for (std::size_t ic = 0; ic < is.c; ++ic) {
                const double* xc = x + ic * is.plane();
                double* gw = gweights.data() + (oc * is.c + ic) * ksize;
                for (std::size_t ky = 0; ky < geom.kh; ++ky) {
                    for (std::size_t kx = 0; kx < geom.kw; ++kx) {
                        double s = 0.0;
                        for (std::size_t oy = 0; oy < os.h; ++oy) {
                            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geom.sh + ky) - ph;
                            if (iy < 0 || iy >= ih) continue;
                            for (std::size_t ox = 0; ox < os.w; ++ox) {
                                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geom.sw + kx) - pw;
                                if (ix < 0 || ix >= iw) continue;
                                s += g[oy * os.w + ox] * xc[iy * is.w + ix];
                            }
                        }
                        gw[ky * geom.kw + kx] += s;
                    }
                }
            }
        }
    }

    if (gin.empty()) return;
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < n; ++b) {
        double* gx = gin.data() + in.offset(b);
        for (std::size_t oc = 0; oc < out_channels; ++oc) {
            const double* g = gout.data() + b * os.size() + oc * os.plane();
            for (std::size_t ic = 0; ic < is.c; ++ic) {
                const double* wk = weights.data() + (oc * is.c + ic) * ksize;
                double* gxc = gx + ic * is.plane();
                for (std::size_t ky = 0; ky < geom.kh; ++ky) {
                    for (std::size_t kx = 0; kx < geom.kw; ++kx) {
                        const double wv = wk[ky * geom.kw + kx];
                        for (std::size_t oy = 0; oy < os.h; ++oy) {
                            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * geom.sh + ky) - ph;
                            if (iy < 0 || iy >= ih) continue;
                            for (std::size_t ox = 0; ox < os.w; ++ox) {
                                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * geom.sw + kx) - pw;
                                if (ix < 0 || ix >= iw) continue;
                                gxc[iy * is.w + ix] += wv * g[oy * os.w + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace surreal::kernels
