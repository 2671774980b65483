#include "surreal/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include "chart_wfm.hpp"
#include "surreal/tensor_ring.hpp"

namespace surreal::ops {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

std::span<double> grad_logr_if(Tape& t, Value v) { return t.requires_grad(v) ? t.grad_logr(v) : std::span<double>{}; }
std::span<double> grad_theta_if(Tape& t, Value v) {
    return t.requires_grad(v) ? t.grad_theta(v) : std::span<double>{};
}
std::span<double> grad_if(Tape& t, Value v) { return t.requires_grad(v) ? t.grad(v) : std::span<double>{}; }

}  // namespace

Value softmax_rows(Tape& t, Value logits, std::size_t rows) {
    const RealBatch& in = t.real(logits);
    require(rows > 0 && in.size() % rows == 0, "softmax_rows: size not divisible by row count");
    const std::size_t cols = in.size() / rows;
    RealBatch out = in;
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.data.data() + r * cols;
        const double mx = *std::max_element(row, row + cols);
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) sum += (row[j] = std::exp(row[j] - mx));
        for (std::size_t j = 0; j < cols; ++j) row[j] /= sum;
    }
    return t.record("softmax", std::move(out), {logits}, [logits, rows, cols](Tape& tp, Value self) {
        if (!tp.requires_grad(logits)) return;
        const auto& w = tp.real(self).data;
        auto g = tp.grad(self);
        auto gin = tp.grad(logits);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t base = r * cols;
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += g[base + j] * w[base + j];
            for (std::size_t j = 0; j < cols; ++j) gin[base + j] += w[base + j] * (g[base + j] - dot);
        }
    });
}

Value wfm_conv(Tape& t, Value x, Value weights, std::size_t out_channels, kernels::Window win) {
    const ChartBatch& in = t.chart(x);
    const RealBatch& w = t.real(weights);
    const std::size_t taps = in.shape.c * win.kh * win.kw;
    require(w.size() == out_channels * taps, "wfm_conv: expected " + std::to_string(out_channels * taps) +
                                                 " weights for input " + in.shape.str() + ", got " +
                                                 std::to_string(w.size()));
    ChartBatch out;
    kernels::KinkLog kinks;
    kernels::wfm_conv_forward(in, w.data, out_channels, win, out, t.recording_kinks() ? &kinks : nullptr);
    if (t.recording_kinks()) t.note_kinks(kinks);
    return t.record("wfm_conv", std::move(out), {x, weights}, [x, weights, out_channels, win](Tape& tp, Value self) {
        const auto& wv = tp.real(weights).data;
        std::vector<double> scratch;
        std::span<double> gw;
        if (tp.requires_grad(weights)) {
            gw = tp.grad(weights);
        } else {
            scratch.assign(wv.size(), 0.0);
            gw = scratch;
        }
        kernels::wfm_conv_backward(tp.chart(x), wv, out_channels, win, tp.grad_logr(self), tp.grad_theta(self),
                                   grad_logr_if(tp, x), grad_theta_if(tp, x), gw);
    });
}

Value g_transport(Tape& t, Value x, Value params) {
    const ChartBatch& in = t.chart(x);
    const RealBatch& p = t.real(params);
    require(p.size() == 2 * in.shape.c, "g_transport: expected " + std::to_string(2 * in.shape.c) +
                                            " parameters for input " + in.shape.str());
    ChartBatch out = in;
    const std::size_t plane = in.shape.plane();
    for (std::size_t b = 0; b < in.n; ++b)
        for (std::size_t c = 0; c < in.shape.c; ++c) {
            const double ls = p.data[2 * c], ang = p.data[2 * c + 1];
            const std::size_t base = in.offset(b) + c * plane;
            for (std::size_t k = 0; k < plane; ++k) {
                out.logr[base + k] += ls;
                out.theta[base + k] = wrap_phase(in.theta[base + k] + ang);
            }
        }
    return t.record("g_transport", std::move(out), {x, params}, [x, params](Tape& tp, Value self) {
        const ChartBatch& in = tp.chart(x);
        auto gl = tp.grad_logr(self);
        auto gt = tp.grad_theta(self);
        const std::size_t plane = in.shape.plane();
        if (tp.requires_grad(params)) {
            auto gp = tp.grad(params);
            for (std::size_t b = 0; b < in.n; ++b)
                for (std::size_t c = 0; c < in.shape.c; ++c) {
                    const std::size_t base = in.offset(b) + c * plane;
                    double sl = 0.0, st = 0.0;
                    for (std::size_t k = 0; k < plane; ++k) {
                        sl += gl[base + k];
                        st += gt[base + k];
                    }
                    gp[2 * c] += sl;
                    gp[2 * c + 1] += st;
                }
        }
        if (tp.requires_grad(x)) {
            auto il = tp.grad_logr(x);
            auto it = tp.grad_theta(x);
            for (std::size_t k = 0; k < in.size(); ++k) {
                il[k] += gl[k];
                it[k] += gt[k];
            }
        }
    });
}

Value trelu(Tape& t, Value x) {
    const ChartBatch& in = t.chart(x);
    ChartBatch out = in;
    std::uint64_t sig = 0;
    for (std::size_t k = 0; k < in.size(); ++k) {
        out.logr[k] = std::max(in.logr[k], 0.0);
        out.theta[k] = std::max(in.theta[k], 0.0);
        if (t.recording_kinks()) {
            sig = kernels::kink_mix(sig, (in.logr[k] > 0.0 ? 1u : 0u) | (in.theta[k] > 0.0 ? 2u : 0u));
        }
    }
    if (t.recording_kinks()) t.note_kink(sig);
    return t.record("trelu", std::move(out), {x}, [x](Tape& tp, Value self) {
        if (!tp.requires_grad(x)) return;
        const ChartBatch& in = tp.chart(x);
        auto gl = tp.grad_logr(self);
        auto gt = tp.grad_theta(self);
        auto il = tp.grad_logr(x);
        auto it = tp.grad_theta(x);
        // Subgradient 0 at the ties r = 1 and theta = 0.
        for (std::size_t k = 0; k < in.size(); ++k) {
            if (in.logr[k] > 0.0) il[k] += gl[k];
            if (in.theta[k] > 0.0) it[k] += gt[k];
        }
    });
}

Value distance_transform(Tape& t, Value x, Value weights, std::size_t sets) {
    const ChartBatch& in = t.chart(x);
    const RealBatch& w = t.real(weights);
    require(sets > 0 && w.size() == sets * in.shape.size(),
            "distance_transform: each weight set must have " + std::to_string(in.shape.size()) +
                " entries for input " + in.shape.str() + ", got " + std::to_string(w.size()) + " weights for " +
                std::to_string(sets) + " sets");
    RealBatch out;
    auto means = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>();
    kernels::KinkLog kinks;
    kernels::distance_forward(in, w.data, sets, out, means->first, means->second,
                              t.recording_kinks() ? &kinks : nullptr);
    if (t.recording_kinks()) t.note_kinks(kinks);
    return t.record("distance_transform", std::move(out), {x, weights}, [x, weights, sets, means](Tape& tp, Value self) {
        const auto& wv = tp.real(weights).data;
        std::vector<double> scratch;
        std::span<double> gw;
        if (tp.requires_grad(weights)) {
            gw = tp.grad(weights);
        } else {
            scratch.assign(wv.size(), 0.0);
            gw = scratch;
        }
        kernels::distance_backward(tp.chart(x), wv, sets, tp.real(self), means->first, means->second, tp.grad(self),
                                   grad_logr_if(tp, x), grad_theta_if(tp, x), gw);
    });
}

Value concat_channels(Tape& t, Value a, Value b) {
    if (t.kind(a) != t.kind(b)) throw std::invalid_argument("concat: cannot mix complex and real inputs");
    auto check = [](std::size_t na, Shape sa, std::size_t nb, Shape sb) {
        require(na == nb && sa.h == sb.h && sa.w == sb.w,
                "concat: spatial mismatch " + sa.str() + " vs " + sb.str());
    };
    if (t.kind(a) == Tape::Kind::complex) {
        const ChartBatch& A = t.chart(a);
        const ChartBatch& B = t.chart(b);
        check(A.n, A.shape, B.n, B.shape);
        ChartBatch out(A.n, {A.shape.c + B.shape.c, A.shape.h, A.shape.w});
        for (std::size_t s = 0; s < A.n; ++s) {
            std::copy_n(A.logr.begin() + A.offset(s), A.shape.size(), out.logr.begin() + out.offset(s));
            std::copy_n(A.theta.begin() + A.offset(s), A.shape.size(), out.theta.begin() + out.offset(s));
            std::copy_n(B.logr.begin() + B.offset(s), B.shape.size(), out.logr.begin() + out.offset(s) + A.shape.size());
            std::copy_n(B.theta.begin() + B.offset(s), B.shape.size(),
                        out.theta.begin() + out.offset(s) + A.shape.size());
        }
        return t.record("concat", std::move(out), {a, b}, [a, b](Tape& tp, Value self) {
            const std::size_t na = tp.chart(a).shape.size(), nb = tp.chart(b).shape.size();
            const std::size_t n = tp.chart(a).n;
            auto gl = tp.grad_logr(self);
            auto gt = tp.grad_theta(self);
            for (std::size_t s = 0; s < n; ++s) {
                const std::size_t base = s * (na + nb);
                if (tp.requires_grad(a)) {
                    auto il = tp.grad_logr(a);
                    auto it = tp.grad_theta(a);
                    for (std::size_t k = 0; k < na; ++k) {
                        il[s * na + k] += gl[base + k];
                        it[s * na + k] += gt[base + k];
                    }
                }
                if (tp.requires_grad(b)) {
                    auto il = tp.grad_logr(b);
                    auto it = tp.grad_theta(b);
                    for (std::size_t k = 0; k < nb; ++k) {
                        il[s * nb + k] += gl[base + na + k];
                        it[s * nb + k] += gt[base + na + k];
                    }
                }
            }
        });
    }
    const RealBatch& A = t.real(a);
    const RealBatch& B = t.real(b);
    check(A.n, A.shape, B.n, B.shape);
    RealBatch out(A.n, {A.shape.c + B.shape.c, A.shape.h, A.shape.w});
    for (std::size_t s = 0; s < A.n; ++s) {
        std::copy_n(A.data.begin() + A.offset(s), A.shape.size(), out.data.begin() + out.offset(s));
        std::copy_n(B.data.begin() + B.offset(s), B.shape.size(), out.data.begin() + out.offset(s) + A.shape.size());
    }
    return t.record("concat", std::move(out), {a, b}, [a, b](Tape& tp, Value self) {
        const std::size_t na = tp.real(a).shape.size(), nb = tp.real(b).shape.size();
        const std::size_t n = tp.real(a).n;
        auto g = tp.grad(self);
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t base = s * (na + nb);
            if (tp.requires_grad(a)) {
                auto ga = tp.grad(a);
                for (std::size_t k = 0; k < na; ++k) ga[s * na + k] += g[base + k];
            }
            if (tp.requires_grad(b)) {
                auto gb = tp.grad(b);
                for (std::size_t k = 0; k < nb; ++k) gb[s * nb + k] += g[base + na + k];
            }
        }
    });
}

Value add(Tape& t, Value a, Value b) {
    const RealBatch& A = t.real(a);
    const RealBatch& B = t.real(b);
    require(A.n == B.n && A.shape == B.shape, "add: shape mismatch " + A.shape.str() + " vs " + B.shape.str());
    RealBatch out = A;
    for (std::size_t k = 0; k < out.size(); ++k) out.data[k] += B.data[k];
    return t.record("add", std::move(out), {a, b}, [a, b](Tape& tp, Value self) {
        auto g = tp.grad(self);
        for (Value v : {a, b}) {
            if (!tp.requires_grad(v)) continue;
            auto gv = tp.grad(v);
            for (std::size_t k = 0; k < g.size(); ++k) gv[k] += g[k];
        }
    });
}

Value to_cartesian(Tape& t, Value x) {
    const ChartBatch& in = t.chart(x);
    const Shape s = in.shape;
    RealBatch out(in.n, {2 * s.c, s.h, s.w});
    for (std::size_t b = 0; b < in.n; ++b)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t k = 0; k < s.plane(); ++k) {
                const std::size_t i = in.offset(b) + c * s.plane() + k;
                const double r = std::exp(in.logr[i]);
                out.data[out.offset(b) + (2 * c) * s.plane() + k] = r * std::cos(in.theta[i]);
                out.data[out.offset(b) + (2 * c + 1) * s.plane() + k] = r * std::sin(in.theta[i]);
            }
    return t.record("to_cartesian", std::move(out), {x}, [x](Tape& tp, Value self) {
        if (!tp.requires_grad(x)) return;
        const ChartBatch& in = tp.chart(x);
        const RealBatch& out = tp.real(self);
        const Shape s = in.shape;
        auto g = tp.grad(self);
        auto gl = tp.grad_logr(x);
        auto gt = tp.grad_theta(x);
        for (std::size_t b = 0; b < in.n; ++b)
            for (std::size_t c = 0; c < s.c; ++c)
                for (std::size_t k = 0; k < s.plane(); ++k) {
                    const std::size_t i = in.offset(b) + c * s.plane() + k;
                    const std::size_t ire = out.offset(b) + (2 * c) * s.plane() + k;
                    const std::size_t iim = ire + s.plane();
                    const double re = out.data[ire], im = out.data[iim];
                    gl[i] += g[ire] * re + g[iim] * im;
                    gt[i] += -g[ire] * im + g[iim] * re;
                }
    });
}

Value conv2d(Tape& t, Value x, Value weights, Value bias, std::size_t out_channels, kernels::ConvGeometry geom) {
    const RealBatch& in = t.real(x);
    const RealBatch& w = t.real(weights);
    const std::size_t expect = out_channels * in.shape.c * geom.kh * geom.kw;
    require(w.size() == expect, "conv2d: expected " + std::to_string(expect) + " weights for input " +
                                    in.shape.str() + ", got " + std::to_string(w.size()));
    std::span<const double> bspan;
    if (bias.valid()) bspan = t.real(bias).data;
    RealBatch out;
    kernels::conv2d_forward(in, w.data, bspan, out_channels, geom, out);
    std::vector<Value> inputs{x, weights};
    if (bias.valid()) inputs.push_back(bias);
    return t.record("conv2d", std::move(out), inputs, [x, weights, bias, out_channels, geom](Tape& tp, Value self) {
        const auto& wv = tp.real(weights).data;
        std::vector<double> scratch_w;
        std::span<double> gw;
        if (tp.requires_grad(weights)) {
            gw = tp.grad(weights);
        } else {
            scratch_w.assign(wv.size(), 0.0);
            gw = scratch_w;
        }
        std::span<double> gb = bias.valid() ? grad_if(tp, bias) : std::span<double>{};
        kernels::conv2d_backward(tp.real(x), wv, out_channels, geom, tp.grad(self), grad_if(tp, x), gw, gb);
    });
}

Value batch_norm(Tape& t, Value x, Value gamma, Value beta, BatchNormState state) {
    const RealBatch& in = t.real(x);
    const std::size_t C = in.shape.c, plane = in.shape.plane(), n = in.n;
    require(t.real(gamma).size() == C && t.real(beta).size() == C,
            "batch_norm: parameter size does not match channels of " + in.shape.str());
    require(state.running_mean && state.running_var, "batch_norm: missing running statistics");
    const auto& g = t.real(gamma).data;
    const auto& be = t.real(beta).data;
    const std::size_t m = n * plane;
    const bool training = t.training();

    auto stats = std::make_shared<std::vector<double>>(2 * C);  // mean, inv_std per channel
    RealBatch out(n, in.shape);
    for (std::size_t c = 0; c < C; ++c) {
        double mean, var;
        if (training) {
            double s = 0.0;
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t k = 0; k < plane; ++k) s += in.data[in.offset(b) + c * plane + k];
            mean = s / static_cast<double>(m);
            double v = 0.0;
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t k = 0; k < plane; ++k) {
                    const double d = in.data[in.offset(b) + c * plane + k] - mean;
                    v += d * d;
                }
            var = v / static_cast<double>(m);
            const double unbiased = m > 1 ? v / static_cast<double>(m - 1) : var;
            auto& rm = state.running_mean->value[c];
            auto& rv = state.running_var->value[c];
            rm = state.momentum * rm + (1.0 - state.momentum) * mean;
            rv = state.momentum * rv + (1.0 - state.momentum) * unbiased;
        } else {
            mean = state.running_mean->value[c];
            var = state.running_var->value[c];
        }
        const double inv_std = 1.0 / std::sqrt(var + state.eps);
        (*stats)[2 * c] = mean;
        (*stats)[2 * c + 1] = inv_std;
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t k = 0; k < plane; ++k) {
                const std::size_t i = in.offset(b) + c * plane + k;
                out.data[i] = g[c] * (in.data[i] - mean) * inv_std + be[c];
            }
    }
    return t.record("batch_norm", std::move(out), {x, gamma, beta},
                    [x, gamma, beta, stats, training](Tape& tp, Value self) {
                        const RealBatch& in = tp.real(x);
                        const std::size_t C = in.shape.c, plane = in.shape.plane(), n = in.n;
                        const double m = static_cast<double>(n * plane);
                        const auto& gm = tp.real(gamma).data;
                        auto gout = tp.grad(self);
                        auto gg = grad_if(tp, gamma);
                        auto gbeta = grad_if(tp, beta);
                        auto gx = grad_if(tp, x);
                        for (std::size_t c = 0; c < C; ++c) {
                            const double mean = (*stats)[2 * c], inv_std = (*stats)[2 * c + 1];
                            double sum_g = 0.0, sum_gx = 0.0;
                            for (std::size_t b = 0; b < n; ++b)
                                for (std::size_t k = 0; k < plane; ++k) {
                                    const std::size_t i = in.offset(b) + c * plane + k;
                                    const double xhat = (in.data[i] - mean) * inv_std;
                                    sum_g += gout[i];
                                    sum_gx += gout[i] * xhat;
                                }
                            if (!gg.empty()) gg[c] += sum_gx;
                            if (!gbeta.empty()) gbeta[c] += sum_g;
                            if (gx.empty()) continue;
                            for (std::size_t b = 0; b < n; ++b)
                                for (std::size_t k = 0; k < plane; ++k) {
                                    const std::size_t i = in.offset(b) + c * plane + k;
                                    if (training) {
                                        const double xhat = (in.data[i] - mean) * inv_std;
                                        gx[i] += gm[c] * inv_std * (gout[i] - sum_g / m - xhat * sum_gx / m);
                                    } else {
                                        gx[i] += gm[c] * inv_std * gout[i];
                                    }
                                }
                        }
                    });
}

Value relu(Tape& t, Value x) {
    const RealBatch& in = t.real(x);
    RealBatch out = in;
    std::uint64_t sig = 0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out.data[k] = std::max(in.data[k], 0.0);
        if (t.recording_kinks()) sig = kernels::kink_mix(sig, in.data[k] > 0.0 ? 1 : 0);
    }
    if (t.recording_kinks()) t.note_kink(sig);
    return t.record("relu", std::move(out), {x}, [x](Tape& tp, Value self) {
        if (!tp.requires_grad(x)) return;
        const auto& in = tp.real(x).data;
        auto g = tp.grad(self);
        auto gx = tp.grad(x);
        for (std::size_t k = 0; k < in.size(); ++k)
            if (in[k] > 0.0) gx[k] += g[k];
    });
}

Value max_pool(Tape& t, Value x, std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw) {
    const RealBatch& in = t.real(x);
    const Shape is = in.shape;
    const Shape os{is.c, window_out(is.h, kh, sh), window_out(is.w, kw, sw)};
    RealBatch out(in.n, os);
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    std::uint64_t sig = 0;
    for (std::size_t b = 0; b < in.n; ++b)
        for (std::size_t c = 0; c < is.c; ++c)
            for (std::size_t oy = 0; oy < os.h; ++oy)
                for (std::size_t ox = 0; ox < os.w; ++ox) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t at = 0;
                    for (std::size_t ky = 0; ky < kh; ++ky)
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const std::size_t i = in.offset(b) + (c * is.h + oy * sh + ky) * is.w + ox * sw + kx;
                            if (in.data[i] > best) {
                                best = in.data[i];
                                at = i;
                            }
                        }
                    const std::size_t o = out.offset(b) + (c * os.h + oy) * os.w + ox;
                    out.data[o] = best;
                    (*argmax)[o] = at;
                    if (t.recording_kinks()) sig = kernels::kink_mix(sig, at);
                }
    if (t.recording_kinks()) t.note_kink(sig);
    return t.record("max_pool", std::move(out), {x}, [x, argmax](Tape& tp, Value self) {
        if (!tp.requires_grad(x)) return;
        auto g = tp.grad(self);
        auto gx = tp.grad(x);
        for (std::size_t o = 0; o < g.size(); ++o) gx[(*argmax)[o]] += g[o];
    });
}

Value fully_connected(Tape& t, Value x, Value weights, Value bias, std::size_t out_features) {
    const RealBatch& in = t.real(x);
    const std::size_t in_features = in.shape.size();
    require(t.real(weights).size() == out_features * in_features,
            "fully_connected: expected " + std::to_string(out_features * in_features) + " weights for input " +
                in.shape.str() + ", got " + std::to_string(t.real(weights).size()));
    require(t.real(bias).size() == out_features, "fully_connected: bias size mismatch");
    const auto& W = t.real(weights).data;
    const auto& B = t.real(bias).data;
    RealBatch out(in.n, {out_features, 1, 1});
    for (std::size_t b = 0; b < in.n; ++b) {
        const double* xv = in.data.data() + in.offset(b);
        for (std::size_t o = 0; o < out_features; ++o) {
            double s = B[o];
            const double* wr = W.data() + o * in_features;
            for (std::size_t i = 0; i < in_features; ++i) s += wr[i] * xv[i];
            out.data[b * out_features + o] = s;
        }
    }
    return t.record("fully_connected", std::move(out), {x, weights, bias},
                    [x, weights, bias, out_features, in_features](Tape& tp, Value self) {
                        const RealBatch& in = tp.real(x);
                        const auto& W = tp.real(weights).data;
                        auto g = tp.grad(self);
                        auto gw = grad_if(tp, weights);
                        auto gb = grad_if(tp, bias);
                        auto gx = grad_if(tp, x);
                        for (std::size_t b = 0; b < in.n; ++b) {
                            const double* xv = in.data.data() + in.offset(b);
                            for (std::size_t o = 0; o < out_features; ++o) {
                                const double go = g[b * out_features + o];
                                if (go == 0.0) continue;
                                if (!gb.empty()) gb[o] += go;
                                if (!gw.empty()) {
                                    double* gwr = gw.data() + o * in_features;
                                    for (std::size_t i = 0; i < in_features; ++i) gwr[i] += go * xv[i];
                                }
                                if (!gx.empty()) {
                                    const double* wr = W.data() + o * in_features;
                                    double* gxv = gx.data() + in.offset(b);
                                    for (std::size_t i = 0; i < in_features; ++i) gxv[i] += go * wr[i];
                                }
                            }
                        }
                    });
}

Value softmax_cross_entropy(Tape& t, Value logits, const std::vector<std::uint32_t>& labels) {
    const RealBatch& in = t.real(logits);
    const std::size_t K = in.shape.size();
    require(labels.size() == in.n, "softmax_cross_entropy: label count does not match batch");
    auto probs = std::make_shared<std::vector<double>>(in.size());
    double loss = 0.0;
    for (std::size_t b = 0; b < in.n; ++b) {
        require(labels[b] < K, "softmax_cross_entropy: label out of range");
        const double* z = in.data.data() + b * K;
        const double mx = *std::max_element(z, z + K);
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) sum += std::exp(z[k] - mx);
        const double lse = mx + std::log(sum);
        loss += lse - z[labels[b]];
        for (std::size_t k = 0; k < K; ++k) (*probs)[b * K + k] = std::exp(z[k] - lse);
    }
    RealBatch out(1, {1, 1, 1});
    out.data[0] = loss / static_cast<double>(in.n);
    return t.record("softmax_cross_entropy", std::move(out), {logits},
                    [logits, probs, labels, K](Tape& tp, Value self) {
                        if (!tp.requires_grad(logits)) return;
                        const double g = tp.grad(self)[0];
                        auto gz = tp.grad(logits);
                        const double scale = g / static_cast<double>(labels.size());
                        for (std::size_t b = 0; b < labels.size(); ++b)
                            for (std::size_t k = 0; k < K; ++k)
                                gz[b * K + k] += scale * ((*probs)[b * K + k] - (k == labels[b] ? 1.0 : 0.0));
                    });
}

Value weighted_sum(Tape& t, Value x, std::vector<double> coeffs) {
    const RealBatch& in = t.real(x);
    require(coeffs.size() == in.size(), "weighted_sum: coefficient count mismatch");
    RealBatch out(1, {1, 1, 1});
    for (std::size_t k = 0; k < in.size(); ++k) out.data[0] += coeffs[k] * in.data[k];
    auto shared = std::make_shared<std::vector<double>>(std::move(coeffs));
    return t.record("weighted_sum", std::move(out), {x}, [x, shared](Tape& tp, Value self) {
        if (!tp.requires_grad(x)) return;
        const double g = tp.grad(self)[0];
        auto gx = tp.grad(x);
        for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += g * (*shared)[k];
    });
}

Value tensor_ring(Tape& t, const std::vector<Value>& cores, const std::vector<std::size_t>& modes, std::size_t rank) {
    require(cores.size() == modes.size(), "tensor_ring: core count mismatch");
    TensorRingSpec spec;
    spec.modes = modes;
    spec.rank = rank;
    for (auto v : cores) spec.cores.push_back(t.real(v).data);
    const auto dense = tensor_ring_reconstruct(spec);
    RealBatch out(1, {dense.size(), 1, 1});
    out.data = dense;
    return t.record("tensor_ring", std::move(out), cores, [cores, modes, rank](Tape& tp, Value self) {
        TensorRingSpec spec;
        spec.modes = modes;
        spec.rank = rank;
        for (auto v : cores) spec.cores.push_back(tp.real(v).data);
        std::vector<std::vector<double>> grads;
        tensor_ring_backward(spec, tp.grad(self), grads);
        for (std::size_t k = 0; k < cores.size(); ++k) {
            if (!tp.requires_grad(cores[k])) continue;
            auto g = tp.grad(cores[k]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += grads[k][i];
        }
    });
}

}  // namespace surreal::ops
