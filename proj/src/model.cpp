#include "surreal/model.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace surreal {

ModelBuilder::ModelBuilder(Shape input, bool complex_input, std::uint64_t seed, std::size_t tr_rank)
    : input_(input),
      complex_input_(complex_input),
      shape_(input),
      complex_(complex_input),
      rng_(seed),
      tr_rank_(tr_rank),
      params_(std::make_unique<ParamStore>()) {}

std::string ModelBuilder::next_name(const std::string& kind) { return kind + std::to_string(++counters_[kind]); }

Param& ModelBuilder::add_param(const std::string& name, std::vector<std::size_t> shape, std::vector<double> init,
                               bool trainable) {
    return params_->add(name, std::move(shape), std::move(init), trainable);
}

std::vector<double> ModelBuilder::kaiming(std::size_t count, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> v(count);
    for (auto& x : v) x = u(rng_);
    return v;
}

std::function<Value(Tape&)> ModelBuilder::kernel_param(const std::string& name, std::vector<std::size_t> modes,
                                                       std::vector<double> init, double init_std) {
    if (tr_rank_ == 0) {
        Param* p = &add_param(name, modes, std::move(init));
        return [p](Tape& t) { return t.parameter(*p); };
    }
    // Core entries drawn so the reconstruction has roughly init_std spread:
    // Var(W) = rank^c * sigma^(2c).
    const double c = static_cast<double>(modes.size());
    const double r = static_cast<double>(tr_rank_);
    const double sigma = std::pow(init_std * init_std / std::pow(r, c), 1.0 / (2.0 * c));
    std::normal_distribution<double> normal(0.0, sigma);
    std::vector<Param*> cores;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        std::vector<double> v(tr_rank_ * modes[k] * tr_rank_);
        for (auto& x : v) x = normal(rng_);
        cores.push_back(&add_param(name + ".tr" + std::to_string(k), {tr_rank_, modes[k], tr_rank_}, std::move(v)));
    }
    const std::size_t rank = tr_rank_;
    return [cores, modes, rank](Tape& t) {
        std::vector<Value> vs;
        for (auto* p : cores) vs.push_back(t.parameter(*p));
        return ops::tensor_ring(t, vs, modes, rank);
    };
}

void ModelBuilder::push(std::string name, std::string kind, Shape out, bool complex_out, std::size_t params,
                        Forward f) {
    info_.push_back({std::move(name), std::move(kind), shape_, out, complex_out, params});
    forwards_.push_back(std::move(f));
    shape_ = out;
    complex_ = complex_out;
}

// Zero logits make every output channel the same mean with the same
// gradient, so nothing ever separates them; a spread breaks the tie.
std::vector<double> ModelBuilder::logit_values(std::size_t count) {
    std::vector<double> init(count, 0.0);
    if (logit_std_ > 0.0) {
        std::normal_distribution<double> normal(0.0, logit_std_);
        for (auto& x : init) x = normal(rng_);
    }
    return init;
}

ModelBuilder::Forward ModelBuilder::make_wfm(const std::string& name, std::size_t in_channels,
                                             std::size_t out_channels, kernels::Window win) {
    const std::size_t taps = in_channels * win.kh * win.kw;
    auto logits = kernel_param(name + ".logits", {out_channels, in_channels, win.kh, win.kw},
                               logit_values(out_channels * taps), logit_std_ > 0.0 ? logit_std_ : 0.01);
    return [logits, out_channels, win](Tape& t, Value x) {
        const Value w = ops::softmax_rows(t, logits(t), out_channels);
        return ops::wfm_conv(t, x, w, out_channels, win);
    };
}

namespace {

std::size_t count_params(const ParamStore& store, std::size_t before) {
    return store.trainable_count() - before;
}

void require_complex(bool complex, const std::string& layer) {
    if (!complex) throw std::invalid_argument(layer + " needs a complex-valued input");
}

void require_real(bool complex, const std::string& layer) {
    if (complex) throw std::invalid_argument(layer + " needs a real-valued input");
}

}  // namespace

ModelBuilder& ModelBuilder::wfm_conv(std::size_t out_channels, kernels::Window win) {
    const std::string name = next_name("wfm");
    require_complex(complex_, name);
    const std::size_t before = params_->trainable_count();
    auto f = make_wfm(name, shape_.c, out_channels, win);
    push(name, "wfm_conv", kernels::wfm_conv_shape(shape_, out_channels, win), true,
         count_params(*params_, before), std::move(f));
    return *this;
}

ModelBuilder& ModelBuilder::g_transport() {
    const std::string name = next_name("gt");
    require_complex(complex_, name);
    Param* p = &add_param(name + ".group", {shape_.c, 2}, std::vector<double>(2 * shape_.c, 0.0));
    push(name, "g_transport", shape_, true, p->size(),
         [p](Tape& t, Value x) { return ops::g_transport(t, x, t.parameter(*p)); });
    return *this;
}

ModelBuilder& ModelBuilder::trelu() {
    const std::string name = next_name("trelu");
    require_complex(complex_, name);
    push(name, "trelu", shape_, true, 0, [](Tape& t, Value x) { return ops::trelu(t, x); });
    return *this;
}

ModelBuilder& ModelBuilder::distance_transform(std::size_t sets) {
    const std::string name = next_name("dist");
    require_complex(complex_, name);
    const std::size_t count = shape_.size();
    Param* p = &add_param(name + ".logits", {sets, count}, logit_values(sets * count));
    push(name, "distance_transform", {sets * shape_.c, shape_.h, shape_.w}, false, p->size(),
         [p, sets](Tape& t, Value x) {
             const Value w = ops::softmax_rows(t, t.parameter(*p), sets);
             return ops::distance_transform(t, x, w, sets);
         });
    return *this;
}

ModelBuilder& ModelBuilder::wfm_residual(std::size_t out_channels, kernels::Window main, kernels::Window align) {
    const std::string name = next_name("wfmres");
    require_complex(complex_, name);
    const Shape main_shape = kernels::wfm_conv_shape(shape_, out_channels, main);
    const Shape align_shape = kernels::wfm_conv_shape(shape_, out_channels, align);
    if (main_shape.h != align_shape.h || main_shape.w != align_shape.w) {
        throw std::invalid_argument(name + ": alignment " + align_shape.str() + " does not match " + main_shape.str());
    }
    const std::size_t before = params_->trainable_count();
    auto fmain = make_wfm(name + ".main", shape_.c, out_channels, main);
    auto falign = make_wfm(name + ".align", shape_.c, out_channels, align);
    push(name, "wfm_residual", {2 * out_channels, main_shape.h, main_shape.w}, true, count_params(*params_, before),
         [fmain, falign](Tape& t, Value x) {
             const Value f1 = fmain(t, x);
             const Value f2 = falign(t, x);
             return ops::concat_channels(t, f1, f2);
         });
    return *this;
}

ModelBuilder& ModelBuilder::to_cartesian() {
    const std::string name = next_name("cartesian");
    require_complex(complex_, name);
    push(name, "to_cartesian", {2 * shape_.c, shape_.h, shape_.w}, false, 0,
         [](Tape& t, Value x) { return ops::to_cartesian(t, x); });
    return *this;
}

ModelBuilder& ModelBuilder::conv(std::size_t out_channels, kernels::ConvGeometry geom) {
    const std::string name = next_name("conv");
    require_real(complex_, name);
    const std::size_t fan_in = shape_.c * geom.kh * geom.kw;
    const std::size_t count = out_channels * fan_in;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    const std::size_t before = params_->trainable_count();
    auto w = kernel_param(name + ".weight", {out_channels, shape_.c, geom.kh, geom.kw}, kaiming(count, fan_in),
                          bound / std::sqrt(3.0));
    Param* b = &add_param(name + ".bias", {out_channels}, std::vector<double>(out_channels, 0.0));
    push(name, "conv", kernels::conv2d_shape(shape_, out_channels, geom), false, count_params(*params_, before),
         [w, b, out_channels, geom](Tape& t, Value x) {
             return ops::conv2d(t, x, w(t), t.parameter(*b), out_channels, geom);
         });
    return *this;
}

ModelBuilder& ModelBuilder::batch_norm() {
    const std::string name = next_name("bn");
    require_real(complex_, name);
    const std::size_t c = shape_.c;
    Param* gamma = &add_param(name + ".gamma", {c}, std::vector<double>(c, 1.0));
    Param* beta = &add_param(name + ".beta", {c}, std::vector<double>(c, 0.0));
    Param* rm = &add_param(name + ".running_mean", {c}, std::vector<double>(c, 0.0), false);
    Param* rv = &add_param(name + ".running_var", {c}, std::vector<double>(c, 1.0), false);
    push(name, "batch_norm", shape_, false, 2 * c, [gamma, beta, rm, rv](Tape& t, Value x) {
        return ops::batch_norm(t, x, t.parameter(*gamma), t.parameter(*beta), {rm, rv});
    });
    return *this;
}

ModelBuilder& ModelBuilder::relu() {
    const std::string name = next_name("relu");
    require_real(complex_, name);
    push(name, "relu", shape_, false, 0, [](Tape& t, Value x) { return ops::relu(t, x); });
    return *this;
}

ModelBuilder& ModelBuilder::max_pool(std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw) {
    const std::string name = next_name("pool");
    require_real(complex_, name);
    const Shape out{shape_.c, window_out(shape_.h, kh, sh), window_out(shape_.w, kw, sw)};
    push(name, "max_pool", out, false, 0,
         [kh, kw, sh, sw](Tape& t, Value x) { return ops::max_pool(t, x, kh, kw, sh, sw); });
    return *this;
}

ModelBuilder& ModelBuilder::fully_connected(std::size_t out_features) {
    const std::string name = next_name("fc");
    require_real(complex_, name);
    const std::size_t in = shape_.size();
    Param* w = &add_param(name + ".weight", {out_features, in}, kaiming(out_features * in, in));
    Param* b = &add_param(name + ".bias", {out_features}, std::vector<double>(out_features, 0.0));
    push(name, "fully_connected", {out_features, 1, 1}, false, w->size() + b->size(),
         [w, b, out_features](Tape& t, Value x) {
             return ops::fully_connected(t, x, t.parameter(*w), t.parameter(*b), out_features);
         });
    return *this;
}

ModelBuilder& ModelBuilder::conv_stack_residual(bool one_dimensional) {
    const std::string name = next_name("convres");
    require_real(complex_, name);
    const std::size_t c = shape_.c;
    const std::size_t before = params_->trainable_count();
    const kernels::ConvGeometry pointwise{1, 1, 1, 1, 0, 0};
    const kernels::ConvGeometry spatial =
        one_dimensional ? kernels::ConvGeometry{1, 3, 1, 1, 0, 1} : kernels::ConvGeometry{3, 3, 1, 1, 1, 1};
    struct Stage {
        std::function<Value(Tape&)> w;
        Param* b;
        kernels::ConvGeometry geom;
    };
    std::vector<Stage> stages;
    int k = 0;
    for (const auto& g : {pointwise, spatial, pointwise}) {
        const std::string sn = name + ".conv" + std::to_string(++k);
        const std::size_t fan_in = c * g.kh * g.kw;
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        auto w = kernel_param(sn + ".weight", {c, c, g.kh, g.kw}, kaiming(c * fan_in, fan_in), bound / std::sqrt(3.0));
        Param* b = &add_param(sn + ".bias", {c}, std::vector<double>(c, 0.0));
        stages.push_back({w, b, g});
    }
    push(name, "conv_stack_residual", shape_, false, count_params(*params_, before),
         [stages, c](Tape& t, Value x) {
             Value h = x;
             for (std::size_t i = 0; i < stages.size(); ++i) {
                 h = ops::conv2d(t, h, stages[i].w(t), t.parameter(*stages[i].b), c, stages[i].geom);
                 if (i + 1 < stages.size()) h = ops::relu(t, h);
             }
             return ops::add(t, x, h);
         });
    return *this;
}

Model ModelBuilder::build(std::string arch_name, std::size_t classes) {
    if (complex_ || shape_.size() != classes) {
        throw std::invalid_argument("model must end in a real layer with " + std::to_string(classes) +
                                    " outputs, got " + shape_.str());
    }
    Model m;
    m.arch_ = std::move(arch_name);
    m.input_ = input_;
    m.complex_input_ = complex_input_;
    m.classes_ = classes;
    m.params_ = std::move(params_);
    m.info_ = std::move(info_);
    m.forwards_ = std::move(forwards_);
    return m;
}

Value Model::forward(Tape& tape, Value input, std::vector<double>* layer_seconds) const {
    const bool complex = tape.kind(input) == Tape::Kind::complex;
    const Shape got = complex ? tape.chart(input).shape : tape.real(input).shape;
    if (complex != complex_input_ || got != input_) {
        throw std::invalid_argument("model " + arch_ + " expects " + (complex_input_ ? "complex " : "real ") +
                                    input_.str() + " input, got " + (complex ? "complex " : "real ") + got.str());
    }
    Value x = input;
    if (layer_seconds) layer_seconds->assign(forwards_.size(), 0.0);
    for (std::size_t i = 0; i < forwards_.size(); ++i) {
        tape.set_scope(info_[i].name);
        try {
            const auto start = std::chrono::steady_clock::now();
            x = forwards_[i](tape, x);
            if (layer_seconds) {
                (*layer_seconds)[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
        } catch (const std::exception& e) {
            tape.set_scope({});
            throw std::invalid_argument("layer " + info_[i].name + ": " + e.what());
        }
    }
    tape.set_scope({});
    return x;
}

Value Model::forward(Tape& tape, const ChartBatch& input) const { return forward(tape, tape.constant(input)); }

Arch parse_arch(const std::string& name) {
    if (name == "surreal") return Arch::surreal;
    if (name == "surreal-res") return Arch::surreal_res;
    if (name == "real-baseline") return Arch::real_baseline;
    throw std::invalid_argument("unknown arch '" + name + "' (expected surreal, surreal-res or real-baseline)");
}

std::string arch_name(Arch arch) {
    switch (arch) {
        case Arch::surreal: return "surreal";
        case Arch::surreal_res: return "surreal-res";
        case Arch::real_baseline: return "real-baseline";
    }
    return "?";
}

Preset parse_preset(const std::string& name) {
    if (name == "auto") return Preset::automatic;
    if (name == "table") return Preset::table;
    if (name == "desk") return Preset::desk;
    throw std::invalid_argument("unknown preset '" + name + "' (expected auto, table or desk)");
}

namespace {

// Kernel geometry of one architecture family. The final real convolution
// always covers whatever spatial extent is left, as the 2x2 layer does for
// 100x100 inputs.
struct Geometry {
    kernels::Window wfm;
    kernels::ConvGeometry conv1;
    std::size_t pool_h, pool_w;
    kernels::ConvGeometry conv2;
    bool one_dimensional;
};

Geometry geometry_for(Shape input, Preset preset) {
    const bool signal = input.h == 1;
    if (preset == Preset::automatic) {
        preset = (!signal && input.h >= 100 && input.w >= 100) ? Preset::table : Preset::desk;
    }
    if (signal && preset == Preset::table) {
        throw std::invalid_argument("the table preset needs image input, got signal shape " + input.str());
    }
    if (signal) {
        return {{1, 5, 1, 2}, {1, 5, 1, 1, 0, 0}, 1, 2, {1, 5, 1, 3, 0, 0}, true};
    }
    if (preset == Preset::table) {
        return {{5, 5, 2, 2}, {5, 5, 1, 1, 0, 0}, 2, 2, {5, 5, 3, 3, 0, 0}, false};
    }
    return {{3, 3, 2, 2}, {3, 3, 1, 1, 1, 1}, 2, 2, {3, 3, 1, 1, 1, 1}, false};
}

kernels::ConvGeometry as_conv(kernels::Window w) { return {w.kh, w.kw, w.sh, w.sw, 0, 0}; }

void real_tail(ModelBuilder& b, const Geometry& g, std::size_t c1, std::size_t c2, std::size_t c3, std::size_t fc,
               std::size_t classes, bool residual) {
    b.conv(c1, g.conv1).batch_norm().relu();
    if (residual) b.conv_stack_residual(g.one_dimensional);
    b.max_pool(g.pool_h, g.pool_w, g.pool_h, g.pool_w);
    b.conv(c2, g.conv2).batch_norm().relu();
    if (residual) b.conv_stack_residual(g.one_dimensional);
    const Shape s = b.shape();
    b.conv(c3, {s.h, s.w, 1, 1, 0, 0}).batch_norm().relu();
    b.fully_connected(fc).fully_connected(classes);
}

}  // namespace

Model build_model(const ArchConfig& config) {
    if (config.classes < 2) throw std::invalid_argument("need at least two classes");
    const Geometry g = geometry_for(config.input, config.preset);
    const bool complex_input = true;
    ModelBuilder b(config.input, complex_input, config.seed, config.tr_rank);
    b.logit_init(config.logit_init);
    auto activation = [&] {
        if (config.use_trelu)
            b.trelu();
        else
            b.g_transport();
    };
    switch (config.arch) {
        case Arch::surreal:
            b.wfm_conv(20, g.wfm);
            activation();
            b.wfm_conv(20, g.wfm);
            activation();
            b.distance_transform(config.dist_sets);
            real_tail(b, g, 30, 30, 30, 50, config.classes, false);
            break;
        case Arch::surreal_res:
            b.wfm_conv(20, g.wfm);
            activation();
            b.wfm_residual(20, g.wfm, g.wfm);
            activation();
            b.distance_transform(config.dist_sets);
            real_tail(b, g, 30, 50, 70, 30, config.classes, true);
            break;
        case Arch::real_baseline:
            b.to_cartesian();
            b.conv(40, as_conv(g.wfm)).batch_norm().relu();
            b.conv(40, as_conv(g.wfm)).batch_norm().relu();
            real_tail(b, g, 30, 30, 30, 50, config.classes, false);
            break;
    }
    return b.build(arch_name(config.arch), config.classes);
}

}  // namespace surreal
