#pragma once

// Layer chains over the tape, and the network architectures built from them.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "surreal/kernels.hpp"
#include "surreal/ops.hpp"
#include "surreal/params.hpp"
#include "surreal/tape.hpp"

namespace surreal {

struct LayerInfo {
    std::string name;
    std::string kind;
    Shape in;
    Shape out;
    bool complex_out = false;
    std::size_t params = 0;
};

class Model;

/// Appends layers to a model while tracking the running shape.
class ModelBuilder {
public:
    ModelBuilder(Shape input, bool complex_input, std::uint64_t seed, std::size_t tr_rank = 0);

    ModelBuilder& wfm_conv(std::size_t out_channels, kernels::Window win);
    ModelBuilder& g_transport();
    ModelBuilder& trelu();
    ModelBuilder& distance_transform(std::size_t sets = 1);
    /// Complex residual block: [main(x) | align(x)], where main is a wFM
    /// convolution and align a wFM convolution bringing x to the same size.
    ModelBuilder& wfm_residual(std::size_t out_channels, kernels::Window main, kernels::Window align);
    ModelBuilder& to_cartesian();
    ModelBuilder& conv(std::size_t out_channels, kernels::ConvGeometry geom);
    ModelBuilder& batch_norm();
    ModelBuilder& relu();
    ModelBuilder& max_pool(std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw);
    ModelBuilder& fully_connected(std::size_t out_features);
    /// Real residual block: x + conv1x1(relu(conv3x3(relu(conv1x1(x))))).
    ModelBuilder& conv_stack_residual(bool one_dimensional);

    /// Spread of the initial wFM logits; 0 gives uniform weights.
    ModelBuilder& logit_init(double std) {
        logit_std_ = std;
        return *this;
    }

    Shape shape() const { return shape_; }
    bool complex() const { return complex_; }

    Model build(std::string arch_name, std::size_t classes);

private:
    using Forward = std::function<Value(Tape&, Value)>;

    std::string next_name(const std::string& kind);
    Param& add_param(const std::string& name, std::vector<std::size_t> shape, std::vector<double> init,
                     bool trainable = true);
    std::vector<double> kaiming(std::size_t count, std::size_t fan_in);
    /// Kernel parameter, optionally factorised as a tensor ring over `modes`;
    /// returns a forward-time accessor for the dense value.
    std::function<Value(Tape&)> kernel_param(const std::string& name, std::vector<std::size_t> modes,
                                             std::vector<double> init, double init_std);
    void push(std::string name, std::string kind, Shape out, bool complex_out, std::size_t params, Forward f);

    std::vector<double> logit_values(std::size_t count);
    Forward make_wfm(const std::string& name, std::size_t in_channels, std::size_t out_channels, kernels::Window win);

    Shape input_;
    bool complex_input_;
    Shape shape_;
    bool complex_;
    std::mt19937_64 rng_;
    std::size_t tr_rank_;
    double logit_std_ = 0.0;
    std::unique_ptr<ParamStore> params_;
    std::vector<LayerInfo> info_;
    std::vector<Forward> forwards_;
    std::map<std::string, int> counters_;
};

class Model {
public:
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    /// Records the whole chain on the tape; errors name the failing layer.
    /// layer_seconds, when given, receives each layer's forward wall time.
    Value forward(Tape& tape, Value input, std::vector<double>* layer_seconds = nullptr) const;
    Value forward(Tape& tape, const ChartBatch& input) const;

    ParamStore& params() { return *params_; }
    const ParamStore& params() const { return *params_; }
    const std::vector<LayerInfo>& layers() const { return info_; }
    Shape input_shape() const { return input_; }
    bool complex_input() const { return complex_input_; }
    std::size_t classes() const { return classes_; }
    const std::string& arch() const { return arch_; }

private:
    friend class ModelBuilder;
    Model() = default;

    std::string arch_;
    Shape input_;
    bool complex_input_ = true;
    std::size_t classes_ = 0;
    std::unique_ptr<ParamStore> params_;
    std::vector<LayerInfo> info_;
    std::vector<std::function<Value(Tape&, Value)>> forwards_;
};

enum class Arch { surreal, surreal_res, real_baseline };
enum class Preset { automatic, table, desk };

Arch parse_arch(const std::string& name);
std::string arch_name(Arch arch);
Preset parse_preset(const std::string& name);

struct ArchConfig {
    Arch arch = Arch::surreal;
    Shape input{1, 1, 128};
    std::size_t classes = 4;
    Preset preset = Preset::automatic;
    std::size_t tr_rank = 0;  // 0 keeps kernels dense
    std::size_t dist_sets = 1;
    bool use_trelu = false;   // tReLU instead of G-transport after each wFM layer
    double logit_init = 0.0;  // std of the initial wFM and distance logits
    std::uint64_t seed = 1;
};

Model build_model(const ArchConfig& config);

}  // namespace surreal
