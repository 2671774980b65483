#pragma once

// Optimisers, the training loop, evaluation and finite-difference checking.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "surreal/data.hpp"
#include "surreal/model.hpp"

namespace surreal {

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer(const std::string& name);
std::string optimizer_name(OptimizerKind kind);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::optional<double> clip_norm;

    void validate() const;
};

/// Applies one update to every learning parameter from its accumulated grad.
/// Adam moments live in the ParamStore so that checkpoints carry them.
void optimizer_step(ParamStore& params, const OptimizerConfig& config);

struct StepResult {
    double loss = 0.0;
    std::size_t correct = 0;
};

/// Forward, mean cross-entropy, backward and one optimiser update. Throws
/// std::runtime_error naming the first layer producing a non-finite value
/// when the loss is NaN/inf.
StepResult train_step(Model& model, const ChartBatch& batch, const std::vector<std::uint32_t>& labels,
                      const OptimizerConfig& optimizer);

struct EpochMetrics {
    std::size_t epoch = 0;
    std::string split;
    double loss = 0.0;
    double accuracy = 0.0;
    double seconds = 0.0;

    /// One-line JSON object.
    std::string json() const;
};

struct TrainConfig {
    std::size_t epochs = 120;
    std::size_t batch = 32;
    std::uint64_t seed = 1;
    /// Numbering of the first epoch run here, for resumed training.
    std::size_t first_epoch = 1;
    OptimizerConfig optimizer;
};

using MetricsSink = std::function<void(const EpochMetrics&)>;

/// Shuffles with a generator seeded from (seed, epoch) so resumed runs see
/// the same order as uninterrupted ones. Emits a train line per epoch and a
/// test line when a test set is given.
void train_loop(Model& model, const Dataset& train, const Dataset* test, const TrainConfig& config,
                const MetricsSink& sink);

struct EvalReport {
    double accuracy = 0.0;
    double loss = 0.0;
    std::vector<double> per_class;
    /// confusion[true][predicted]
    std::vector<std::vector<std::size_t>> confusion;

    std::string json() const;
};

EvalReport evaluate(const Model& model, const Dataset& data, std::size_t batch = 64);

/// Class scores for the given samples, inference mode.
RealBatch predict(const Model& model, const ChartBatch& input);

struct GradCheckOptions {
    double h = 1e-5;
    double tol = 1e-4;
    /// Denominator floor of the relative error.
    double floor = 1e-4;
    /// Entries checked per parameter tensor (all when 0).
    std::size_t per_param = 8;
    std::uint64_t seed = 1;
    /// Restrict to these parameter names (all learning parameters when empty).
    std::vector<std::string> params;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst;
    std::size_t checked = 0;
    std::size_t excluded = 0;
    bool passed = true;
};

/// Scalar objective recorded on a fresh tape.
using Objective = std::function<Value(Tape&)>;

/// Central differences against the analytic gradient. Entries whose branch
/// signature changes within 10h are skipped as non-smooth neighbourhoods.
GradCheckReport grad_check(ParamStore& params, const Objective& objective, const GradCheckOptions& options);

/// Objective: a fixed random linear functional of the model's logits,
/// training-mode tape.
GradCheckReport grad_check(Model& model, const ChartBatch& input, const GradCheckOptions& options);

}  // namespace surreal
