#pragma once

// Differentiable layer primitives recorded on a Tape. Parameters enter as
// tape values (see Tape::parameter) so that derived parameters, such as
// tensor-ring reconstructions, compose with every layer.

#include <cstdint>
#include <vector>

#include "surreal/kernels.hpp"
#include "surreal/params.hpp"
#include "surreal/tape.hpp"

namespace surreal::ops {

/// Row-wise softmax of a flat array holding `rows` equal-length rows.
Value softmax_rows(Tape& t, Value logits, std::size_t rows);

/// weights: out_channels x (in.c * kh * kw), convex rows.
Value wfm_conv(Tape& t, Value x, Value weights, std::size_t out_channels, kernels::Window win);

/// params: per channel (log_scale, angle).
Value g_transport(Tape& t, Value x, Value params);

/// (r, theta) -> (max(r, 1), max(theta, 0)).
Value trelu(Tape& t, Value x);

/// weights: sets x (c*h*w), convex rows; output (sets*c, h, w).
Value distance_transform(Tape& t, Value x, Value weights, std::size_t sets);

/// Channel concatenation; both inputs complex or both real.
Value concat_channels(Tape& t, Value a, Value b);

Value add(Tape& t, Value a, Value b);

/// Complex input as 2c real channels (re, im per input channel).
Value to_cartesian(Tape& t, Value x);

/// bias may be an invalid Value for no bias.
Value conv2d(Tape& t, Value x, Value weights, Value bias, std::size_t out_channels, kernels::ConvGeometry geom);

struct BatchNormState {
    Param* running_mean = nullptr;
    Param* running_var = nullptr;
    double momentum = 0.9;
    double eps = 1e-5;
};

/// Batch statistics when the tape is training (and the running statistics
/// are updated), running statistics otherwise.
Value batch_norm(Tape& t, Value x, Value gamma, Value beta, BatchNormState state);

Value relu(Tape& t, Value x);

Value max_pool(Tape& t, Value x, std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw);

/// Flattens each sample; weights: out x in, bias: out.
Value fully_connected(Tape& t, Value x, Value weights, Value bias, std::size_t out_features);

/// Mean cross-entropy over the batch; a real scalar.
Value softmax_cross_entropy(Tape& t, Value logits, const std::vector<std::uint32_t>& labels);

/// sum_k coeffs[k] * x[k] over the whole batch; a real scalar.
Value weighted_sum(Tape& t, Value x, std::vector<double> coeffs);

/// Tensor-ring reconstruction from cores of shape (rank, n_k, rank).
Value tensor_ring(Tape& t, const std::vector<Value>& cores, const std::vector<std::size_t>& modes, std::size_t rank);

}  // namespace surreal::ops
