#pragma once

// Tensor-ring factorisation W(k1..kc) = trace(T1(:,k1,:) ... Tc(:,kc,:))
// with cores of shape (rank, n_k, rank).

#include <cstddef>
#include <span>
#include <vector>

namespace surreal {

struct TensorRingSpec {
    std::vector<std::size_t> modes;
    std::size_t rank = 1;
    /// cores[k] is row-major (rank, modes[k], rank).
    std::vector<std::vector<double>> cores;

    /// Cores filled with zeros.
    static TensorRingSpec zeros(std::vector<std::size_t> modes, std::size_t rank);
};

/// rank^2 * sum(modes).
std::size_t tensor_ring_param_count(const TensorRingSpec& spec);
std::size_t tensor_ring_dense_count(const TensorRingSpec& spec);

/// Dense tensor in row-major order over (k1, ..., kc).
std::vector<double> tensor_ring_reconstruct(const TensorRingSpec& spec);

/// Accumulates dL/dcores given dL/dW.
void tensor_ring_backward(const TensorRingSpec& spec, std::span<const double> grad_dense,
                          std::vector<std::vector<double>>& grad_cores);

}  // namespace surreal
