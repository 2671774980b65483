#include "surreal/tensor_ring.hpp"

#include <stdexcept>

namespace surreal {

namespace {

using Matrix = std::vector<double>;  // rank x rank, row-major

void matmul(const Matrix& a, const double* b, Matrix& out, std::size_t r) {
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < r; ++k) s += a[i * r + k] * b[k * r + j];
            out[i * r + j] = s;
        }
}

// Copies the strided slice (:, index, :) of a core; element (a, i, b) of a
// (rank, n, rank) core sits at (a * n + i) * rank + b.
void load_slice(const TensorRingSpec& spec, std::size_t core, std::size_t index, Matrix& out) {
    const std::size_t r = spec.rank;
    const std::size_t n = spec.modes[core];
    const auto& c = spec.cores[core];
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < r; ++b) out[a * r + b] = c[(a * n + index) * r + b];
}

void validate(const TensorRingSpec& spec) {
    if (spec.modes.empty() || spec.rank == 0) throw std::invalid_argument("tensor ring: empty modes or zero rank");
    if (spec.cores.size() != spec.modes.size()) throw std::invalid_argument("tensor ring: core count mismatch");
    for (std::size_t k = 0; k < spec.modes.size(); ++k) {
        if (spec.cores[k].size() != spec.rank * spec.modes[k] * spec.rank) {
            throw std::invalid_argument("tensor ring: core " + std::to_string(k) + " has wrong size");
        }
    }
}

// Decodes a row-major flat index into per-mode indices.
void unravel(std::size_t flat, const std::vector<std::size_t>& modes, std::vector<std::size_t>& idx) {
    for (std::size_t k = modes.size(); k-- > 0;) {
        idx[k] = flat % modes[k];
        flat /= modes[k];
    }
}

}  // namespace

TensorRingSpec TensorRingSpec::zeros(std::vector<std::size_t> modes, std::size_t rank) {
    TensorRingSpec s;
    s.rank = rank;
    for (auto n : modes) s.cores.emplace_back(rank * n * rank, 0.0);
    s.modes = std::move(modes);
    return s;
}

std::size_t tensor_ring_param_count(const TensorRingSpec& spec) {
    std::size_t sum = 0;
    for (auto n : spec.modes) sum += n;
    return spec.rank * spec.rank * sum;
}

std::size_t tensor_ring_dense_count(const TensorRingSpec& spec) {
    std::size_t prod = 1;
    for (auto n : spec.modes) prod *= n;
    return prod;
}

std::vector<double> tensor_ring_reconstruct(const TensorRingSpec& spec) {
    validate(spec);
    const std::size_t r = spec.rank;
    const std::size_t total = tensor_ring_dense_count(spec);
    std::vector<double> out(total);
    std::vector<std::size_t> idx(spec.modes.size());
    Matrix acc(r * r), next(r * r), s(r * r);
    for (std::size_t flat = 0; flat < total; ++flat) {
        unravel(flat, spec.modes, idx);
        load_slice(spec, 0, idx[0], acc);
        for (std::size_t k = 1; k < spec.modes.size(); ++k) {
            load_slice(spec, k, idx[k], s);
            matmul(acc, s.data(), next, r);
            acc.swap(next);
        }
        double tr = 0.0;
        for (std::size_t i = 0; i < r; ++i) tr += acc[i * r + i];
        out[flat] = tr;
    }
    return out;
}

void tensor_ring_backward(const TensorRingSpec& spec, std::span<const double> grad_dense,
                          std::vector<std::vector<double>>& grad_cores) {
    validate(spec);
    const std::size_t r = spec.rank;
    const std::size_t c = spec.modes.size();
    const std::size_t total = tensor_ring_dense_count(spec);
    if (grad_dense.size() != total) throw std::invalid_argument("tensor ring: gradient size mismatch");
    if (grad_cores.size() != c) {
        grad_cores.resize(c);
        for (std::size_t k = 0; k < c; ++k) grad_cores[k].assign(spec.cores[k].size(), 0.0);
    }
    std::vector<std::size_t> idx(c);
    std::vector<Matrix> slices(c, Matrix(r * r));
    Matrix acc(r * r), next(r * r);
    for (std::size_t flat = 0; flat < total; ++flat) {
        const double g = grad_dense[flat];
        if (g == 0.0) continue;
        unravel(flat, spec.modes, idx);
        for (std::size_t k = 0; k < c; ++k) load_slice(spec, k, idx[k], slices[k]);
        // d trace(A_k P) / dA_k = P^T with P the cyclic product of the others.
        for (std::size_t k = 0; k < c; ++k) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t i = 0; i < r; ++i) acc[i * r + i] = 1.0;
            for (std::size_t step = 1; step < c; ++step) {
                matmul(acc, slices[(k + step) % c].data(), next, r);
                acc.swap(next);
            }
            const std::size_t n = spec.modes[k];
            auto& gc = grad_cores[k];
            for (std::size_t a = 0; a < r; ++a)
                for (std::size_t b = 0; b < r; ++b) gc[(a * n + idx[k]) * r + b] += g * acc[b * r + a];
        }
    }
}

}  // namespace surreal
