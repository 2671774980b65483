#pragma once

// Weighted Frechet mean on R+ x SO(2).
//
// wfm_incremental is the production estimator used by the network layers:
// starting from the first point with nonzero weight, each further point
// z_k is absorbed by moving along the geodesic towards it by
// t_k = w_k / sum_{i<=k} w_i. Isometries map geodesics to geodesics, so the
// estimator is exactly equivariant to the scaling-rotation group.
//
// wfm_fixed_point refines that estimate with Karcher-style iterations and
// wfm_bruteforce minimises the weighted squared-distance objective on a
// lattice; both exist to cross-check the incremental solver.

#include <span>
#include <vector>

#include "surreal/manifold.hpp"

namespace surreal {

/// Nonnegative weights renormalised to sum to one.
class WeightVector {
public:
    WeightVector() = default;
    /// Throws std::invalid_argument on negative/non-finite entries and
    /// "degenerate weight vector" when every entry is zero.
    explicit WeightVector(std::vector<double> weights);

    static WeightVector uniform(std::size_t n);

    std::size_t size() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }
    std::span<const double> values() const { return weights_; }

private:
    std::vector<double> weights_;
};

PolarComplex wfm_incremental(std::span<const PolarComplex> points, const WeightVector& weights);

/// Raw-weight overload; weights need not be normalised.
PolarComplex wfm_incremental(std::span<const PolarComplex> points, std::span<const double> weights);

struct FixedPointResult {
    PolarComplex mean;
    bool converged = false;
    int iterations = 0;
    double last_step = 0.0;
};

inline constexpr int kFixedPointMaxIter = 32;
inline constexpr double kFixedPointTol = 1e-10;

FixedPointResult wfm_fixed_point(std::span<const PolarComplex> points, const WeightVector& weights,
                                 int max_iter = kFixedPointMaxIter, double tol = kFixedPointTol);

/// Sum_k w_k d^2(z_k, m).
double wfm_objective(std::span<const PolarComplex> points, const WeightVector& weights, PolarComplex m);

inline constexpr std::size_t kBruteforceMaxPoints = 16;
inline constexpr int kBruteforceMaxGrid = 2048;

/// Lattice minimiser of the objective; test-only cost guards apply.
PolarComplex wfm_bruteforce(std::span<const PolarComplex> points, const WeightVector& weights, int grid);

}  // namespace surreal
