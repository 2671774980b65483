#include "surreal/wfm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace surreal {

namespace {

void check_lengths(std::size_t points, std::size_t weights) {
    if (points == 0) throw std::invalid_argument("wfm: empty point set");
    if (points != weights) {
        throw std::invalid_argument("wfm: " + std::to_string(points) + " points but " +
                                    std::to_string(weights) + " weights");
    }
}

// Minimiser of a 1-D objective sampled on a uniform lattice, refined by the
// vertex of the parabola through the best sample and its two neighbours.
template <typename Objective>
double lattice_argmin(double lo, double hi, int grid, Objective&& f) {
    if (hi <= lo) return lo;
    const double step = (hi - lo) / (grid - 1);
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
        const double v = f(lo + step * i);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    const double x0 = lo + step * best;
    if (best == 0 || best == grid - 1) return x0;
    const double fm = f(x0 - step);
    const double fp = f(x0 + step);
    const double curv = fm - 2.0 * best_val + fp;
    if (curv <= 0.0) return x0;
    const double shift = std::clamp(0.5 * (fm - fp) / curv, -1.0, 1.0);
    return x0 + shift * step;
}

}  // namespace

WeightVector::WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
    double sum = 0.0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("weights must be finite and nonnegative");
        sum += w;
    }
    if (sum <= 0.0) throw std::invalid_argument("degenerate weight vector");
    for (double& w : weights_) w /= sum;
}

WeightVector WeightVector::uniform(std::size_t n) { return WeightVector(std::vector<double>(n, 1.0)); }

PolarComplex wfm_incremental(std::span<const PolarComplex> points, std::span<const double> weights) {
    check_lengths(points.size(), weights.size());
    std::size_t k = 0;
    while (k < weights.size() && weights[k] == 0.0) ++k;
    if (k == weights.size()) throw std::invalid_argument("degenerate weight vector");

    PolarComplex mean = points[k];
    double cumulative = weights[k];
    for (++k; k < points.size(); ++k) {
        if (weights[k] == 0.0) continue;
        cumulative += weights[k];
        mean = geodesic_interpolate(mean, points[k], weights[k] / cumulative);
    }
    return mean;
}

PolarComplex wfm_incremental(std::span<const PolarComplex> points, const WeightVector& weights) {
    return wfm_incremental(points, weights.values());
}

FixedPointResult wfm_fixed_point(std::span<const PolarComplex> points, const WeightVector& weights,
                                 int max_iter, double tol) {
    if (max_iter < 1) throw std::invalid_argument("wfm_fixed_point: max_iter must be >= 1");
    FixedPointResult result;
    result.mean = wfm_incremental(points, weights);

    for (int it = 0; it < max_iter; ++it) {
        const TangentVector at = log_map(result.mean);
        double step_logr = 0.0;
        double step_theta = 0.0;
        for (std::size_t k = 0; k < points.size(); ++k) {
            step_logr += weights[k] * (std::log(points[k].magnitude) - at.d_logr);
            step_theta += weights[k] * wrap_phase(points[k].phase - at.d_theta);
        }
        result.mean = exp_map({at.d_logr + step_logr, at.d_theta + step_theta});
        result.iterations = it + 1;
        result.last_step = std::hypot(step_logr, std::sqrt(2.0) * step_theta);
        if (result.last_step < tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

double wfm_objective(std::span<const PolarComplex> points, const WeightVector& weights, PolarComplex m) {
    check_lengths(points.size(), weights.size());
    double total = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        const double d = distance(points[k], m);
        total += weights[k] * d * d;
    }
    return total;
}

PolarComplex wfm_bruteforce(std::span<const PolarComplex> points, const WeightVector& weights, int grid) {
    check_lengths(points.size(), weights.size());
    if (points.size() > kBruteforceMaxPoints) throw std::invalid_argument("wfm_bruteforce: too many points");
    if (grid < 3 || grid > kBruteforceMaxGrid) throw std::invalid_argument("wfm_bruteforce: grid out of range");

    // Phases are lifted next to the first point so that a cluster crossing
    // the cut gets a tight box.
    const double ref = points.front().phase;
    double lo_l = std::numeric_limits<double>::infinity(), hi_l = -lo_l;
    double lo_t = lo_l, hi_t = -lo_l;
    for (const auto& p : points) {
        const double l = std::log(p.magnitude);
        const double t = ref + wrap_phase(p.phase - ref);
        lo_l = std::min(lo_l, l);
        hi_l = std::max(hi_l, l);
        lo_t = std::min(lo_t, t);
        hi_t = std::max(hi_t, t);
    }
    const double pad_l = 0.1 * (hi_l - lo_l);
    const double pad_t = 0.1 * (hi_t - lo_t);
    lo_l -= pad_l;
    hi_l += pad_l;
    lo_t -= pad_t;
    hi_t += pad_t;

    // The objective splits as F(log r) + G(theta), so the minimum over the
    // grid x grid lattice is attained at (argmin F, argmin G).
    const double best_l = lattice_argmin(lo_l, hi_l, grid, [&](double l) {
        double f = 0.0;
        for (std::size_t k = 0; k < points.size(); ++k) {
            const double d = std::log(points[k].magnitude) - l;
            f += weights[k] * d * d;
        }
        return f;
    });
    const double best_t = lattice_argmin(lo_t, hi_t, grid, [&](double t) {
        double g = 0.0;
        for (std::size_t k = 0; k < points.size(); ++k) {
            const double d = wrap_phase(points[k].phase - t);
            g += 2.0 * weights[k] * d * d;
        }
        return g;
    });
    return exp_map({best_l, best_t});
}

}  // namespace surreal
