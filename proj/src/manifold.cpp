#include "surreal/manifold.hpp"

#include <cmath>
#include <stdexcept>

namespace surreal {

double wrap_phase(double theta) {
    if (theta > -kPi && theta <= kPi) return theta;
    double r = std::remainder(theta, kTwoPi);
    if (r <= -kPi) r += kTwoPi;
    if (r > kPi) r -= kTwoPi;
    return r;
}

PolarComplex to_polar(CartesianComplex z, double eps) {
    if (!std::isfinite(z.re) || !std::isfinite(z.im)) {
        throw std::invalid_argument("non-finite complex value");
    }
    const double r = std::hypot(z.re, z.im);
    if (r < eps) return {eps, 0.0};
    return {r, wrap_phase(std::atan2(z.im, z.re))};
}

CartesianComplex from_polar(PolarComplex p) {
    return {p.magnitude * std::cos(p.phase), p.magnitude * std::sin(p.phase)};
}

double distance(PolarComplex a, PolarComplex b) {
    const double dl = std::log(b.magnitude / a.magnitude);
    const double dt = wrap_phase(b.phase - a.phase);
    return std::sqrt(dl * dl + 2.0 * dt * dt);
}

PolarComplex act(GroupElement g, PolarComplex p) {
    return {g.scale * p.magnitude, wrap_phase(g.angle + p.phase)};
}

GroupElement compose(GroupElement g, GroupElement h) {
    return {g.scale * h.scale, wrap_phase(g.angle + h.angle)};
}

GroupElement inverse(GroupElement g) { return {1.0 / g.scale, wrap_phase(-g.angle)}; }

GroupElement identity_element() { return {1.0, 0.0}; }

GroupElement transporter(PolarComplex a, PolarComplex b) {
    return {b.magnitude / a.magnitude, wrap_phase(b.phase - a.phase)};
}

TangentVector log_map(PolarComplex p) { return {std::log(p.magnitude), p.phase}; }

PolarComplex exp_map(TangentVector v) { return {std::exp(v.d_logr), wrap_phase(v.d_theta)}; }

PolarComplex geodesic_interpolate(PolarComplex a, PolarComplex b, double t) {
    if (t == 0.0) return a;
    if (t == 1.0) return b;
    const double mag = std::pow(a.magnitude, 1.0 - t) * std::pow(b.magnitude, t);
    return {mag, wrap_phase(a.phase + t * wrap_phase(b.phase - a.phase))};
}

bool is_valid(PolarComplex p) {
    return std::isfinite(p.magnitude) && p.magnitude > 0.0 && std::isfinite(p.phase) &&
           p.phase > -kPi && p.phase <= kPi;
}

}  // namespace surreal
