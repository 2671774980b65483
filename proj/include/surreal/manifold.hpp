#pragma once

// Geometry of the nonzero complex plane viewed as the product manifold
// R+ x SO(2). Rotations are carried as a principal phase scalar; the
// Frobenius norm of the SO(2) principal log contributes sqrt(2)|dtheta|
// to every distance.

#include <numbers>

namespace surreal {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kDefaultEps = 1e-6;

/// Point of R+ x SO(2): magnitude > 0, phase in (-pi, pi].
struct PolarComplex {
    double magnitude = 1.0;
    double phase = 0.0;

    friend bool operator==(const PolarComplex&, const PolarComplex&) = default;
};

struct CartesianComplex {
    double re = 0.0;
    double im = 0.0;

    friend bool operator==(const CartesianComplex&, const CartesianComplex&) = default;
};

/// Scaling-rotation action g = (scale, angle).
struct GroupElement {
    double scale = 1.0;
    double angle = 0.0;

    friend bool operator==(const GroupElement&, const GroupElement&) = default;
};

/// Tangent coordinates (log r, theta).
struct TangentVector {
    double d_logr = 0.0;
    double d_theta = 0.0;

    friend bool operator==(const TangentVector&, const TangentVector&) = default;
};

/// Maps theta to (-pi, pi].
double wrap_phase(double theta);

/// Throws std::invalid_argument("non-finite complex value") on NaN/inf.
PolarComplex to_polar(CartesianComplex z, double eps = kDefaultEps);
CartesianComplex from_polar(PolarComplex p);

/// sqrt(log^2(|b|/|a|) + 2 wrap(b.phase - a.phase)^2)
double distance(PolarComplex a, PolarComplex b);

PolarComplex act(GroupElement g, PolarComplex p);
GroupElement compose(GroupElement g, GroupElement h);
GroupElement inverse(GroupElement g);
GroupElement identity_element();

/// The group element carrying a onto b.
GroupElement transporter(PolarComplex a, PolarComplex b);

TangentVector log_map(PolarComplex p);
PolarComplex exp_map(TangentVector v);

/// Shortest-arc geodesic; at exact antipodes the positive direction wins.
PolarComplex geodesic_interpolate(PolarComplex a, PolarComplex b, double t);

bool is_valid(PolarComplex p);

}  // namespace surreal
