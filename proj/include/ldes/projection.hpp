// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ldes/core.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace ldes::projection {

/// Line of sight on the visual sphere: polar angle from the optical axis and
/// azimuth in the image plane (0 along +x, counter-clockwise towards +y).
struct SphericalDirection {
    double theta = 0.0;
    double phi = 0.0;

    Vec3 to_vector() const noexcept
    {
        const double st = std::sin(theta);
        return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
    }

    static SphericalDirection from_vector(Vec3 d) noexcept
    {
        const double planar = std::hypot(d.x, d.y);
        return {std::atan2(planar, d.z), planar == 0.0 ? 0.0 : std::atan2(d.y, d.x)};
    }
};

/// Lower bound stored for the vignette.
inline constexpr double kMinVignette = 1e-6;

namespace detail {

// Unnormalized radial profile m(theta) of the k-factor family.
inline double profile(double theta, double k) noexcept
{
    if (k > 0.0)
        return std::tan(theta * k) / k;
    if (k < 0.0)
        return std::sin(theta * -k) / -k;
    return theta;
}

// dm/dtheta
inline double profile_slope(double theta, double k) noexcept
{
    if (k > 0.0) {
        const double c = std::cos(theta * k);
        return 1.0 / (c * c);
    }
    if (k < 0.0)
        return std::cos(theta * -k);
    return 1.0;
}

// Largest polar angle the profile covers monotonically (capped at pi).
inline double theta_limit(double k) noexcept
{
    if (k == 0.0)
        return kPi;
    return std::min(kPi, kPi / (2.0 * std::abs(k)));
}

// For k >= 1/2 the limit is the rectilinear horizon and is itself excluded.
inline bool limit_is_open(double k) noexcept { return k > 0.0 && kPi / (2.0 * k) <= kPi; }

inline bool theta_in_domain(double theta, double k) noexcept
{
    if (!(theta >= 0.0))
        return false;
    const double lim = theta_limit(k);
    return limit_is_open(k) ? theta * k < kPi / 2.0 && theta <= lim : theta <= lim;
}

inline double edge_scale(double k, double omega) noexcept { return profile(0.5 * omega, k); }

/// Normalized radius at the profile limit, infinity for open limits.
inline double radius_limit(double k, double omega) noexcept
{
    if (limit_is_open(k))
        return std::numeric_limits<double>::infinity();
    return profile(theta_limit(k), k) / edge_scale(k, omega);
}

inline std::optional<double> try_radius_from_theta(double theta, double k, double omega) noexcept
{
    if (!theta_in_domain(theta, k))
        return std::nullopt;
    if (k == 0.0)
        return theta / (0.5 * omega);
    return profile(theta, k) / edge_scale(k, omega);
}

inline std::optional<double> try_theta_from_radius(double r_hat, double k, double omega) noexcept
{
    if (!(r_hat >= 0.0))
        return std::nullopt;
    double theta = 0.0;
    if (k > 0.0) {
        theta = std::atan(r_hat * edge_scale(k, omega) * k) / k;
    }
    else if (k < 0.0) {
        const double arg = r_hat * edge_scale(k, omega) * k;
        if (arg < -1.0)
            return std::nullopt;
        theta = std::asin(arg) / k;
    }
    else {
        theta = r_hat * 0.5 * omega;
    }
    if (theta > kPi * (1.0 + 1e-12))
        return std::nullopt;
    return std::min(theta, kPi);
}

// d(theta)/d(r_hat) at a given theta.
inline double theta_slope(double theta, double k, double omega) noexcept
{
    return edge_scale(k, omega) / profile_slope(theta, k);
}

}  // namespace detail

/// Rejects parameter sets whose frame edge lies outside a profile's domain.
inline void validate(const ProjectionParams& p)
{
    const double half = 0.5 * p.omega.omega();
    for (double k : {p.k_x, p.k_y_top, p.k_y_bottom}) {
        if (!(k >= -1.0 && k <= 1.0))
            throw Error(ErrorCode::InvalidArgument, "k factor must lie in [-1, 1]");
        if (!detail::theta_in_domain(half, k))
            throw Error(ErrorCode::Domain, "half FOV of " + std::to_string(degrees(half)) +
                                               " deg is beyond the domain of k = " + std::to_string(k));
    }
    if (!(p.squeeze > 0.0) || !std::isfinite(p.squeeze))
        throw Error(ErrorCode::InvalidArgument, "anamorphic squeeze must be positive");
    if (!(p.aspect > 0.0) || !std::isfinite(p.aspect))
        throw Error(ErrorCode::InvalidArgument, "aspect must be positive");
}

/// Normalized image radius of a ray at polar angle theta; the half-frame edge
/// (theta = omega/2) maps to 1.
inline double radius_from_theta(double theta, double k, double omega)
{
    if (auto r = detail::try_radius_from_theta(theta, k, omega))
        return *r;
    throw Error(ErrorCode::Domain, "theta " + std::to_string(theta) + " outside the domain of k = " +
                                       std::to_string(k));
}

inline double theta_from_radius(double r_hat, double k, double omega)
{
    if (auto t = detail::try_theta_from_radius(r_hat, k, omega))
        return *t;
    throw Error(ErrorCode::Domain, "radius " + std::to_string(r_hat) + " outside the image of k = " +
                                       std::to_string(k));
}

struct AnamorphicRadius {
    double r = 0.0;
    Vec2 v_prime;
};

/// Squeeze-weighted radius; v' = (|v| / r) v.
inline AnamorphicRadius anamorphic_radius(Vec2 v, double squeeze) noexcept
{
    const double r = std::sqrt(v.x * v.x + v.y * v.y / squeeze);
    if (r == 0.0)
        return {0.0, v};
    return {r, v * (v.norm() / r)};
}

/// (cos^2 phi, sin^2 phi) of the direction of v.
inline Vec2 aximorphic_weights(Vec2 v) noexcept
{
    const double n2 = v.norm2();
    if (n2 == 0.0)
        return {0.5, 0.5};
    return {v.x * v.x / n2, v.y * v.y / n2};
}

inline double aximorphic_theta(Vec2 v, double theta_x, double theta_y) noexcept
{
    if (theta_x == theta_y)
        return theta_x;
    if (v.norm2() == 0.0)
        return 0.0;
    const Vec2 w = aximorphic_weights(v);
    return w.x * theta_x + w.y * theta_y;
}

constexpr double select_k_y(double v_y, double k_top, double k_bottom) noexcept
{
    return v_y > 0.0 ? k_top : k_bottom;
}

namespace detail {

inline double radial_series(const std::vector<double>& ks, double r2) noexcept
{
    double sum = 1.0;
    double power = r2;
    for (double k : ks) {
        sum += k * power;
        power *= r2;
    }
    return sum;
}

}  // namespace detail

/// Division-model Brown-Conrady correction about the cardinal offset. With
/// weights, the radial term mixes the per-axis series (aximorphic variant).
inline Vec2 brown_conrady(Vec2 v, const BrownConradyParams& bc, std::optional<Vec2> weights = std::nullopt)
{
    const Vec2 c{bc.c1, bc.c2};
    const Vec2 f = v - c;
    const double r2 = f.norm2();

    double denom = 0.0;
    if (weights && !bc.is_axis_symmetric())
        denom = weights->x * detail::radial_series(bc.radial_x, r2) +
                weights->y * detail::radial_series(bc.radial_y, r2);
    else
        denom = detail::radial_series(bc.radial_x, r2);
    if (!(denom > 0.0))
        throw Error(ErrorCode::SingularDivision,
                    "radial polynomial is " + std::to_string(denom) + " at r^2 = " + std::to_string(r2));

    const Vec2 decentering = f * f.dot({bc.p1, bc.p2});
    const Vec2 prism = Vec2{bc.q1, bc.q2} * r2;
    return f / denom + c + decentering + prism;
}

namespace detail {

inline std::optional<Vec2> try_brown_conrady(Vec2 v, const BrownConradyParams& bc) noexcept
{
    if (bc.is_identity())
        return v;
    std::optional<Vec2> w;
    if (!bc.is_axis_symmetric())
        w = aximorphic_weights(v - Vec2{bc.c1, bc.c2});
    try {
        return brown_conrady(v, bc, w);
    }
    catch (const Error&) {
        return std::nullopt;
    }
}

// Solves brown_conrady(v) = target by Newton iteration on a finite-difference
// Jacobian, starting from the target itself.
inline std::optional<Vec2> try_invert_brown_conrady(Vec2 target, const BrownConradyParams& bc) noexcept
{
    if (bc.is_identity())
        return target;
    constexpr int kMaxIterations = 50;
    constexpr double kTolerance = 1e-8;
    constexpr double kStep = 1e-7;
    Vec2 v = target;
    double residual_norm = std::numeric_limits<double>::infinity();
    for (int it = 0; it < kMaxIterations; ++it) {
        auto fv = try_brown_conrady(v, bc);
        if (!fv)
            return std::nullopt;
        const Vec2 residual = *fv - target;
        residual_norm = residual.norm();
        if (residual_norm < 1e-15)
            return v;
        auto fxp = try_brown_conrady(v + Vec2{kStep, 0.0}, bc);
        auto fxm = try_brown_conrady(v - Vec2{kStep, 0.0}, bc);
        auto fyp = try_brown_conrady(v + Vec2{0.0, kStep}, bc);
        auto fym = try_brown_conrady(v - Vec2{0.0, kStep}, bc);
        if (!fxp || !fxm || !fyp || !fym)
            return std::nullopt;
        const Vec2 jx = (*fxp - *fxm) / (2.0 * kStep);
        const Vec2 jy = (*fyp - *fym) / (2.0 * kStep);
        const double det = jx.x * jy.y - jy.x * jx.y;
        if (det == 0.0 || !std::isfinite(det))
            return std::nullopt;
        const Vec2 delta{(jy.y * residual.x - jy.x * residual.y) / det,
                         (-jx.y * residual.x + jx.x * residual.y) / det};
        v = v - delta;
        if (delta.norm() < 1e-15)
            break;
    }
    auto fv = try_brown_conrady(v, bc);
    if (fv && (*fv - target).norm() < kTolerance)
        return v;
    return std::nullopt;
}

}  // namespace detail

/// Image-space vector to line of sight. Returns nullopt for pixels outside
/// the lens model's domain (they are flagged, never extrapolated).
inline std::optional<SphericalDirection> forward_model(Vec2 v_image, const ProjectionParams& p) noexcept
{
    const auto u = detail::try_brown_conrady(v_image, p.bc);
    if (!u)
        return std::nullopt;
    if (u->norm2() == 0.0)
        return SphericalDirection{0.0, 0.0};

    const double omega = p.omega.omega();
    const double r = anamorphic_radius(*u, p.squeeze).r;
    const auto theta_x = detail::try_theta_from_radius(r, p.k_x, omega);
    if (!theta_x)
        return std::nullopt;
    const double k_y = select_k_y(u->y, p.k_y_top, p.k_y_bottom);
    std::optional<double> theta_y = theta_x;
    if (k_y != p.k_x)
        theta_y = detail::try_theta_from_radius(r, k_y, omega);
    if (!theta_y)
        return std::nullopt;

    return SphericalDirection{aximorphic_theta(*u, *theta_x, *theta_y), std::atan2(u->y, u->x)};
}

namespace detail {

struct AxisPair {
    double k_x;
    double k_y;
    Vec2 weights;
};

inline AxisPair axes_along(Vec2 dir, const ProjectionParams& p) noexcept
{
    return {p.k_x, select_k_y(dir.y, p.k_y_top, p.k_y_bottom), aximorphic_weights(dir)};
}

// Mixed polar angle and its slope at normalized radius r.
inline std::optional<std::array<double, 2>> mixed_theta(double r, const AxisPair& a, double omega) noexcept
{
    const auto tx = try_theta_from_radius(r, a.k_x, omega);
    const auto ty = a.k_y == a.k_x ? tx : try_theta_from_radius(r, a.k_y, omega);
    if (!tx || !ty)
        return std::nullopt;
    const double theta = a.weights.x * *tx + a.weights.y * *ty;
    const double slope = a.weights.x * theta_slope(*tx, a.k_x, omega) +
                         a.weights.y * theta_slope(*ty, a.k_y, omega);
    return std::array<double, 2>{theta, slope};
}

/// Radius r with w_x theta_x(r) + w_y theta_y(r) = theta, by Newton steps
/// safeguarded with bisection. Throws OutOfField / NoConvergence.
inline double solve_mixed_radius(double theta, const AxisPair& a, double omega)
{
    const bool use_x = a.weights.x > 0.0;
    const bool use_y = a.weights.y > 0.0;
    double r_lim = std::numeric_limits<double>::infinity();
    if (use_x)
        r_lim = std::min(r_lim, radius_limit(a.k_x, omega));
    if (use_y)
        r_lim = std::min(r_lim, radius_limit(a.k_y, omega));

    double hi = 0.0;
    if (std::isfinite(r_lim)) {
        const auto top = mixed_theta(r_lim, a, omega);
        if (!top || theta > (*top)[0])
            throw Error(ErrorCode::OutOfField, "direction beyond the lens field");
        hi = r_lim;
    }
    else {
        const double reach = (use_x ? a.weights.x * theta_limit(a.k_x) : 0.0) +
                             (use_y ? a.weights.y * theta_limit(a.k_y) : 0.0);
        if (!(theta < reach))
            throw Error(ErrorCode::OutOfField, "direction beyond the lens field");
        hi = 1.0;
        for (;;) {
            const auto m = mixed_theta(hi, a, omega);
            if (!m)
                throw Error(ErrorCode::OutOfField, "direction beyond the lens field");
            if ((*m)[0] >= theta)
                break;
            hi *= 2.0;
            if (hi > 1e300)
                throw Error(ErrorCode::NoConvergence, "radius bracket diverged");
        }
    }

    double lo = 0.0;
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const auto m = mixed_theta(r, a, omega);
        if (!m)
            throw Error(ErrorCode::NoConvergence, "radius solve left the model domain");
        const double g = (*m)[0] - theta;
        if (g == 0.0)
            return r;
        (g < 0.0 ? lo : hi) = r;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi)
            return r;
        double next = r - g / (*m)[1];
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (next == r)
            return r;
        r = next;
    }
    throw Error(ErrorCode::NoConvergence, "radius solve did not converge");
}

}  // namespace detail

/// Line of sight to image-space vector. Azimuth is preserved by the radial
/// chain, so only the radius is solved for; Brown-Conrady is undone last.
inline Vec2 inverse_model(SphericalDirection dir, const ProjectionParams& p)
{
    if (!(dir.theta >= 0.0) || dir.theta > kPi)
        throw Error(ErrorCode::OutOfField, "polar angle outside [0, pi]");

    Vec2 u{0.0, 0.0};
    if (dir.theta > 0.0) {
        const double omega = p.omega.omega();
        const Vec2 e{std::cos(dir.phi), std::sin(dir.phi)};
        const auto axes = detail::axes_along(e, p);
        double r = 0.0;
        if (axes.k_x == axes.k_y) {
            const auto rr = detail::try_radius_from_theta(dir.theta, axes.k_x, omega);
            if (!rr)
                throw Error(ErrorCode::OutOfField, "direction beyond the lens field");
            r = *rr;
        }
        else {
            r = detail::solve_mixed_radius(dir.theta, axes, omega);
        }
        const double stretch = std::sqrt(e.x * e.x + e.y * e.y / p.squeeze);
        u = e * (r / stretch);
    }

    const auto v = detail::try_invert_brown_conrady(u, p.bc);
    if (!v)
        throw Error(ErrorCode::NoConvergence, "Brown-Conrady inversion failed");
    return *v;
}

inline std::optional<Vec2> try_inverse_model(SphericalDirection dir, const ProjectionParams& p) noexcept
{
    try {
        return inverse_model(dir, p);
    }
    catch (const Error&) {
        return std::nullopt;
    }
}

/// Relative illuminance implied by the projection geometry alone:
/// sin(theta) cos(theta) / (r r'), normalized to 1 on the axis.
inline double natural_vignette(double theta, double k, [[maybe_unused]] double omega) noexcept
{
    if (theta == 0.0)
        return 1.0;
    double v = 0.0;
    if (k < 0.0) {
        // m m' = sin(2 a theta) / (2 a), a = -k
        v = -k * std::sin(2.0 * theta) / std::sin(2.0 * -k * theta);
    }
    else {
        v = std::sin(theta) * std::cos(theta) / (detail::profile(theta, k) * detail::profile_slope(theta, k));
    }
    return v > kMinVignette ? v : kMinVignette;
}

/// Vignette for an image-space vector under a possibly axis-mixed model:
/// the same density formula applied to the radial profile along the pixel's
/// azimuth. Brown-Conrady is treated as a remap of the sensor, not as area
/// change.
inline std::optional<double> vignette_at(Vec2 v_image, const ProjectionParams& p) noexcept
{
    const auto u = detail::try_brown_conrady(v_image, p.bc);
    if (!u)
        return std::nullopt;
    if (u->norm2() == 0.0)
        return 1.0;
    const double omega = p.omega.omega();
    const double r = anamorphic_radius(*u, p.squeeze).r;
    const auto axes = detail::axes_along(*u, p);
    if (axes.k_x == axes.k_y) {
        const auto theta = detail::try_theta_from_radius(r, axes.k_x, omega);
        if (!theta)
            return std::nullopt;
        return natural_vignette(*theta, axes.k_x, omega);
    }
    const auto m = detail::mixed_theta(r, axes, omega);
    if (!m)
        return std::nullopt;
    const auto [theta, slope] = *m;
    const double center_slope = axes.weights.x * detail::edge_scale(axes.k_x, omega) +
                                axes.weights.y * detail::edge_scale(axes.k_y, omega);
    const double v = std::sin(theta) * std::cos(theta) * slope / (r * center_slope * center_slope);
    return v > kMinVignette ? v : kMinVignette;
}

}  // namespace ldes::projection
