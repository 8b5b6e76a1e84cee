// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ldes/core.hpp>
#include <ldes/parallel.hpp>
#include <ldes/projection.hpp>

#include <array>
#include <cmath>
#include <vector>

namespace ldes::transform {

/// Ratio applied to view-map coordinates when sampling a footage map labeled
/// with a different FOV: u' = (u - 1/2) * scale + 1/2.
inline double tile_scale(double omega_view, double omega_footage)
{
    if (!(omega_view > 0.0) || !(omega_footage > 0.0))
        throw Error(ErrorCode::InvalidArgument, "tile scale needs positive FOV angles");
    return omega_view / omega_footage;
}

constexpr double apply_tile_scale(double u, double scale) noexcept { return (u - 0.5) * scale + 0.5; }

namespace detail {

inline const FovAngle& require_fov(const ViewMap& vmap)
{
    validate(vmap);
    if (!vmap.fov)
        throw Error(ErrorCode::FovMissing, "view map carries no FOV label");
    return *vmap.fov;
}

}  // namespace detail

/// Rescales RG so the map encodes the same angles against omega_common:
/// RG' = (Omega_map / Omega_common)(RG - 1/2) + 1/2. B is untouched.
inline ViewMap normalize_fov(const ViewMap& vmap, const FovAngle& omega_common)
{
    const FovAngle& own = detail::require_fov(vmap);
    const double scale = own.omega() / omega_common.omega();
    ViewMap out = vmap;
    out.fov = omega_common;
    out.normalized = true;
    if (scale == 1.0)
        return out;
    auto& img = out.image;
    parallel_for(img.height(), [&](int y) {
        for (int x = 0; x < img.width(); ++x) {
            auto px = img.pixel(x, y);
            px[0] = static_cast<float>((px[0] - 0.5) * scale + 0.5);
            px[1] = static_cast<float>((px[1] - 0.5) * scale + 0.5);
        }
    });
    return out;
}

/// Largest polar angle a view map encodes, for checking a normalization target.
inline double max_encoded_theta(const ViewMap& vmap)
{
    const double omega = detail::require_fov(vmap).omega();
    double best = 0.0;
    const auto& img = vmap.image;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            best = std::max(best, omega * std::hypot(img.at(x, y, 0) - 0.5, img.at(x, y, 1) - 0.5));
    return best;
}

/// Per-channel (1 - opacity) a + opacity b. Both maps must share dimensions,
/// channel layout and FOV label; normalize first when they do not.
inline ViewMap blend_view_maps(const ViewMap& a, const ViewMap& b, double opacity)
{
    const FovAngle& fa = detail::require_fov(a);
    const FovAngle& fb = detail::require_fov(b);
    if (a.extent() != b.extent() || a.image.channels() != b.image.channels())
        throw Error(ErrorCode::Mismatch, "view maps differ in size or channel layout");
    if (fa.omega() != fb.omega())
        throw Error(ErrorCode::Mismatch, "view maps carry different FOV labels (" +
                                             std::to_string(fa.noted_degrees()) + " vs " +
                                             std::to_string(fb.noted_degrees()) + "); normalize first");
    if (!(opacity >= 0.0 && opacity <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "opacity must lie in [0, 1]");

    if (opacity == 0.0)
        return a;
    if (opacity == 1.0)
        return b;
    ViewMap out = a;
    out.normalized = a.normalized || b.normalized;
    const auto src = b.image.data();
    auto dst = out.image.data();
    const float wa = static_cast<float>(1.0 - opacity);
    const float wb = static_cast<float>(opacity);
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = wa * dst[i] + wb * src[i];
    return out;
}

struct Keyframe {
    int frame;
    double opacity;
};

/// Opacity at a frame, linear between keyframes and held outside them.
/// Keyframes must be sorted by frame.
inline double opacity_at(const std::vector<Keyframe>& keys, int frame)
{
    if (keys.empty())
        throw Error(ErrorCode::InvalidArgument, "no opacity keyframes");
    if (frame <= keys.front().frame)
        return keys.front().opacity;
    for (std::size_t i = 1; i < keys.size(); ++i) {
        if (frame <= keys[i].frame) {
            const Keyframe& a = keys[i - 1];
            const Keyframe& b = keys[i];
            const double u = static_cast<double>(frame - a.frame) / (b.frame - a.frame);
            return a.opacity + u * (b.opacity - a.opacity);
        }
    }
    return keys.back().opacity;
}

/// Incidence vector encoded by an RG pair of a map labeled omega.
inline Vec3 ray_from_rg(double r, double g, double omega) noexcept
{
    const double dx = r - 0.5;
    const double dy = g - 0.5;
    const double len = std::hypot(dx, dy);
    if (len == 0.0)
        return {0.0, 0.0, 1.0};
    const double theta = omega * len;
    const double s = std::sin(theta) / len;
    return {s * dx, s * dy, std::cos(theta)};
}

/// RG pair encoding an incidence vector against omega.
inline std::array<double, 2> rg_from_ray(Vec3 ray, double omega) noexcept
{
    const auto dir = projection::SphericalDirection::from_vector(ray);
    const double radius = dir.theta / omega;
    return {0.5 + radius * std::cos(dir.phi), 0.5 + radius * std::sin(dir.phi)};
}

/// 3-channel map of unit incidence vectors (x right, y up, z along the axis).
inline ImageBuffer view_map_to_rays(const ViewMap& vmap)
{
    const double omega = detail::require_fov(vmap).omega();
    const auto& img = vmap.image;
    ImageBuffer out(img.width(), img.height(), 3);
    parallel_for(img.height(), [&](int y) {
        for (int x = 0; x < img.width(); ++x) {
            const Vec3 ray = ray_from_rg(img.at(x, y, 0), img.at(x, y, 1), omega);
            auto px = out.pixel(x, y);
            px[0] = static_cast<float>(ray.x);
            px[1] = static_cast<float>(ray.y);
            px[2] = static_cast<float>(ray.z);
        }
    });
    return out;
}

/// Camera rotation applied to every encoded line of sight as
/// R = R_roll * R_tilt * R_pan (pan first). Axes are left-handed: x right,
/// y up, z forward. Positive pan turns the view right, positive tilt turns it
/// up, positive roll turns the picture content counter-clockwise.
class Rotation {
public:
    Rotation() = default;

    static Rotation from_pan_tilt_roll(double pan, double tilt, double roll)
    {
        return about_z(roll) * about_x(tilt) * about_y(pan);
    }

    Vec3 apply(Vec3 v) const noexcept
    {
        return {m_[0][0] * v.x + m_[0][1] * v.y + m_[0][2] * v.z,
                m_[1][0] * v.x + m_[1][1] * v.y + m_[1][2] * v.z,
                m_[2][0] * v.x + m_[2][1] * v.y + m_[2][2] * v.z};
    }

    Rotation inverse() const noexcept
    {
        Rotation t;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                t.m_[i][j] = m_[j][i];
        return t;
    }

    Rotation operator*(const Rotation& o) const noexcept
    {
        Rotation r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                r.m_[i][j] = 0.0;
                for (int k = 0; k < 3; ++k)
                    r.m_[i][j] += m_[i][k] * o.m_[k][j];
            }
        return r;
    }

    double operator()(int row, int col) const noexcept { return m_[row][col]; }

private:
    // (0,0,1) -> (sin a, 0, cos a)
    static Rotation about_y(double a)
    {
        Rotation r;
        const double c = std::cos(a), s = std::sin(a);
        r.m_ = {{{c, 0.0, s}, {0.0, 1.0, 0.0}, {-s, 0.0, c}}};
        return r;
    }
    // (0,0,1) -> (0, sin a, cos a)
    static Rotation about_x(double a)
    {
        Rotation r;
        const double c = std::cos(a), s = std::sin(a);
        r.m_ = {{{1.0, 0.0, 0.0}, {0.0, c, s}, {0.0, -s, c}}};
        return r;
    }
    // (1,0,0) -> (cos a, sin a, 0)
    static Rotation about_z(double a)
    {
        Rotation r;
        const double c = std::cos(a), s = std::sin(a);
        r.m_ = {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
        return r;
    }

    std::array<std::array<double, 3>, 3> m_{{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
};

/// RG -> incidence vector -> rotated -> RG'. Output may leave [0,1].
inline ViewMap rotate_view_map(const ViewMap& vmap, const Rotation& rotation)
{
    const double omega = detail::require_fov(vmap).omega();
    ViewMap out = vmap;
    auto& img = out.image;
    parallel_for(img.height(), [&](int y) {
        for (int x = 0; x < img.width(); ++x) {
            auto px = img.pixel(x, y);
            const Vec3 ray = rotation.apply(ray_from_rg(px[0], px[1], omega));
            const auto rg = rg_from_ray(ray, omega);
            px[0] = static_cast<float>(rg[0]);
            px[1] = static_cast<float>(rg[1]);
        }
    });
    return out;
}

inline ViewMap rotate_view_map(const ViewMap& vmap, double pan, double tilt, double roll)
{
    return rotate_view_map(vmap, Rotation::from_pan_tilt_roll(pan, tilt, roll));
}

}  // namespace ldes::transform
