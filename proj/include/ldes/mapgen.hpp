// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ldes/core.hpp>
#include <ldes/parallel.hpp>
#include <ldes/projection.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <vector>

namespace ldes::mapgen {

namespace detail {

inline void check_aspect(const ProjectionParams& params, int width, int height)
{
    const double frame = static_cast<double>(width) / height;
    if (std::abs(frame - params.aspect) > 5e-3 * params.aspect)
        throw Error(ErrorCode::Mismatch, "params aspect " + std::to_string(params.aspect) +
                                             " does not match frame " + std::to_string(width) + "x" +
                                             std::to_string(height));
}

struct BoundaryPoint {
    Vec2 v;
    projection::SphericalDirection dir;
};

// Last valid point on the segment from the frame center to v.
inline BoundaryPoint boundary_along(Vec2 v, const ProjectionParams& params)
{
    double lo = 0.0;
    double hi = 1.0;
    auto best = projection::forward_model({0.0, 0.0}, params);
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (auto dir = projection::forward_model(v * mid, params)) {
            lo = mid;
            best = dir;
        }
        else {
            hi = mid;
        }
    }
    if (!best)
        throw Error(ErrorCode::Domain, "lens model is undefined at the frame center");
    return {v * lo, *best};
}

}  // namespace detail

/// Synthesizes a view map: every pixel stores 1/2 + (theta / Omega)(cos phi, sin phi)
/// with Omega the noted (rounded-up, whole-degree) FOV of the lens. Pixels the
/// model cannot reach store the direction where their ray leaves the field.
inline ViewMap generate_view_map(const ProjectionParams& params, int width, int height, bool with_vignette)
{
    projection::validate(params);
    if (width < 2 || height < 2)
        throw Error(ErrorCode::InvalidArgument, "view map must be at least 2x2");
    detail::check_aspect(params, width, height);

    const FovAngle label = FovAngle::from_degrees(params.omega.noted_degrees());
    const double omega = label.omega();
    const Extent dims{width, height};
    ViewMap out{ImageBuffer(width, height, with_vignette ? 3 : 2), label, false};

    parallel_for(height, [&](int y) {
        for (int x = 0; x < width; ++x) {
            Vec2 v = centered_coords({x, y}, dims, params.aspect);
            auto dir = projection::forward_model(v, params);
            if (!dir) {
                const auto edge = detail::boundary_along(v, params);
                v = edge.v;
                dir = edge.dir;
            }
            auto px = out.image.pixel(x, y);
            const double radius = dir->theta / omega;
            px[0] = static_cast<float>(0.5 + radius * std::cos(dir->phi));
            px[1] = static_cast<float>(0.5 + radius * std::sin(dir->phi));
            if (with_vignette) {
                const auto vig = projection::vignette_at(v, params);
                px[2] = static_cast<float>(vig.value_or(projection::kMinVignette));
            }
        }
    });
    return out;
}

/// Synthesizes the square footage map of a lens: each cell u over the
/// equidistant domain (theta = Omega |u - 1/2|) stores the footage ST that
/// sees that direction, with A = 1 where the footage covers it.
inline FootageMap generate_footage_map(const ProjectionParams& params, int size)
{
    projection::validate(params);
    if (size < 2)
        throw Error(ErrorCode::InvalidArgument, "footage map must be at least 2x2");

    const FovAngle label = FovAngle::from_degrees(params.omega.noted_degrees());
    const double omega = label.omega();
    const Extent dims{size, size};
    FootageMap out{ImageBuffer(size, size, 4), label};

    parallel_for(size, [&](int y) {
        for (int x = 0; x < size; ++x) {
            const TexCoord u = pixel_center({x, y}, dims);
            const Vec2 d{u.s - 0.5, u.t - 0.5};
            const projection::SphericalDirection dir{omega * d.norm(), std::atan2(d.y, d.x)};

            bool covered = true;
            auto v = projection::try_inverse_model(dir, params);
            if (!v) {
                covered = false;
                double lo = 0.0;
                double hi = dir.theta;
                v = projection::try_inverse_model({0.0, dir.phi}, params);
                for (int it = 0; it < 50 && v; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (auto w = projection::try_inverse_model({mid, dir.phi}, params)) {
                        lo = mid;
                        v = w;
                    }
                    else {
                        hi = mid;
                    }
                }
            }

            TexCoord st = v ? tex_from_image(*v, params.aspect) : TexCoord{0.5, 0.5};
            if (!st.in_frame())
                covered = false;
            st.s = std::clamp(st.s, 0.0, 1.0);
            st.t = std::clamp(st.t, 0.0, 1.0);

            auto px = out.image.pixel(x, y);
            px[0] = static_cast<float>(st.s);
            px[1] = static_cast<float>(st.t);
            px[2] = 0.0f;
            px[3] = covered ? 1.0f : 0.0f;
        }
    });
    return out;
}

/// Default footage-map size: next power of two >= the footage's larger side.
constexpr int default_footage_map_size(Extent footage) noexcept
{
    int n = 2;
    while (n < std::max(footage.width, footage.height))
        n *= 2;
    return n;
}

/// Footage map derived from a (possibly measured) view map by inverting it as
/// a scattered mapping: splat each view pixel's own ST at the footage-map
/// position its RG encodes, then close interior holes by inverse-distance
/// weighting over 3x3 up to 9x9 neighbourhoods.
inline FootageMap derive_footage_map(const ViewMap& vmap, int size, std::optional<FovAngle> fov = std::nullopt)
{
    validate(vmap);
    if (!vmap.fov)
        throw Error(ErrorCode::FovMissing, "view map carries no FOV label");
    if (size < 2)
        throw Error(ErrorCode::InvalidArgument, "footage map must be at least 2x2");

    const FovAngle label = fov.value_or(*vmap.fov);
    const double scale = vmap.fov->omega() / label.omega();
    const int width = vmap.image.width();
    const int height = vmap.image.height();
    const std::size_t cells = static_cast<std::size_t>(size) * size;

    struct Accum {
        std::vector<double> s, t, w;
        explicit Accum(std::size_t n) : s(n, 0.0), t(n, 0.0), w(n, 0.0) {}
    };

    // Fixed band count, merged in order.
    constexpr int kBands = 8;
    const int bands = std::min(kBands, height);
    std::vector<Accum> partial(bands, Accum(cells));
    parallel_for(bands, [&](int band) {
        Accum& acc = partial[band];
        const int y0 = band * height / bands;
        const int y1 = (band + 1) * height / bands;
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < width; ++x) {
                const TexCoord payload = pixel_center({x, y}, {width, height});
                const double us = (vmap.image.at(x, y, 0) - 0.5) * scale + 0.5;
                const double ut = (vmap.image.at(x, y, 1) - 0.5) * scale + 0.5;
                const double fx = us * size - 0.5;
                const double fy = ut * size - 0.5;
                const int ix = static_cast<int>(std::floor(fx));
                const int iy = static_cast<int>(std::floor(fy));
                const double ax = fx - ix;
                const double ay = fy - iy;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int cx = ix + dx;
                        const int cy = iy + dy;
                        if (cx < 0 || cy < 0 || cx >= size || cy >= size)
                            continue;
                        const double w = (dx ? ax : 1.0 - ax) * (dy ? ay : 1.0 - ay);
                        if (w <= 0.0)
                            continue;
                        const std::size_t i = static_cast<std::size_t>(cy) * size + cx;
                        acc.s[i] += w * payload.s;
                        acc.t[i] += w * payload.t;
                        acc.w[i] += w;
                    }
                }
            }
        }
    });
    Accum total(cells);
    for (const Accum& acc : partial)
        for (std::size_t i = 0; i < cells; ++i) {
            total.s[i] += acc.s[i];
            total.t[i] += acc.t[i];
            total.w[i] += acc.w[i];
        }

    std::size_t hit = 0;
    for (double w : total.w)
        hit += w > 0.0;
    if (hit * 100 < cells)
        throw Error(ErrorCode::EmptyMap, "view map covers less than 1% of the footage-map domain");

    FootageMap out{ImageBuffer(size, size, 4), label};
    parallel_for(size, [&](int y) {
        for (int x = 0; x < size; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * size + x;
            auto px = out.image.pixel(x, y);
            if (total.w[i] > 0.0) {
                px[0] = static_cast<float>(total.s[i] / total.w[i]);
                px[1] = static_cast<float>(total.t[i] / total.w[i]);
                px[3] = 1.0f;
                continue;
            }
            for (int radius = 1; radius <= 4; ++radius) {
                double ws = 0.0, ss = 0.0, ts = 0.0;
                unsigned quadrants = 0;
                for (int dy = -radius; dy <= radius; ++dy) {
                    for (int dx = -radius; dx <= radius; ++dx) {
                        const int cx = x + dx;
                        const int cy = y + dy;
                        if (cx < 0 || cy < 0 || cx >= size || cy >= size)
                            continue;
                        const std::size_t j = static_cast<std::size_t>(cy) * size + cx;
                        if (!(total.w[j] > 0.0))
                            continue;
                        const double w = 1.0 / (dx * dx + dy * dy);
                        ws += w;
                        ss += w * total.s[j] / total.w[j];
                        ts += w * total.t[j] / total.w[j];
                        if (dx >= 0 && dy > 0) quadrants |= 1u;
                        if (dx > 0 && dy <= 0) quadrants |= 2u;
                        if (dx <= 0 && dy < 0) quadrants |= 4u;
                        if (dx < 0 && dy >= 0) quadrants |= 8u;
                    }
                }
                // Only holes enclosed by samples on at least three sides are
                // interior; anything else lies outside the footage.
                if (std::popcount(quadrants) >= 3) {
                    px[0] = static_cast<float>(ss / ws);
                    px[1] = static_cast<float>(ts / ws);
                    px[3] = 1.0f;
                    break;
                }
            }
        }
    });
    return out;
}

}  // namespace ldes::mapgen
