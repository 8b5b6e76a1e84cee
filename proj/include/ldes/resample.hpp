// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ldes/core.hpp>
#include <ldes/parallel.hpp>
#include <ldes/transform.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace ldes::resample {

enum class FilterKind { Bilinear, CatmullRom };
enum class EdgeRule { Clamp, MarkOutside };

struct SampleFilter {
    FilterKind kind = FilterKind::Bilinear;
    EdgeRule edge = EdgeRule::Clamp;
};

/// Interpolated channel values at a texture coordinate. With MarkOutside,
/// `outside` reports coordinates beyond [0,1]^2 (values are still the
/// clamped interpolation).
struct Sample {
    std::array<double, 4> values{};
    int channels = 0;
    bool outside = false;

    double operator[](int c) const noexcept { return values[c]; }
};

namespace detail {

inline std::array<double, 4> catmull_rom_weights(double t) noexcept
{
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t), 0.5 * (t3 - t2)};
}

inline int clamp_index(int i, int n) noexcept { return std::clamp(i, 0, n - 1); }

}  // namespace detail

/// Separable filtering under the pixel-center convention: texel i covers
/// [i, i+1)/W and its value sits at (i + 1/2)/W. Indices clamp to the edge.
inline Sample sample(const ImageBuffer& buffer, TexCoord at, SampleFilter filter = {})
{
    const int w = buffer.width();
    const int h = buffer.height();
    const int c = buffer.channels();
    Sample out;
    out.channels = c;
    if (filter.edge == EdgeRule::MarkOutside)
        out.outside = !at.in_frame();

    const double fx = at.s * w - 0.5;
    const double fy = at.t * h - 0.5;
    const double x0f = std::floor(fx);
    const double y0f = std::floor(fy);
    const double tx = fx - x0f;
    const double ty = fy - y0f;
    // Coordinates far outside collapse onto the edge texels.
    const int x0 = static_cast<int>(std::clamp(x0f, -4.0, static_cast<double>(w + 4)));
    const int y0 = static_cast<int>(std::clamp(y0f, -4.0, static_cast<double>(h + 4)));

    if (filter.kind == FilterKind::Bilinear) {
        if (w < 2 || h < 2)
            throw Error(ErrorCode::InvalidArgument, "bilinear sampling needs at least 2x2 texels");
        const std::array<double, 2> wx{1.0 - tx, tx};
        const std::array<double, 2> wy{1.0 - ty, ty};
        for (int j = 0; j < 2; ++j) {
            if (wy[j] == 0.0)
                continue;
            const int yy = detail::clamp_index(y0 + j, h);
            for (int i = 0; i < 2; ++i) {
                if (wx[i] == 0.0)
                    continue;
                const auto px = buffer.pixel(detail::clamp_index(x0 + i, w), yy);
                const double wt = wx[i] * wy[j];
                for (int k = 0; k < c; ++k)
                    out.values[k] += wt * px[k];
            }
        }
        return out;
    }

    if (w < 4 || h < 4)
        throw Error(ErrorCode::InvalidArgument, "Catmull-Rom sampling needs at least 4x4 texels");
    const auto wx = detail::catmull_rom_weights(tx);
    const auto wy = detail::catmull_rom_weights(ty);
    for (int j = 0; j < 4; ++j) {
        if (wy[j] == 0.0)
            continue;
        const int yy = detail::clamp_index(y0 - 1 + j, h);
        std::array<double, 4> row{};
        for (int i = 0; i < 4; ++i) {
            if (wx[i] == 0.0)
                continue;
            const auto px = buffer.pixel(detail::clamp_index(x0 - 1 + i, w), yy);
            for (int k = 0; k < c; ++k)
                row[k] += wx[i] * px[k];
        }
        for (int k = 0; k < c; ++k)
            out.values[k] += wy[j] * row[k];
    }
    return out;
}

/// Samples the footage map through the view map (with tile scaling when the
/// FOV labels differ) into the final RGBA STMap at view-map resolution:
/// R,G = footage ST, B = target vignette (1 when the view map has none),
/// A = footage coverage. supersample > 1 box-averages an n x n grid per pixel.
inline ImageBuffer bake(const ViewMap& vmap, const FootageMap& fmap, SampleFilter filter = {}, int supersample = 1)
{
    validate(vmap);
    validate(fmap);
    if (!vmap.fov || !fmap.fov)
        throw Error(ErrorCode::FovMissing, "both maps need an FOV label to bake");
    if (supersample < 1)
        throw Error(ErrorCode::InvalidArgument, "supersample must be >= 1");

    const double scale = transform::tile_scale(vmap.fov->omega(), fmap.fov->omega());
    const int w = vmap.image.width();
    const int h = vmap.image.height();
    const int n = supersample;
    const SampleFilter fmap_filter{filter.kind, EdgeRule::MarkOutside};
    const SampleFilter vmap_filter{FilterKind::Bilinear, EdgeRule::Clamp};
    ImageBuffer out(w, h, 4);

    parallel_for(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            double rs = 0.0, gs = 0.0, as = 0.0;
            for (int b = 0; b < n; ++b) {
                for (int a = 0; a < n; ++a) {
                    double u = 0.0, v = 0.0;
                    if (n == 1) {
                        u = vmap.image.at(x, y, 0);
                        v = vmap.image.at(x, y, 1);
                    }
                    else {
                        const TexCoord sub{(x + (a + 0.5) / n) / w, (y + (b + 0.5) / n) / h};
                        const Sample vs = sample(vmap.image, sub, vmap_filter);
                        u = vs[0];
                        v = vs[1];
                    }
                    const TexCoord at{transform::apply_tile_scale(u, scale), transform::apply_tile_scale(v, scale)};
                    const Sample fs = sample(fmap.image, at, fmap_filter);
                    rs += fs[0];
                    gs += fs[1];
                    as += fs.outside ? 0.0 : std::clamp(fs[3], 0.0, 1.0);
                }
            }
            const double inv = 1.0 / (n * n);
            auto px = out.pixel(x, y);
            px[0] = static_cast<float>(rs * inv);
            px[1] = static_cast<float>(gs * inv);
            px[2] = vmap.has_vignette() ? vmap.image.at(x, y, 2) : 1.0f;
            px[3] = static_cast<float>(as * inv);
        }
    });
    return out;
}

namespace detail {

// Channel layout convention: 1 = Y, 2 = Y+A, 3 = RGB, 4 = RGBA.
constexpr bool has_alpha(int channels) noexcept { return channels == 2 || channels == 4; }
constexpr int color_channels(int channels) noexcept { return channels >= 3 ? 3 : 1; }

}  // namespace detail

/// Warps footage through a baked STMap. The output has the STMap's size and
/// the footage's color channels plus alpha = footage alpha * STMap A.
/// flip_t samples with t' = 1 - t for hosts whose vertical axis runs down.
inline ImageBuffer apply_stmap(const ImageBuffer& footage, const ImageBuffer& stmap, SampleFilter filter = {},
                               bool flip_t = false)
{
    if (stmap.channels() < 2)
        throw Error(ErrorCode::ChannelMismatch, "STMap needs at least RG channels");
    const int colors = detail::color_channels(footage.channels());
    const bool footage_alpha = detail::has_alpha(footage.channels());
    const int out_channels = colors + 1;
    const bool stmap_alpha = stmap.channels() == 4;
    const SampleFilter footage_filter{filter.kind, EdgeRule::Clamp};

    ImageBuffer out(stmap.width(), stmap.height(), out_channels);
    parallel_for(stmap.height(), [&](int y) {
        for (int x = 0; x < stmap.width(); ++x) {
            const auto st = stmap.pixel(x, y);
            if (!std::isfinite(st[0]) || !std::isfinite(st[1]))
                throw Error(ErrorCode::InvalidArgument, "STMap holds non-finite coordinates");
            const TexCoord at{st[0], flip_t ? 1.0 - st[1] : static_cast<double>(st[1])};
            const Sample s = sample(footage, at, footage_filter);
            auto px = out.pixel(x, y);
            for (int k = 0; k < colors; ++k)
                px[k] = static_cast<float>(s[k]);
            const double alpha = footage_alpha ? s[footage.channels() - 1] : 1.0;
            px[colors] = static_cast<float>(alpha * (stmap_alpha ? st[3] : 1.0f));
        }
    });
    return out;
}

namespace detail {

inline void check_vignette_source(const ViewMap& vmap)
{
    validate(vmap);
    if (!vmap.has_vignette())
        throw Error(ErrorCode::ChannelMismatch, "view map carries no vignette channel");
}

template <typename Op>
ImageBuffer vignette_blend(const ImageBuffer& footage, const ViewMap& vmap, Op op)
{
    check_vignette_source(vmap);
    const bool same_size = footage.extent() == vmap.extent();
    const int colors = color_channels(footage.channels());
    ImageBuffer out = footage;
    parallel_for(footage.height(), [&](int y) {
        for (int x = 0; x < footage.width(); ++x) {
            double b = 0.0;
            if (same_size)
                b = vmap.image.at(x, y, 2);
            else
                b = sample(vmap.image, pixel_center({x, y}, footage.extent()))[2];
            auto px = out.pixel(x, y);
            for (int k = 0; k < colors; ++k)
                px[k] = op(px[k], b);
        }
    });
    return out;
}

}  // namespace detail

/// Removes the lens vignette from linear-light footage.
inline ImageBuffer vignette_divide(const ImageBuffer& footage, const ViewMap& vmap)
{
    return detail::vignette_blend(footage, vmap, [](float value, double b) {
        if (!(b > 0.0))
            throw Error(ErrorCode::NonPositive, "vignette channel is not positive");
        return static_cast<float>(value / b);
    });
}

/// Adds the lens vignette to linear-light footage.
inline ImageBuffer vignette_multiply(const ImageBuffer& footage, const ViewMap& vmap)
{
    return detail::vignette_blend(footage, vmap,
                                  [](float value, double b) { return static_cast<float>(value * b); });
}

}  // namespace ldes::resample
