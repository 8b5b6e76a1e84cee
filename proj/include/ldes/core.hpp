// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ldes/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ldes {

inline constexpr double kPi = std::numbers::pi;

constexpr double degrees(double radians) noexcept { return radians * 180.0 / kPi; }
constexpr double radians(double degrees) noexcept { return degrees * kPi / 180.0; }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const noexcept { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const noexcept { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const noexcept { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const noexcept { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const noexcept { return {x / s, y / s}; }
    constexpr double dot(Vec2 o) const noexcept { return x * o.x + y * o.y; }
    constexpr double norm2() const noexcept { return x * x + y * y; }
    double norm() const noexcept { return std::hypot(x, y); }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) noexcept { return v * s; }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(Vec3 o) const noexcept { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(Vec3 o) const noexcept { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const noexcept { return {x * s, y * s, z * s}; }
    constexpr double dot(Vec3 o) const noexcept { return x * o.x + y * o.y + z * o.z; }
    double norm() const noexcept { return std::sqrt(dot(*this)); }
    constexpr bool operator==(const Vec3&) const = default;
};

/// Normalized texture coordinate: s runs left to right, t bottom to top.
/// Values outside [0,1] are legal and mean "off the footage".
struct TexCoord {
    double s = 0.0;
    double t = 0.0;

    constexpr bool in_frame() const noexcept { return s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0; }
    constexpr bool operator==(const TexCoord&) const = default;
};

struct Extent {
    int width = 0;
    int height = 0;

    constexpr double aspect() const noexcept { return static_cast<double>(width) / height; }
    constexpr bool operator==(const Extent&) const = default;
};

struct PixelIndex {
    int x = 0;
    int y = 0;  // row 0 is the bottom scanline
};

/// W x H x C raster of 32-bit floats, row-major, scanlines stored bottom to top.
class ImageBuffer {
public:
    ImageBuffer() = default;

    ImageBuffer(int width, int height, int channels, float fill = 0.0f)
        : width_(width), height_(height), channels_(channels)
    {
        validate_shape(width, height, channels);
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }

    ImageBuffer(int width, int height, int channels, std::vector<float> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data))
    {
        validate_shape(width, height, channels);
        if (data_.size() != static_cast<std::size_t>(width) * height * channels)
            throw Error(ErrorCode::InvalidArgument, "image data length does not match its shape");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    Extent extent() const noexcept { return {width_, height_}; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    std::size_t index(int x, int y, int c = 0) const noexcept
    {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    float at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }
    float& at(int x, int y, int c) noexcept { return data_[index(x, y, c)]; }

    std::span<const float> pixel(int x, int y) const noexcept
    {
        return std::span<const float>(data_).subspan(index(x, y), channels_);
    }
    std::span<float> pixel(int x, int y) noexcept
    {
        return std::span<float>(data_).subspan(index(x, y), channels_);
    }

    bool all_finite() const noexcept
    {
        for (float v : data_)
            if (!std::isfinite(v))
                return false;
        return true;
    }

    bool operator==(const ImageBuffer&) const = default;

private:
    static void validate_shape(int width, int height, int channels)
    {
        if (width < 1 || height < 1)
            throw Error(ErrorCode::InvalidArgument, "image dimensions must be at least 1x1");
        if (channels < 1 || channels > 4)
            throw Error(ErrorCode::InvalidArgument, "image channel count must be 1..4");
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// Horizontal field of view. File names carry it as whole degrees, rounded up.
class FovAngle {
public:
    explicit FovAngle(double omega_radians) : omega_(omega_radians)
    {
        if (!(omega_ > 0.0) || omega_ > 2.0 * kPi + 1e-12)
            throw Error(ErrorCode::InvalidArgument, "FOV must lie in (0, 360] degrees");
        // 1e-9 deg slack for degree/radian round trips.
        noted_ = static_cast<int>(std::ceil(degrees(omega_) - 1e-9));
    }

    static FovAngle from_degrees(double deg) { return FovAngle(radians(deg)); }

    double omega() const noexcept { return omega_; }
    double degrees_value() const noexcept { return degrees(omega_); }
    int noted_degrees() const noexcept { return noted_; }
    /// The angle the file label actually denotes.
    double noted_omega() const noexcept { return radians(noted_); }
    bool is_whole_degrees() const noexcept { return omega_ == noted_omega(); }

    bool operator==(const FovAngle&) const = default;

private:
    double omega_;
    int noted_;
};

/// Output-shaped map: RG hold equidistant-space coordinates normalized by the
/// FOV, the optional B channel is a linear-light vignette. Never has alpha.
struct ViewMap {
    ImageBuffer image;
    std::optional<FovAngle> fov;
    bool normalized = false;

    bool has_vignette() const noexcept { return image.channels() == 3; }
    Extent extent() const noexcept { return image.extent(); }
};

/// Square map over the equidistant domain: RG = footage ST, B = 0, A = coverage.
struct FootageMap {
    ImageBuffer image;
    std::optional<FovAngle> fov;

    int size() const noexcept { return image.width(); }
};

inline void validate(const ViewMap& map)
{
    const int c = map.image.channels();
    if (c != 2 && c != 3)
        throw Error(ErrorCode::ChannelMismatch,
                    "view map needs 2 (RG) or 3 (RG + vignette) channels, got " + std::to_string(c));
}

inline void validate(const FootageMap& map)
{
    if (map.image.channels() != 4)
        throw Error(ErrorCode::ChannelMismatch, "footage map needs 4 channels, got " +
                                                    std::to_string(map.image.channels()));
    if (map.image.width() != map.image.height())
        throw Error(ErrorCode::InvalidArgument, "footage map must be square");
}

struct BrownConradyParams {
    double c1 = 0.0;  // cardinal offset, image-space units
    double c2 = 0.0;
    std::vector<double> radial_x;  // k1, k2, ... along x (also the symmetric series)
    std::vector<double> radial_y;  // k1, k2, ... along y
    double p1 = 0.0;  // decentering
    double p2 = 0.0;
    double q1 = 0.0;  // thin prism
    double q2 = 0.0;

    bool is_identity() const noexcept
    {
        auto zeros = [](const std::vector<double>& v) {
            for (double k : v)
                if (k != 0.0)
                    return false;
            return true;
        };
        return c1 == 0.0 && c2 == 0.0 && p1 == 0.0 && p2 == 0.0 && q1 == 0.0 && q2 == 0.0 &&
               zeros(radial_x) && zeros(radial_y);
    }

    bool is_axis_symmetric() const noexcept
    {
        const std::size_t n = std::max(radial_x.size(), radial_y.size());
        for (std::size_t i = 0; i < n; ++i) {
            const double kx = i < radial_x.size() ? radial_x[i] : 0.0;
            const double ky = i < radial_y.size() ? radial_y[i] : 0.0;
            if (kx != ky)
                return false;
        }
        return true;
    }

    bool operator==(const BrownConradyParams&) const = default;
};

/// Full synthetic lens description.
struct ProjectionParams {
    FovAngle omega = FovAngle::from_degrees(90.0);
    double k_x = 0.0;
    double k_y_top = 0.0;
    double k_y_bottom = 0.0;
    double squeeze = 1.0;  // anamorphic squeeze s, 1 = spherical
    BrownConradyParams bc;
    double aspect = 1.0;  // target frame width / height

    static ProjectionParams spherical(double omega_degrees, double k, double aspect = 1.0)
    {
        ProjectionParams p;
        p.omega = FovAngle::from_degrees(omega_degrees);
        p.k_x = p.k_y_top = p.k_y_bottom = k;
        p.aspect = aspect;
        return p;
    }

    bool is_radially_symmetric() const noexcept
    {
        return k_x == k_y_top && k_x == k_y_bottom;
    }

    bool operator==(const ProjectionParams&) const = default;
};

/// Image-space vector of a pixel center, measured from the frame center.
/// The horizontal half-width is 1 and the vertical half-extent is 1/aspect.
constexpr Vec2 centered_coords(PixelIndex pixel, Extent dims, double aspect) noexcept
{
    const double x = static_cast<double>(2 * pixel.x + 1 - dims.width) / dims.width;
    const double y = static_cast<double>(2 * pixel.y + 1 - dims.height) / dims.height;
    return {x, y / aspect};
}

constexpr Vec2 centered_coords(PixelIndex pixel, Extent dims) noexcept
{
    return centered_coords(pixel, dims, dims.aspect());
}

constexpr Vec2 image_from_tex(TexCoord tc, double aspect) noexcept
{
    return {2.0 * tc.s - 1.0, (2.0 * tc.t - 1.0) / aspect};
}

constexpr TexCoord tex_from_image(Vec2 v, double aspect) noexcept
{
    return {0.5 * (v.x + 1.0), 0.5 * (v.y * aspect + 1.0)};
}

constexpr TexCoord pixel_center(PixelIndex pixel, Extent dims) noexcept
{
    return {(pixel.x + 0.5) / dims.width, (pixel.y + 0.5) / dims.height};
}

}  // namespace ldes
