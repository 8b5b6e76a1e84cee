// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// File side of the toolkit: the map naming convention and 32-bit float
// TIFF / OpenEXR images. Samples are raw; no color management is applied.
//
//   <Type>_<Description>_[n]FOV<uint>.<ext>
//
//   Type        ViewMap | FootageMap
//   Description free text, may contain '_' but not begin or end with it
//   n           normalized FOV marker, view maps only
//   uint        horizontal FOV in whole degrees, no leading zeros
//   ext         tif | exr

#include <ldes/core.hpp>
#include <ldes/parallel.hpp>

#include <tiffio.h>

#include <ImfChannelList.h>
#include <ImfFrameBuffer.h>
#include <ImfHeader.h>
#include <ImfInputFile.h>
#include <ImfOutputFile.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ldes::io {

enum class MapType { ViewMap, FootageMap };

constexpr std::string_view to_string(MapType t) noexcept
{
    return t == MapType::ViewMap ? "ViewMap" : "FootageMap";
}

struct LdesFilename {
    MapType type = MapType::ViewMap;
    std::string description;
    int fov_degrees = 0;
    bool normalized = false;
    std::string extension = "exr";

    bool operator==(const LdesFilename&) const = default;
};

inline std::string format_filename(const LdesFilename& name)
{
    std::string out(to_string(name.type));
    out += '_';
    out += name.description;
    out += name.normalized ? "_nFOV" : "_FOV";
    out += std::to_string(name.fov_degrees);
    out += '.';
    out += name.extension;
    return out;
}

/// Parses the file-name component of a path. Errors name the component at fault.
inline LdesFilename parse_filename(std::string_view path)
{
    std::string_view name = path;
    if (const auto slash = name.find_last_of("/\\"); slash != std::string_view::npos)
        name = name.substr(slash + 1);
    auto fail = [&](const std::string& what, ErrorCode code = ErrorCode::NonConforming) -> LdesFilename {
        throw Error(code, "'" + std::string(name) + "': " + what);
    };

    const auto dot = name.rfind('.');
    if (dot == std::string_view::npos)
        return fail("extension missing (expected .tif or .exr)");
    const std::string_view ext = name.substr(dot + 1);
    if (ext != "tif" && ext != "exr")
        return fail("extension '" + std::string(ext) + "' is not tif or exr");
    const std::string_view stem = name.substr(0, dot);

    LdesFilename out;
    out.extension = std::string(ext);
    const auto last = stem.rfind('_');
    std::string_view fov = last == std::string_view::npos ? std::string_view{} : stem.substr(last + 1);
    if (fov.starts_with("nFOV")) {
        out.normalized = true;
        fov.remove_prefix(4);
    }
    else if (fov.starts_with("FOV")) {
        fov.remove_prefix(3);
    }
    else {
        return fail("map file names must end in _FOV<degrees> or _nFOV<degrees>",
                    ErrorCode::FovMissing);
    }

    const auto first = stem.find('_');
    if (first == last)
        return fail("description component missing");
    const std::string_view type = stem.substr(0, first);
    if (type == "ViewMap")
        out.type = MapType::ViewMap;
    else if (type == "FootageMap")
        out.type = MapType::FootageMap;
    else
        return fail("type '" + std::string(type) + "' is not ViewMap or FootageMap");

    if (fov.empty() || fov.size() > 3 || fov.front() == '0' ||
        !std::all_of(fov.begin(), fov.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return fail("FOV value '" + std::string(fov) + "' is not a whole number of degrees");
    out.fov_degrees = std::stoi(std::string(fov));
    if (out.fov_degrees < 1 || out.fov_degrees > 360)
        return fail("FOV value " + std::to_string(out.fov_degrees) + " outside 1..360");
    if (out.normalized && out.type == MapType::FootageMap)
        return fail("the normalized FOV marker applies to view maps only");

    out.description = std::string(stem.substr(first + 1, last - first - 1));
    if (out.description.empty())
        return fail("description component is empty");
    if (out.description.front() == '_' || out.description.back() == '_')
        return fail("description must not begin or end with '_'");
    return out;
}

/// FNV-1a over the raw sample bits, with the shape mixed in first.
inline std::uint64_t checksum(const ImageBuffer& image) noexcept
{
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    const std::array<std::int32_t, 3> shape{image.width(), image.height(), image.channels()};
    mix(shape.data(), sizeof shape);
    mix(image.data().data(), image.data().size_bytes());
    return h;
}

enum class Compression { None, Deflate };

struct WriteOptions {
    Compression compression = Compression::None;
};

namespace detail {

inline std::string lower_extension(const std::string& path)
{
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

inline thread_local std::string tiff_last_error;

inline void tiff_error_handler(const char* module, const char* fmt, va_list ap)
{
    char buf[512];
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    tiff_last_error = (module ? std::string(module) + ": " : std::string()) + buf;
}

inline void tiff_quiet_handler(const char*, const char*, va_list) {}

inline void install_tiff_handlers()
{
    static const bool once = [] {
        TIFFSetErrorHandler(tiff_error_handler);
        TIFFSetWarningHandler(tiff_quiet_handler);
        return true;
    }();
    (void)once;
}

struct TiffCloser {
    void operator()(TIFF* t) const noexcept { TIFFClose(t); }
};
using TiffHandle = std::unique_ptr<TIFF, TiffCloser>;

inline TiffHandle open_tiff(const std::string& path, const char* mode)
{
    install_tiff_handlers();
    tiff_last_error.clear();
    TiffHandle t(TIFFOpen(path.c_str(), mode));
    if (!t)
        throw Error(ErrorCode::Io, "cannot open TIFF '" + path + "'" +
                                       (tiff_last_error.empty() ? "" : " (" + tiff_last_error + ")"));
    return t;
}

inline ImageBuffer read_tiff(const std::string& path)
{
    auto tif = open_tiff(path, "r");
    std::uint32_t width = 0, height = 0;
    std::uint16_t spp = 1, bps = 1, format = SAMPLEFORMAT_UINT, planar = PLANARCONFIG_CONTIG;
    std::uint16_t orientation = ORIENTATION_TOPLEFT;
    TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width);
    TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &format);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_ORIENTATION, &orientation);

    if (bps != 32 || format != SAMPLEFORMAT_IEEEFP)
        throw Error(ErrorCode::UnsupportedDepth, "'" + path + "' stores " + std::to_string(bps) +
                                                     "-bit samples; 32-bit IEEE float is required");
    if (spp < 1 || spp > 4)
        throw Error(ErrorCode::ChannelMismatch, "'" + path + "' has " + std::to_string(spp) + " samples per pixel");
    if (TIFFIsTiled(tif.get()))
        throw Error(ErrorCode::Io, "'" + path + "' is tiled; only strip TIFFs are read");
    if (orientation != ORIENTATION_TOPLEFT && orientation != ORIENTATION_BOTLEFT)
        throw Error(ErrorCode::Io, "'" + path + "' uses an unsupported orientation");
    if (width == 0 || height == 0)
        throw Error(ErrorCode::Io, "'" + path + "' is empty");

    const int w = static_cast<int>(width);
    const int h = static_cast<int>(height);
    const int c = spp;
    ImageBuffer image(w, h, c);
    const bool bottom_up = orientation == ORIENTATION_BOTLEFT;
    std::vector<float> line(static_cast<std::size_t>(TIFFScanlineSize(tif.get())) / sizeof(float) + 1);

    for (int row = 0; row < h; ++row) {
        const int y = bottom_up ? row : h - 1 - row;
        if (planar == PLANARCONFIG_CONTIG) {
            if (TIFFReadScanline(tif.get(), line.data(), row, 0) < 0)
                throw Error(ErrorCode::Io, "'" + path + "': " + tiff_last_error);
            std::copy_n(line.data(), static_cast<std::size_t>(w) * c, image.pixel(0, y).data());
        }
        else {
            for (int s = 0; s < c; ++s) {
                if (TIFFReadScanline(tif.get(), line.data(), row, static_cast<std::uint16_t>(s)) < 0)
                    throw Error(ErrorCode::Io, "'" + path + "': " + tiff_last_error);
                for (int x = 0; x < w; ++x)
                    image.at(x, y, s) = line[x];
            }
        }
    }
    return image;
}

inline void write_tiff(const std::string& path, const ImageBuffer& image, const WriteOptions& options)
{
    auto tif = open_tiff(path, "w");
    const int w = image.width();
    const int h = image.height();
    const int c = image.channels();
    TIFF* t = tif.get();
    TIFFSetField(t, TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(w));
    TIFFSetField(t, TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(h));
    TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(c));
    TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, static_cast<std::uint16_t>(32));
    TIFFSetField(t, TIFFTAG_SAMPLEFORMAT, static_cast<std::uint16_t>(SAMPLEFORMAT_IEEEFP));
    TIFFSetField(t, TIFFTAG_PLANARCONFIG, static_cast<std::uint16_t>(PLANARCONFIG_CONTIG));
    TIFFSetField(t, TIFFTAG_ORIENTATION, static_cast<std::uint16_t>(ORIENTATION_TOPLEFT));
    TIFFSetField(t, TIFFTAG_PHOTOMETRIC,
                 static_cast<std::uint16_t>(c >= 3 ? PHOTOMETRIC_RGB : PHOTOMETRIC_MINISBLACK));
    TIFFSetField(t, TIFFTAG_COMPRESSION, static_cast<std::uint16_t>(options.compression == Compression::Deflate
                                                                       ? COMPRESSION_ADOBE_DEFLATE
                                                                       : COMPRESSION_NONE));
    if (c == 2 || c == 4) {
        const std::uint16_t extra = c == 4 ? EXTRASAMPLE_UNASSALPHA : EXTRASAMPLE_UNSPECIFIED;
        TIFFSetField(t, TIFFTAG_EXTRASAMPLES, static_cast<std::uint16_t>(1), &extra);
    }
    TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, TIFFDefaultStripSize(t, 0));

    std::vector<float> line(static_cast<std::size_t>(w) * c);
    for (int row = 0; row < h; ++row) {
        const auto src = image.pixel(0, h - 1 - row);
        std::copy_n(src.data(), line.size(), line.data());
        if (TIFFWriteScanline(t, line.data(), static_cast<std::uint32_t>(row), 0) < 0)
            throw Error(ErrorCode::Io, "writing '" + path + "': " + tiff_last_error);
    }
    if (!TIFFWriteDirectory(t))
        throw Error(ErrorCode::Io, "writing '" + path + "': " + tiff_last_error);
}

inline std::vector<std::string> exr_channel_names(int channels)
{
    switch (channels) {
    case 1: return {"Y"};
    case 2: return {"R", "G"};
    case 3: return {"R", "G", "B"};
    default: return {"R", "G", "B", "A"};
    }
}

inline ImageBuffer read_exr(const std::string& path)
{
    try {
        Imf::InputFile file(path.c_str());
        const Imf::Header& header = file.header();
        const Imath::Box2i dw = header.dataWindow();
        const int w = dw.max.x - dw.min.x + 1;
        const int h = dw.max.y - dw.min.y + 1;
        const Imf::ChannelList& list = header.channels();

        std::vector<std::string> names;
        if (list.findChannel("R") && list.findChannel("G")) {
            names = {"R", "G"};
            if (list.findChannel("B"))
                names.emplace_back("B");
            if (list.findChannel("A") && names.size() == 3)
                names.emplace_back("A");
        }
        else if (list.findChannel("Y")) {
            names.emplace_back("Y");
            if (list.findChannel("A"))
                names.emplace_back("A");
        }
        if (names.empty())
            throw Error(ErrorCode::ChannelMismatch, "'" + path + "' has no usable R,G[,B[,A]] or Y channel set");
        for (const auto& n : names)
            if (list.findChannel(n.c_str())->type != Imf::FLOAT)
                throw Error(ErrorCode::UnsupportedDepth,
                            "'" + path + "' channel " + n + " is not 32-bit float");

        const int c = static_cast<int>(names.size());
        std::vector<float> topdown(static_cast<std::size_t>(w) * h * c);
        Imf::FrameBuffer fb;
        const std::size_t xs = sizeof(float) * c;
        const std::size_t ys = xs * w;
        char* base = reinterpret_cast<char*>(topdown.data()) -
                     static_cast<std::ptrdiff_t>(dw.min.x) * static_cast<std::ptrdiff_t>(xs) -
                     static_cast<std::ptrdiff_t>(dw.min.y) * static_cast<std::ptrdiff_t>(ys);
        for (int k = 0; k < c; ++k)
            fb.insert(names[k].c_str(), Imf::Slice(Imf::FLOAT, base + k * sizeof(float), xs, ys));
        file.setFrameBuffer(fb);
        file.readPixels(dw.min.y, dw.max.y);

        ImageBuffer image(w, h, c);
        for (int row = 0; row < h; ++row)
            std::copy_n(topdown.data() + static_cast<std::size_t>(row) * w * c, static_cast<std::size_t>(w) * c,
                        image.pixel(0, h - 1 - row).data());
        return image;
    }
    catch (const Error&) {
        throw;
    }
    catch (const std::exception& e) {
        throw Error(ErrorCode::Io, "reading '" + path + "': " + e.what());
    }
}

inline void write_exr(const std::string& path, const ImageBuffer& image, const WriteOptions& options)
{
    const int w = image.width();
    const int h = image.height();
    const int c = image.channels();
    std::vector<float> topdown(image.data().size());
    for (int row = 0; row < h; ++row)
        std::copy_n(image.pixel(0, h - 1 - row).data(), static_cast<std::size_t>(w) * c,
                    topdown.data() + static_cast<std::size_t>(row) * w * c);
    try {
        Imf::Header header(w, h);
        header.compression() =
            options.compression == Compression::Deflate ? Imf::ZIP_COMPRESSION : Imf::NO_COMPRESSION;
        header.lineOrder() = Imf::INCREASING_Y;
        const auto names = exr_channel_names(c);
        for (const auto& n : names)
            header.channels().insert(n.c_str(), Imf::Channel(Imf::FLOAT));
        Imf::FrameBuffer fb;
        const std::size_t xs = sizeof(float) * c;
        for (int k = 0; k < c; ++k)
            fb.insert(names[k].c_str(), Imf::Slice(Imf::FLOAT, reinterpret_cast<char*>(topdown.data() + k), xs,
                                                   xs * w));
        Imf::OutputFile file(path.c_str(), header);
        file.setFrameBuffer(fb);
        file.writePixels(h);
    }
    catch (const std::exception& e) {
        throw Error(ErrorCode::Io, "writing '" + path + "': " + e.what());
    }
}

}  // namespace detail

/// Reads a 32-bit float TIFF or OpenEXR image; scanlines come back bottom-up.
inline ImageBuffer read_image(const std::string& path)
{
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::Io, "'" + path + "' does not exist");
    const std::string ext = detail::lower_extension(path);
    if (ext == ".tif" || ext == ".tiff")
        return detail::read_tiff(path);
    if (ext == ".exr")
        return detail::read_exr(path);
    throw Error(ErrorCode::Io, "'" + path + "': unknown image extension (use .tif or .exr)");
}

inline void write_image(const std::string& path, const ImageBuffer& image, const WriteOptions& options = {})
{
    if (image.empty())
        throw Error(ErrorCode::InvalidArgument, "refusing to write an empty image");
    const std::string ext = detail::lower_extension(path);
    if (ext == ".tif" || ext == ".tiff")
        return detail::write_tiff(path, image, options);
    if (ext == ".exr")
        return detail::write_exr(path, image, options);
    throw Error(ErrorCode::Io, "'" + path + "': unknown image extension (use .tif or .exr)");
}

using AnyMap = std::variant<ViewMap, FootageMap>;

/// Reads a map; type and FOV come from the file name, which must conform.
inline AnyMap read_map(const std::string& path)
{
    const LdesFilename name = parse_filename(path);
    ImageBuffer image = read_image(path);
    const FovAngle fov = FovAngle::from_degrees(name.fov_degrees);
    if (name.type == MapType::ViewMap) {
        ViewMap map{std::move(image), fov, name.normalized};
        if (map.image.channels() == 4)
            throw Error(ErrorCode::ChannelMismatch, "'" + path + "': view maps carry no alpha channel");
        validate(map);
        return map;
    }
    FootageMap map{std::move(image), fov};
    validate(map);
    return map;
}

inline ViewMap read_view_map(const std::string& path)
{
    auto any = read_map(path);
    if (auto* v = std::get_if<ViewMap>(&any))
        return std::move(*v);
    throw Error(ErrorCode::Mismatch, "'" + path + "' is a footage map, expected a view map");
}

inline FootageMap read_footage_map(const std::string& path)
{
    auto any = read_map(path);
    if (auto* f = std::get_if<FootageMap>(&any))
        return std::move(*f);
    throw Error(ErrorCode::Mismatch, "'" + path + "' is a view map, expected a footage map");
}

/// Conforming file name for a map (the label is the rounded-up FOV).
inline std::string map_filename(const ViewMap& map, const std::string& description, const std::string& ext = "exr")
{
    if (!map.fov)
        throw Error(ErrorCode::FovMissing, "view map carries no FOV label");
    return format_filename({MapType::ViewMap, description, map.fov->noted_degrees(), map.normalized, ext});
}

inline std::string map_filename(const FootageMap& map, const std::string& description, const std::string& ext = "exr")
{
    if (!map.fov)
        throw Error(ErrorCode::FovMissing, "footage map carries no FOV label");
    return format_filename({MapType::FootageMap, description, map.fov->noted_degrees(), false, ext});
}

/// Writes a view map. A label that is not a whole number of degrees is first
/// rescaled to the rounded-up value the file name carries.
inline void write_map(const ViewMap& map, const std::string& path, const WriteOptions& options = {})
{
    validate(map);
    if (!map.fov)
        throw Error(ErrorCode::FovMissing, "view map carries no FOV label");
    const LdesFilename name = parse_filename(path);
    if (name.type != MapType::ViewMap)
        throw Error(ErrorCode::NonConforming, "'" + path + "' names a footage map");
    if (name.fov_degrees != map.fov->noted_degrees())
        throw Error(ErrorCode::Mismatch, "'" + path + "' is labeled FOV " + std::to_string(name.fov_degrees) +
                                             " but the map encodes " + std::to_string(map.fov->noted_degrees()));
    if (name.normalized != map.normalized)
        throw Error(ErrorCode::Mismatch, "'" + path + "': nFOV marker does not match the map's normalized flag");
    if (map.fov->is_whole_degrees())
        return write_image(path, map.image, options);

    ImageBuffer rescaled = map.image;
    const double scale = map.fov->omega() / map.fov->noted_omega();
    for (int y = 0; y < rescaled.height(); ++y)
        for (int x = 0; x < rescaled.width(); ++x) {
            auto px = rescaled.pixel(x, y);
            px[0] = static_cast<float>((px[0] - 0.5) * scale + 0.5);
            px[1] = static_cast<float>((px[1] - 0.5) * scale + 0.5);
        }
    write_image(path, rescaled, options);
}

inline void write_map(const FootageMap& map, const std::string& path, const WriteOptions& options = {})
{
    validate(map);
    if (!map.fov)
        throw Error(ErrorCode::FovMissing, "footage map carries no FOV label");
    if (!map.fov->is_whole_degrees())
        throw Error(ErrorCode::InvalidArgument, "footage maps must be generated at a whole-degree FOV");
    const LdesFilename name = parse_filename(path);
    if (name.type != MapType::FootageMap)
        throw Error(ErrorCode::NonConforming, "'" + path + "' names a view map");
    if (name.fov_degrees != map.fov->noted_degrees())
        throw Error(ErrorCode::Mismatch, "'" + path + "' is labeled FOV " + std::to_string(name.fov_degrees) +
                                             " but the map encodes " + std::to_string(map.fov->noted_degrees()));
    write_image(path, map.image, options);
}

}  // namespace ldes::io
