// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

// ldes: command-line front-end for synthesizing, combining, baking and
// applying lens distortion maps.

#include <ldes/ldes.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ldes;

namespace {

struct MapOutput {
    std::string dir = ".";
    std::string desc;
    std::string ext = "exr";
    bool deflate = false;

    void add_to(CLI::App* cmd)
    {
        cmd->add_option("--out", dir, "Output directory")->capture_default_str();
        cmd->add_option("--desc", desc, "Description component of the output file name");
        cmd->add_option("--ext", ext, "Output format")->check(CLI::IsMember({"exr", "tif"}))->capture_default_str();
        cmd->add_flag("--deflate", deflate, "Compress the output (ZIP for EXR, Deflate for TIFF)");
    }

    io::WriteOptions options() const { return {deflate ? io::Compression::Deflate : io::Compression::None}; }

    std::string path_for(const std::string& filename) const
    {
        fs::create_directories(dir);
        return (fs::path(dir) / filename).string();
    }
};

struct FileOutput {
    std::string path;
    bool deflate = false;

    void add_to(CLI::App* cmd)
    {
        cmd->add_option("--out", path, "Output image (.exr or .tif)")->required();
        cmd->add_flag("--deflate", deflate, "Compress the output");
    }

    void write(const ImageBuffer& image) const
    {
        if (const auto parent = fs::path(path).parent_path(); !parent.empty())
            fs::create_directories(parent);
        io::write_image(path, image, {deflate ? io::Compression::Deflate : io::Compression::None});
        std::cout << path << '\n';
    }
};

std::string description_of(const std::string& given, const std::string& fallback)
{
    const std::string& d = given.empty() ? fallback : given;
    if (d.empty())
        throw Error(ErrorCode::InvalidArgument, "an output description is required (--desc)");
    return d;
}

std::string stem_description(const std::string& path)
{
    try {
        return io::parse_filename(path).description;
    }
    catch (const Error&) {
        return fs::path(path).stem().string();
    }
}

void write_view(const ViewMap& map, const MapOutput& out, const std::string& desc)
{
    const std::string path = out.path_for(io::map_filename(map, desc, out.ext));
    io::write_map(map, path, out.options());
    std::cout << path << '\n';
}

void write_footage(const FootageMap& map, const MapOutput& out, const std::string& desc)
{
    const std::string path = out.path_for(io::map_filename(map, desc, out.ext));
    io::write_map(map, path, out.options());
    std::cout << path << '\n';
}

resample::SampleFilter parse_filter(const std::string& name)
{
    if (name == "bilinear")
        return {resample::FilterKind::Bilinear, resample::EdgeRule::Clamp};
    return {resample::FilterKind::CatmullRom, resample::EdgeRule::Clamp};
}

Extent parse_size(const std::string& text)
{
    int w = 0, h = 0;
    char x = 0;
    char extra = 0;
    if (std::sscanf(text.c_str(), "%d%c%d%c", &w, &x, &h, &extra) != 3 || (x != 'x' && x != 'X') || w < 2 || h < 2)
        throw Error(ErrorCode::InvalidArgument, "--size expects WxH with both sides >= 2, got '" + text + "'");
    return {w, h};
}

// "x" is a single opacity; "t:x,t:x,..." lists keyframes by frame number.
std::vector<transform::Keyframe> parse_opacity(const std::string& text)
{
    std::vector<transform::Keyframe> keys;
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        }
        catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(v))
            throw Error(ErrorCode::InvalidArgument, "--opacity: '" + s + "' is not a number");
        return v;
    };
    if (text.find(':') == std::string::npos) {
        keys.push_back({0, number(text)});
    }
    else {
        std::string item;
        std::istringstream in(text);
        while (std::getline(in, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw Error(ErrorCode::InvalidArgument, "--opacity: keyframe '" + item + "' must read frame:opacity");
            const double t = number(item.substr(0, colon));
            if (t != std::floor(t) || t < 0 || t > 999999)
                throw Error(ErrorCode::InvalidArgument, "--opacity: keyframe frame '" + item + "' must be a whole number");
            keys.push_back({static_cast<int>(t), number(item.substr(colon + 1))});
        }
        for (std::size_t i = 1; i < keys.size(); ++i)
            if (keys[i].frame <= keys[i - 1].frame)
                throw Error(ErrorCode::InvalidArgument, "--opacity: keyframes must have increasing frame numbers");
    }
    for (const transform::Keyframe& k : keys)
        if (!(k.opacity >= 0.0 && k.opacity <= 1.0))
            throw Error(ErrorCode::InvalidArgument, "--opacity: values must lie in [0, 1]");
    return keys;
}

std::string frame_suffix(int frame)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", frame);
    return buf;
}

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::MalformedInput:
        return 2;
    default:
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Lens distortion map toolkit"};
    app.name("ldes");
    app.require_subcommand(1);
    app.set_version_flag("--version", "ldes 1.0.0");

    // gen-view
    std::string gv_params;
    std::string gv_size;
    bool gv_vignette = false;
    MapOutput gv_out;
    auto* gen_view = app.add_subcommand("gen-view", "Synthesize a view map from a params file");
    gen_view->add_option("params", gv_params, "Lens params file")->required()->check(CLI::ExistingFile);
    gen_view->add_option("--size", gv_size, "Frame size WxH")->required();
    gen_view->add_flag("--vignette", gv_vignette, "Store the natural vignette in B");
    gv_out.add_to(gen_view);

    // gen-footage
    std::string gf_params;
    std::string gf_from_view;
    int gf_size = 0;
    int gf_fov = 0;
    MapOutput gf_out;
    auto* gen_footage = app.add_subcommand("gen-footage", "Synthesize or derive a footage map");
    auto* gf_params_opt = gen_footage->add_option("params", gf_params, "Lens params file")->check(CLI::ExistingFile);
    auto* gf_view_opt = gen_footage->add_option("--from-view", gf_from_view, "Derive from this view map")
                            ->check(CLI::ExistingFile);
    gf_params_opt->excludes(gf_view_opt);
    gen_footage->add_option("--size", gf_size, "Square map size (default: 1024, or derived from the view map)")
        ->check(CLI::Range(2, 65536));
    gen_footage->add_option("--fov", gf_fov, "FOV label in degrees for a derived map (default: the view map's)")
        ->check(CLI::Range(1, 360));
    gf_out.add_to(gen_footage);

    // blend
    std::string bl_a, bl_b, bl_opacity;
    int bl_common = 0;
    MapOutput bl_out;
    auto* blend = app.add_subcommand("blend", "Blend two view maps, optionally as a keyframed sequence");
    blend->add_option("a", bl_a, "View map at opacity 0")->required()->check(CLI::ExistingFile);
    blend->add_option("b", bl_b, "View map at opacity 1")->required()->check(CLI::ExistingFile);
    blend->add_option("--opacity", bl_opacity, "Opacity x, or keyframes frame:x,frame:x,...")->required();
    blend->add_option("--common-fov", bl_common, "Normalize both maps to this FOV in degrees first")
        ->check(CLI::Range(1, 360));
    bl_out.add_to(blend);

    // bake
    std::string bk_view, bk_footage, bk_filter = "bilinear";
    int bk_supersample = 1;
    FileOutput bk_out;
    auto* bake = app.add_subcommand("bake", "Bake a view map and a footage map into an STMap");
    bake->add_option("view", bk_view, "View map")->required()->check(CLI::ExistingFile);
    bake->add_option("footage-map", bk_footage, "Footage map")->required()->check(CLI::ExistingFile);
    bake->add_option("--filter", bk_filter, "Footage-map filter")
        ->check(CLI::IsMember({"bilinear", "catmull-rom"}))
        ->capture_default_str();
    bake->add_option("--supersample", bk_supersample, "n x n samples per output pixel")
        ->check(CLI::Range(1, 16))
        ->capture_default_str();
    bk_out.add_to(bake);

    // apply
    std::string ap_footage, ap_stmap, ap_filter = "bilinear";
    bool ap_flip = false;
    FileOutput ap_out;
    auto* apply = app.add_subcommand("apply", "Warp footage through an STMap");
    apply->add_option("footage", ap_footage, "Footage image")->required()->check(CLI::ExistingFile);
    apply->add_option("stmap", ap_stmap, "Baked STMap")->required()->check(CLI::ExistingFile);
    apply->add_option("--filter", ap_filter, "Footage filter")
        ->check(CLI::IsMember({"bilinear", "catmull-rom"}))
        ->capture_default_str();
    apply->add_flag("--flip-t", ap_flip, "Sample with t' = 1 - t (hosts with a downward vertical axis)");
    ap_out.add_to(apply);

    // rays
    std::string ry_view;
    FileOutput ry_out;
    auto* rays = app.add_subcommand("rays", "Export the incidence vectors of a view map");
    rays->add_option("view", ry_view, "View map")->required()->check(CLI::ExistingFile);
    ry_out.add_to(rays);

    // rotate
    std::string rt_view;
    double rt_pan = 0.0, rt_tilt = 0.0, rt_roll = 0.0;
    MapOutput rt_out;
    auto* rotate = app.add_subcommand("rotate", "Rotate the lines of sight of a view map");
    rotate->add_option("view", rt_view, "View map")->required()->check(CLI::ExistingFile);
    rotate->add_option("--pan", rt_pan, "Pan in degrees (positive turns right)");
    rotate->add_option("--tilt", rt_tilt, "Tilt in degrees (positive turns up)");
    rotate->add_option("--roll", rt_roll, "Roll in degrees (positive turns content counter-clockwise)");
    rt_out.add_to(rotate);

    // vignette
    std::string vg_footage, vg_view;
    bool vg_divide = false, vg_multiply = false;
    FileOutput vg_out;
    auto* vignette = app.add_subcommand("vignette", "Remove or add lens vignetting");
    vignette->add_option("footage", vg_footage, "Linear-light footage")->required()->check(CLI::ExistingFile);
    vignette->add_option("view", vg_view, "View map with a vignette channel")->required()->check(CLI::ExistingFile);
    auto* div_flag = vignette->add_flag("--divide", vg_divide, "Remove vignetting");
    auto* mul_flag = vignette->add_flag("--multiply", vg_multiply, "Add vignetting");
    div_flag->excludes(mul_flag);
    vg_out.add_to(vignette);

    // fit
    std::string ft_corr, ft_seed, ft_free = "omega,k", ft_out, ft_report;
    int ft_iterations = 200;
    auto* fitcmd = app.add_subcommand("fit", "Fit lens params to measured correspondences");
    fitcmd->add_option("correspondences", ft_corr, "Correspondence table")->required()->check(CLI::ExistingFile);
    fitcmd->add_option("seed", ft_seed, "Seed params file")->required()->check(CLI::ExistingFile);
    fitcmd->add_option("--free", ft_free, "Parameters to fit, comma separated")->capture_default_str();
    fitcmd->add_option("--max-iterations", ft_iterations, "Iteration cap")->check(CLI::Range(0, 100000));
    fitcmd->add_option("--out", ft_out, "Fitted params file")->required();
    fitcmd->add_option("--report", ft_report, "Write the fit report here instead of stdout");

    // info
    std::string in_path;
    auto* info = app.add_subcommand("info", "Print map metadata");
    info->add_option("path", in_path, "Map or image file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_view) {
            ParamsDocument doc = read_params(gv_params);
            const Extent size = parse_size(gv_size);
            if (!doc.aspect_given)
                doc.params.aspect = size.aspect();
            const ViewMap map = mapgen::generate_view_map(doc.params, size.width, size.height, gv_vignette);
            write_view(map, gv_out, description_of(gv_out.desc, doc.description.empty()
                                                                    ? fs::path(gv_params).stem().string()
                                                                    : doc.description));
        }
        else if (*gen_footage) {
            if (gf_params.empty() == gf_from_view.empty())
                throw Error(ErrorCode::InvalidArgument, "gen-footage needs either a params file or --from-view");
            if (!gf_params.empty()) {
                const ParamsDocument doc = read_params(gf_params);
                const FootageMap map = mapgen::generate_footage_map(doc.params, gf_size > 0 ? gf_size : 1024);
                write_footage(map, gf_out, description_of(gf_out.desc, doc.description.empty()
                                                                           ? fs::path(gf_params).stem().string()
                                                                           : doc.description));
            }
            else {
                const ViewMap vmap = io::read_view_map(gf_from_view);
                const int size = gf_size > 0 ? gf_size : mapgen::default_footage_map_size(vmap.extent());
                std::optional<FovAngle> fov;
                if (gf_fov > 0)
                    fov = FovAngle::from_degrees(gf_fov);
                const FootageMap map = mapgen::derive_footage_map(vmap, size, fov);
                write_footage(map, gf_out, description_of(gf_out.desc, stem_description(gf_from_view)));
            }
        }
        else if (*blend) {
            ViewMap a = io::read_view_map(bl_a);
            ViewMap b = io::read_view_map(bl_b);
            int common = bl_common;
            if (common == 0 && a.fov->noted_degrees() != b.fov->noted_degrees())
                common = std::max(a.fov->noted_degrees(), b.fov->noted_degrees());
            if (common > 0) {
                const FovAngle target = FovAngle::from_degrees(common);
                a = transform::normalize_fov(a, target);
                b = transform::normalize_fov(b, target);
            }
            const auto keys = parse_opacity(bl_opacity);
            const std::string desc = description_of(bl_out.desc, "Blend");
            if (keys.size() == 1) {
                write_view(transform::blend_view_maps(a, b, keys.front().opacity), bl_out, desc);
            }
            else {
                for (int frame = keys.front().frame; frame <= keys.back().frame; ++frame)
                    write_view(transform::blend_view_maps(a, b, transform::opacity_at(keys, frame)), bl_out,
                               desc + "_" + frame_suffix(frame));
            }
        }
        else if (*bake) {
            const ViewMap vmap = io::read_view_map(bk_view);
            const FootageMap fmap = io::read_footage_map(bk_footage);
            bk_out.write(resample::bake(vmap, fmap, parse_filter(bk_filter), bk_supersample));
        }
        else if (*apply) {
            const ImageBuffer footage = io::read_image(ap_footage);
            const ImageBuffer stmap = io::read_image(ap_stmap);
            ap_out.write(resample::apply_stmap(footage, stmap, parse_filter(ap_filter), ap_flip));
        }
        else if (*rays) {
            ry_out.write(transform::view_map_to_rays(io::read_view_map(ry_view)));
        }
        else if (*rotate) {
            const ViewMap vmap = io::read_view_map(rt_view);
            const ViewMap out =
                transform::rotate_view_map(vmap, radians(rt_pan), radians(rt_tilt), radians(rt_roll));
            write_view(out, rt_out, description_of(rt_out.desc, stem_description(rt_view) + "_Rotated"));
        }
        else if (*vignette) {
            if (!vg_divide && !vg_multiply)
                throw Error(ErrorCode::InvalidArgument, "vignette needs --divide or --multiply");
            const ImageBuffer footage = io::read_image(vg_footage);
            const ViewMap vmap = io::read_view_map(vg_view);
            vg_out.write(vg_divide ? resample::vignette_divide(footage, vmap)
                                   : resample::vignette_multiply(footage, vmap));
        }
        else if (*fitcmd) {
            const auto data = calibrate::read_correspondences(ft_corr);
            ParamsDocument seed = read_params(ft_seed);
            calibrate::FitConfig config;
            config.free_parameters = calibrate::parse_free_list(ft_free);
            config.max_iterations = ft_iterations;
            const auto result = calibrate::fit(data, seed.params, config);
            seed.params = result.params;
            write_params(seed, ft_out);
            const std::string report = calibrate::format_report(result.report);
            if (ft_report.empty()) {
                std::cout << report;
            }
            else {
                std::ofstream rep(ft_report);
                rep << report;
                if (!rep)
                    throw Error(ErrorCode::Io, "cannot write report '" + ft_report + "'");
            }
            for (const auto& w : result.report.warnings)
                std::cerr << "ldes: warning: " << w << '\n';
        }
        else if (*info) {
            const ImageBuffer image = io::read_image(in_path);
            try {
                const io::LdesFilename name = io::parse_filename(in_path);
                std::cout << "type = " << io::to_string(name.type) << '\n'
                          << "description = " << name.description << '\n'
                          << "fov = " << name.fov_degrees << '\n'
                          << "normalized = " << (name.normalized ? "true" : "false") << '\n';
            }
            catch (const Error&) {
                std::cout << "type = none\n";
            }
            char sum[32];
            std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(io::checksum(image)));
            std::cout << "width = " << image.width() << '\n'
                      << "height = " << image.height() << '\n'
                      << "channels = " << image.channels() << '\n'
                      << "checksum = " << sum << '\n';
        }
    }
    catch (const Error& e) {
        std::cerr << "ldes: error: " << e.what() << '\n';
        return exit_code_for(e.code());
    }
    catch (const std::exception& e) {
        std::cerr << "ldes: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
