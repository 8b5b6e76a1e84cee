// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// LDES_REGEN_GOLDENS=1 rewrites the transition goldens instead of comparing.

#include <ldes/ldes.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef LDES_GOLDEN_DIR
#error "LDES_GOLDEN_DIR must be defined"
#endif

using namespace ldes;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ProjectionParams lens(double omega_deg, double kx, double ktop, double kbottom, double squeeze, double aspect)
{
    ProjectionParams p;
    p.omega = FovAngle::from_degrees(omega_deg);
    p.k_x = kx;
    p.k_y_top = ktop;
    p.k_y_bottom = kbottom;
    p.squeeze = squeeze;
    p.aspect = aspect;
    return p;
}

Outcome radius_round_trip()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240101);
    std::uniform_real_distribution<double> uk(-1.0, 1.0);
    std::uniform_real_distribution<double> uo(1e-3, 2.0 * kPi);
    std::uniform_real_distribution<double> uf(0.0, 1.0);
    double worst = 0.0;
    int n = 0;
    while (n < 100000) {
        const double k = uk(rng);
        const double omega = uo(rng);
        const double limit = std::min(0.5 * omega, projection::detail::theta_limit(k));
        if (!projection::detail::theta_in_domain(0.5 * omega, k))
            continue;
        const double theta = uf(rng) * limit;
        if (theta >= limit)
            continue;
        const double r = projection::radius_from_theta(theta, k, omega);
        worst = std::max(worst, std::abs(projection::theta_from_radius(r, k, omega) - theta));
        ++n;
    }
    const double t = seconds_since(t0);
    return {worst < 1e-9 && t < 5.0, fmt("%d samples, max error %.3g rad, %.2f s", n, worst, t)};
}

Outcome family_profiles()
{
    struct Family {
        double k;
        double (*f)(double);
    };
    const Family families[] = {
        {1.0, [](double t) { return std::tan(t); }},
        {0.5, [](double t) { return std::tan(t / 2); }},
        {0.0, [](double t) { return t; }},
        {-0.5, [](double t) { return std::sin(t / 2); }},
        {-1.0, [](double t) { return std::sin(t); }},
    };
    const double omega = 2.5;
    double worst = 0.0;
    for (const Family& fam : families)
        for (int i = 0; i <= 990; ++i) {
            const double theta = 0.01 + i * 0.001;
            const double expected = fam.f(theta) / fam.f(0.5 * omega);
            const double got = projection::radius_from_theta(theta, fam.k, omega);
            worst = std::max(worst, std::abs(got - expected) / expected);
        }
    return {worst < 1e-9, fmt("max relative deviation %.3g", worst)};
}

double identity_rms(const ImageBuffer& st, int fw, int fh, double& coverage)
{
    double sum = 0.0;
    int n = 0;
    for (int y = 0; y < st.height(); ++y)
        for (int x = 0; x < st.width(); ++x) {
            if (st.at(x, y, 3) < 1.0f)
                continue;
            const TexCoord c = pixel_center({x, y}, {st.width(), st.height()});
            const double ds = (st.at(x, y, 0) - c.s) * fw;
            const double dt = (st.at(x, y, 1) - c.t) * fh;
            sum += ds * ds + dt * dt;
            ++n;
        }
    coverage = static_cast<double>(n) / (st.width() * st.height());
    return n > 0 ? std::sqrt(sum / n) : INFINITY;
}

Outcome self_consistent_bake()
{
    const auto t0 = Clock::now();
    struct Set {
        const char* name;
        ProjectionParams p;
    };
    const Set sets[] = {
        {"rectilinear", lens(100, 1.0, 1.0, 1.0, 1.0, 1.0)},
        {"fisheye", lens(180, 0.0, 0.0, 0.0, 1.0, 1.0)},
        {"anamorphic", lens(120, 0.0, 0.0, 0.0, 2.0, 1.0)},
        {"aximorphic", lens(140, 0.5, 0.0, 0.0, 1.0, 1.0)},
        {"asymmetric", lens(150, 0.0, 0.5, -0.5, 1.0, 1.0)},
    };
    const int n = 512;
    bool ok = true;
    std::string detail;
    for (const Set& s : sets) {
        const ViewMap v = mapgen::generate_view_map(s.p, n, n, false);
        const FootageMap f = mapgen::generate_footage_map(s.p, n);
        double coverage = 0.0;
        const double rms = identity_rms(resample::bake(v, f), n, n, coverage);
        ok = ok && rms < 1.0 && coverage > 0.5;
        detail += fmt("%s %.3f px, ", s.name, rms);
    }
    const double t = seconds_since(t0);
    return {ok && t < 30.0, detail + fmt("%.2f s", t)};
}

Outcome normalization_compensated()
{
    double worst = 0.0;
    for (const ProjectionParams& p : {lens(120, 0.5, 0.5, 0.5, 1.0, 1.5), lens(150, 0.0, 0.5, -0.5, 1.3, 1.5)}) {
        const ViewMap v = mapgen::generate_view_map(p, 192, 128, false);
        const FootageMap f = mapgen::generate_footage_map(p, 256);
        const ImageBuffer before = resample::bake(v, f);
        const ImageBuffer after = resample::bake(transform::normalize_fov(v, FovAngle::from_degrees(180)), f);
        for (int y = 0; y < before.height(); ++y)
            for (int x = 0; x < before.width(); ++x)
                for (int c = 0; c < 2; ++c)
                    worst = std::max(worst, std::abs(static_cast<double>(before.at(x, y, c)) - after.at(x, y, c)));
    }
    return {worst < 1e-4, fmt("max RG difference %.3g", worst)};
}

double max_rg_diff(const ImageBuffer& a, const ImageBuffer& b)
{
    double worst = 0.0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            for (int c = 0; c < 2; ++c)
                worst = std::max(worst, std::abs(static_cast<double>(a.at(x, y, c)) - b.at(x, y, c)));
    return worst;
}

Outcome rotation_group()
{
    const ViewMap m = mapgen::generate_view_map(lens(120, 0.5, 0.5, 0.5, 1.0, 1.5), 96, 64, false);
    double round_trip = 0.0;
    for (double a : {0.2, -0.35, 0.5}) {
        const auto rot = transform::Rotation::from_pan_tilt_roll(a, -0.5 * a, 0.7 * a);
        const ViewMap back = transform::rotate_view_map(transform::rotate_view_map(m, rot), rot.inverse());
        round_trip = std::max(round_trip, max_rg_diff(back.image, m.image));
        for (int axis = 0; axis < 3; ++axis) {
            const double pan = axis == 0 ? a : 0.0, tilt = axis == 1 ? a : 0.0, roll = axis == 2 ? a : 0.0;
            const ViewMap back = transform::rotate_view_map(transform::rotate_view_map(m, pan, tilt, roll), -pan,
                                                            -tilt, -roll);
            round_trip = std::max(round_trip, max_rg_diff(back.image, m.image));
        }
    }
    double radius = 0.0;
    const ViewMap r = transform::rotate_view_map(m, 0.0, 0.0, radians(37));
    for (int y = 0; y < m.image.height(); ++y)
        for (int x = 0; x < m.image.width(); ++x)
            radius = std::max(radius, std::abs(std::hypot(r.image.at(x, y, 0) - 0.5, r.image.at(x, y, 1) - 0.5) -
                                               std::hypot(m.image.at(x, y, 0) - 0.5, m.image.at(x, y, 1) - 0.5)));
    return {round_trip < 1e-6 && radius < 1e-7, fmt("round trip %.3g, roll radius change %.3g", round_trip, radius)};
}

Outcome ray_map()
{
    double unit = 0.0;
    double center = 0.0;
    double edge = 0.0;
    for (double k : {1.0, 0.5, 0.0, -0.5, -1.0}) {
        const double fov = k == 1.0 ? 150.0 : 180.0;
        const ProjectionParams p = lens(fov, k, k, k, 1.0, 1.5);
        const ViewMap m = mapgen::generate_view_map(p, 151, 101, false);
        const ImageBuffer rays = transform::view_map_to_rays(m);
        for (int y = 0; y < rays.height(); ++y)
            for (int x = 0; x < rays.width(); ++x)
                unit = std::max(unit, std::abs(Vec3{rays.at(x, y, 0), rays.at(x, y, 1), rays.at(x, y, 2)}.norm() - 1));
        center = std::max(center, (Vec3{rays.at(75, 50, 0), rays.at(75, 50, 1), rays.at(75, 50, 2)} -
                                   Vec3{0.0, 0.0, 1.0}).norm());
        if (fov != 180.0)
            continue;
        // The frame edge itself, encoded the way a view map stores it.
        for (double side : {-1.0, 1.0}) {
            const auto dir = projection::forward_model({side, 0.0}, p);
            const double rad = dir->theta / m.fov->omega();
            const Vec3 ray = transform::ray_from_rg(0.5 + rad * std::cos(dir->phi), 0.5 + rad * std::sin(dir->phi),
                                                    m.fov->omega());
            edge = std::max(edge, std::abs(ray.z));
        }
    }
    return {unit < 1e-6 && center < 1e-6 && edge < 1e-6,
            fmt("unit error %.3g, center error %.3g, edge |z| %.3g", unit, center, edge)};
}

Outcome brown_conrady()
{
    const BrownConradyParams zero;
    bool identity = true;
    bool reduces = true;
    BrownConradyParams equal;
    equal.radial_x = {0.08, -0.01, 0.002};
    equal.radial_y = equal.radial_x;
    equal.p1 = 0.003;
    equal.q2 = 0.001;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const Vec2 v{u(rng), u(rng)};
        identity = identity && projection::brown_conrady(v, zero) == v;
        reduces = reduces &&
                  projection::brown_conrady(v, equal, projection::aximorphic_weights(v)) ==
                      projection::brown_conrady(v, equal);
    }
    BrownConradyParams k1;
    k1.radial_x = {0.1};
    k1.radial_y = {0.1};
    // 0.5 / (1 + 0.1 * 0.25) = 20 / 41
    const double err = std::abs(projection::brown_conrady({0.5, 0.0}, k1).x - 20.0 / 41.0);
    return {identity && reduces && err < 1e-12,
            fmt("identity %s, equal-axis reduction %s, k1 example error %.3g", identity ? "exact" : "broken",
                reduces ? "exact" : "broken", err)};
}

Outcome vignette_model()
{
    double cos4 = 0.0;
    bool flat = true;
    for (double theta = 0.0; theta < 1.45; theta += 0.001) {
        cos4 = std::max(cos4, std::abs(projection::natural_vignette(theta, 1.0, radians(170)) -
                                       std::pow(std::cos(theta), 4)));
        flat = flat && projection::natural_vignette(theta, -1.0, radians(170)) == 1.0;
    }
    const ViewMap ortho = mapgen::generate_view_map(lens(170, -1, -1, -1, 1.0, 1.5), 96, 64, true);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 96; ++x)
            flat = flat && ortho.image.at(x, y, 2) == 1.0f;

    const ViewMap v = mapgen::generate_view_map(lens(160, 0.5, 0.5, 0.5, 1.0, 1.5), 96, 64, true);
    ImageBuffer footage(96, 64, 3);
    for (std::size_t i = 0; i < footage.data().size(); ++i)
        footage.data()[i] = 0.05f + 0.9f * static_cast<float>((i * 37) % 101) / 101.0f;
    const ImageBuffer back = resample::vignette_multiply(resample::vignette_divide(footage, v), v);
    double rel = 0.0;
    for (std::size_t i = 0; i < footage.data().size(); ++i)
        rel = std::max(rel, std::abs(static_cast<double>(back.data()[i]) - footage.data()[i]) / footage.data()[i]);
    return {cos4 < 1e-9 && flat && rel < 1e-6,
            fmt("cos^4 error %.3g, orthographic %s, divide/multiply %.3g", cos4, flat ? "exactly 1" : "not 1", rel)};
}

Outcome calibration_recovery()
{
    bool ok = true;
    std::string detail;
    for (double k : {1.0, 0.5, 0.0, -0.5, -1.0}) {
        ProjectionParams truth = lens(k == 1.0 ? 130.0 : 170.0, k, k, k, 1.33, 1.5);
        std::mt19937 rng(static_cast<unsigned>(100 + 10 * k));
        std::uniform_real_distribution<double> st(0.03, 0.97);
        std::vector<calibrate::Correspondence> data;
        while (data.size() < 200) {
            const TexCoord tc{st(rng), st(rng)};
            if (const auto dir = projection::forward_model(image_from_tex(tc, truth.aspect), truth))
                data.push_back({tc, dir->to_vector(), 1.0});
        }
        const ProjectionParams seed = lens(k == 1.0 ? 110.0 : 150.0, 0.0, 0.0, 0.0, 1.0, 1.5);
        calibrate::FitConfig cfg;
        cfg.free_parameters = calibrate::parse_free_list("omega,k,squeeze");
        const auto t0 = Clock::now();
        const auto r = calibrate::fit(data, seed, cfg);
        const double t = seconds_since(t0);
        const double e_omega = std::abs(r.params.omega.omega() - truth.omega.omega()) / truth.omega.omega();
        // k = 0 has no scale of its own; its error is taken as absolute.
        const double e_k = std::abs(r.params.k_x - k) / std::max(std::abs(k), 1.0);
        const double e_s = std::abs(r.params.squeeze - truth.squeeze) / truth.squeeze;
        const double worst = std::max({e_omega, e_k, e_s});
        ok = ok && worst < 1e-4 && t < 10.0;
        detail += fmt("k=%g %.2g in %.3f s, ", k, worst, t);
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

Outcome io_round_trip()
{
    const fs::path dir = fs::temp_directory_path() / "ldes_acceptance_io";
    fs::create_directories(dir);
    ImageBuffer img(61, 37, 4);
    std::mt19937 rng(3);
    std::uniform_int_distribution<std::uint32_t> bits;
    for (float& v : img.data())
        do {
            const std::uint32_t b = bits(rng);
            std::memcpy(&v, &b, sizeof v);
        } while (!std::isfinite(v));
    bool exact = true;
    for (const char* ext : {"tif", "exr"})
        for (auto comp : {io::Compression::None, io::Compression::Deflate}) {
            const std::string p = (dir / (std::string("img.") + ext)).string();
            io::write_image(p, img, {comp});
            const ImageBuffer back = io::read_image(p);
            exact = exact && back.channels() == 4 &&
                    std::memcmp(back.data().data(), img.data().data(), img.data().size_bytes()) == 0;
        }
    fs::remove_all(dir);

    using io::MapType;
    const io::LdesFilename expected[] = {
        {MapType::ViewMap, "Cinerama1950", 146, false, "tif"},
        {MapType::FootageMap, "TTArtisan7.5mm_Fisheye", 180, false, "tif"},
        {MapType::ViewMap, "Cooke14mm_WideAngle", 92, true, "tif"},
    };
    const char* names[] = {"ViewMap_Cinerama1950_FOV146.tif", "FootageMap_TTArtisan7.5mm_Fisheye_FOV180.tif",
                           "ViewMap_Cooke14mm_WideAngle_nFOV92.tif"};
    int parsed = 0;
    for (int i = 0; i < 3; ++i)
        parsed += io::parse_filename(names[i]) == expected[i] && io::format_filename(expected[i]) == names[i];
    return {exact && parsed == 3,
            fmt("TIFF/EXR round trip %s, %d of 3 names parsed", exact ? "bit-exact" : "differs", parsed)};
}

// Checkerboard footage with colored squares and a soft radial ramp.
ImageBuffer checkerboard(int w, int h)
{
    ImageBuffer img(w, h, 4);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool odd = ((x / 12) + (y / 12)) % 2;
            const double rx = (x + 0.5) / w - 0.5, ry = (y + 0.5) / h - 0.5;
            const float ramp = static_cast<float>(1.0 - std::hypot(rx, ry));
            auto px = img.pixel(x, y);
            px[0] = odd ? ramp : 0.1f;
            px[1] = odd ? 0.2f : ramp;
            px[2] = static_cast<float>(x) / w;
            px[3] = 1.0f;
        }
    return img;
}

std::vector<ImageBuffer> transition_frames()
{
    const ProjectionParams anamorphic = lens(150, 0.5, 0.5, 0.5, 1.5, 16.0 / 9.0);
    const ProjectionParams spherical = lens(120, 0.0, 0.0, 0.0, 1.0, 16.0 / 9.0);
    const int w = 160, h = 90;
    ViewMap a = mapgen::generate_view_map(anamorphic, w, h, false);
    ViewMap b = mapgen::generate_view_map(spherical, w, h, false);
    const FovAngle common = FovAngle::from_degrees(std::max(a.fov->noted_degrees(), b.fov->noted_degrees()));
    a = transform::normalize_fov(a, common);
    b = transform::normalize_fov(b, common);

    // The footage was shot through a 180 deg equidistant fisheye.
    const FootageMap fmap = mapgen::generate_footage_map(lens(180, 0.0, 0.0, 0.0, 1.0, 16.0 / 9.0), 256);
    const ImageBuffer footage = checkerboard(320, 180);
    const std::vector<transform::Keyframe> keys{{0, 0.0}, {3, 0.4}, {6, 1.0}};

    std::vector<ImageBuffer> frames;
    for (int frame = keys.front().frame; frame <= keys.back().frame; ++frame) {
        const ViewMap v = transform::blend_view_maps(a, b, transform::opacity_at(keys, frame));
        frames.push_back(resample::apply_stmap(footage, resample::bake(v, fmap)));
    }
    return frames;
}

Outcome transition_regression()
{
    const fs::path golden = LDES_GOLDEN_DIR;
    const bool regen = std::getenv("LDES_REGEN_GOLDENS") && std::string(std::getenv("LDES_REGEN_GOLDENS")) == "1";
    const auto frames = transition_frames();
    const auto again = transition_frames();
    bool repeatable = true;
    for (std::size_t i = 0; i < frames.size(); ++i)
        repeatable = repeatable && frames[i] == again[i];

    auto path_of = [&](std::size_t i) { return (golden / fmt("transition_%04zu.exr", i)).string(); };
    if (regen) {
        fs::create_directories(golden);
        for (std::size_t i = 0; i < frames.size(); ++i)
            io::write_image(path_of(i), frames[i], {io::Compression::Deflate});
        return {repeatable, fmt("%zu goldens written to %s", frames.size(), golden.c_str())};
    }
    int matched = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!fs::exists(path_of(i)))
            return {false, "golden " + path_of(i) + " missing; run with LDES_REGEN_GOLDENS=1"};
        const ImageBuffer g = io::read_image(path_of(i));
        matched += g.width() == frames[i].width() && g.height() == frames[i].height() &&
                   g.channels() == frames[i].channels() &&
                   std::memcmp(g.data().data(), frames[i].data().data(), g.data().size_bytes()) == 0;
    }
    return {repeatable && matched == static_cast<int>(frames.size()),
            fmt("%d of %zu frames bit-exact, re-run %s", matched, frames.size(),
                repeatable ? "identical" : "differs")};
}

}  // namespace

int main()
{
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"projection round trip", radius_round_trip},
        {"lens family profiles", family_profiles},
        {"self-consistent bake", self_consistent_bake},
        {"FOV normalization compensated", normalization_compensated},
        {"rotation group", rotation_group},
        {"ray map", ray_map},
        {"Brown-Conrady", brown_conrady},
        {"vignette model", vignette_model},
        {"calibration recovery", calibration_recovery},
        {"I/O", io_round_trip},
        {"keyframed lens transition", transition_regression},
    };
    int failures = 0;
    int n = 0;
    for (const auto& [name, run] : criteria) {
        ++n;
        Outcome o;
        try {
            o = run();
        }
        catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s criterion %d: %s (%s)\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
