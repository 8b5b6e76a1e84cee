#include <ldes/mapgen.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

using namespace ldes;

namespace {

double rg_radius(const ImageBuffer& img, int x, int y)
{
    return std::hypot(img.at(x, y, 0) - 0.5, img.at(x, y, 1) - 0.5);
}

}  // namespace

TEST(GenerateViewMap, EquidistantCenterAndRamp)
{
    const auto p = ProjectionParams::spherical(90.0, 0.0);
    const ViewMap m = mapgen::generate_view_map(p, 65, 65, false);
    EXPECT_EQ(m.image.channels(), 2);
    EXPECT_EQ(m.fov->noted_degrees(), 90);
    EXPECT_EQ(m.image.at(32, 32, 0), 0.5f);
    EXPECT_EQ(m.image.at(32, 32, 1), 0.5f);
    // Equidistant with Omega equal to the lens FOV: RG - 1/2 = v / 2.
    for (int y = 0; y < 65; y += 8)
        for (int x = 0; x < 65; x += 8) {
            const Vec2 v = centered_coords({x, y}, {65, 65});
            EXPECT_NEAR(m.image.at(x, y, 0), 0.5 + 0.5 * v.x, 1e-7);
            EXPECT_NEAR(m.image.at(x, y, 1), 0.5 + 0.5 * v.y, 1e-7);
        }
}

TEST(GenerateViewMap, RectilinearEdgeEncodesHalfAngle)
{
    // The frame edge sees theta = 45 deg; against Omega = 90 that is |RG - 1/2| = 45/90.
    const auto p = ProjectionParams::spherical(90.0, 1.0);
    EXPECT_NEAR(projection::forward_model({1.0, 0.0}, p)->theta, radians(45), 1e-15);
    const int w = 2001;
    const ViewMap m = mapgen::generate_view_map(p, w, w, false);
    const double v = static_cast<double>(w - 1) / w;
    EXPECT_NEAR(rg_radius(m.image, w - 1, w / 2), std::atan(v) / (kPi / 2), 1e-7);
    EXPECT_NEAR(rg_radius(m.image, w - 1, w / 2), 0.5, 4e-4);
    // Halfway to the edge: theta = atan(1/2).
    const int mid = (w - 1) / 2 + (w - 1) / 4;
    const double vm = centered_coords({mid, w / 2}, {w, w}).x;
    EXPECT_NEAR(rg_radius(m.image, mid, w / 2), std::atan(vm) / (kPi / 2), 1e-7);
}

TEST(GenerateViewMap, OrthographicVignetteIsOne)
{
    const auto p = ProjectionParams::spherical(120.0, -1.0, 1.5);
    const ViewMap m = mapgen::generate_view_map(p, 48, 32, true);
    ASSERT_TRUE(m.has_vignette());
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 48; ++x)
            EXPECT_EQ(m.image.at(x, y, 2), 1.0f);
}

TEST(GenerateViewMap, LabelIsRoundedUpFov)
{
    const auto p = ProjectionParams::spherical(145.5, 0.0);
    const ViewMap m = mapgen::generate_view_map(p, 33, 33, false);
    EXPECT_EQ(m.fov->noted_degrees(), 146);
    EXPECT_TRUE(m.fov->is_whole_degrees());
    // The right edge ray is at 72.75 deg; encoded against 146 deg.
    const double v = 32.0 / 33.0;
    EXPECT_NEAR(rg_radius(m.image, 32, 16), v * radians(72.75) / radians(146.0), 1e-7);
}

TEST(GenerateViewMap, AspectMismatchRejected)
{
    const auto p = ProjectionParams::spherical(90.0, 0.0, 1.0);
    try {
        mapgen::generate_view_map(p, 64, 32, false);
        FAIL();
    }
    catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Mismatch);
    }
}

TEST(GenerateViewMap, OffFieldPixelsClampToBoundary)
{
    // Orthographic 180 deg: the frame corners lie beyond the rim.
    const auto p = ProjectionParams::spherical(180.0, -1.0, 1.0);
    const ViewMap m = mapgen::generate_view_map(p, 64, 64, true);
    EXPECT_TRUE(m.image.all_finite());
    EXPECT_NEAR(rg_radius(m.image, 0, 0), 0.5, 1e-6);
    EXPECT_GE(m.image.at(0, 0, 2), static_cast<float>(projection::kMinVignette));
}

TEST(GenerateViewMap, RadiallyMonotonic)
{
    const auto p = ProjectionParams::spherical(150.0, 0.5);
    const ViewMap m = mapgen::generate_view_map(p, 128, 128, false);
    for (int x = 65; x < 128; ++x)
        EXPECT_GT(rg_radius(m.image, x, 64), rg_radius(m.image, x - 1, 64));
}

TEST(GenerateFootageMap, CenterMapsToFootageCenter)
{
    for (double k : {1.0, 0.0, -1.0}) {
        const auto p = ProjectionParams::spherical(90.0, k);
        const FootageMap f = mapgen::generate_footage_map(p, 65);
        EXPECT_NEAR(f.image.at(32, 32, 0), 0.5f, 1e-7);
        EXPECT_NEAR(f.image.at(32, 32, 1), 0.5f, 1e-7);
        EXPECT_EQ(f.image.at(32, 32, 3), 1.0f);
    }
}

TEST(GenerateFootageMap, CornersOutsideFieldUncovered)
{
    const auto p = ProjectionParams::spherical(120.0, 0.0, 16.0 / 9.0);
    const FootageMap f = mapgen::generate_footage_map(p, 64);
    EXPECT_EQ(f.image.at(0, 0, 3), 0.0f);
    EXPECT_EQ(f.image.at(63, 63, 3), 0.0f);
    EXPECT_EQ(f.image.at(0, 63, 3), 0.0f);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const float a = f.image.at(x, y, 3);
            EXPECT_TRUE(a == 0.0f || a == 1.0f);
            EXPECT_GE(f.image.at(x, y, 0), 0.0f);
            EXPECT_LE(f.image.at(x, y, 0), 1.0f);
        }
}

TEST(GenerateFootageMap, CoverageMatchesForwardScan)
{
    const auto p = ProjectionParams::spherical(120.0, 0.0, 1.0);
    const int n = 64;
    const FootageMap f = mapgen::generate_footage_map(p, n);
    const double omega = f.fov->omega();

    // Rasterize the forward model over a dense footage grid.
    std::vector<int> hit(n * n, 0);
    const int res = 1024;
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
            const auto dir = projection::forward_model(centered_coords({x, y}, {res, res}), p);
            ASSERT_TRUE(dir);
            const double rad = dir->theta / omega;
            const double us = 0.5 + rad * std::cos(dir->phi);
            const double ut = 0.5 + rad * std::sin(dir->phi);
            const int cx = std::clamp(static_cast<int>(us * n), 0, n - 1);
            const int cy = std::clamp(static_cast<int>(ut * n), 0, n - 1);
            hit[cy * n + cx] = 1;
        }

    auto covered = [&](int x, int y) { return f.image.at(x, y, 3) == 1.0f; };
    int mismatches = 0;
    int interior_mismatches = 0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            if (covered(x, y) == (hit[y * n + x] == 1))
                continue;
            ++mismatches;
            bool on_boundary = false;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = x + dx, yy = y + dy;
                    if (xx >= 0 && yy >= 0 && xx < n && yy < n && covered(xx, yy) != covered(x, y))
                        on_boundary = true;
                }
            if (!on_boundary)
                ++interior_mismatches;
        }
    EXPECT_EQ(interior_mismatches, 0);
    EXPECT_LT(mismatches, 4 * n);
}

TEST(DeriveFootageMap, MatchesSynthesizedMap)
{
    ProjectionParams p = ProjectionParams::spherical(140.0, 0.3, 1.5);
    const int w = 384, h = 256;
    const ViewMap v = mapgen::generate_view_map(p, w, h, false);
    const FootageMap synth = mapgen::generate_footage_map(p, 128);
    const FootageMap derived = mapgen::derive_footage_map(v, 128);
    double sum = 0.0;
    int count = 0;
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) {
            if (synth.image.at(x, y, 3) != 1.0f || derived.image.at(x, y, 3) != 1.0f)
                continue;
            const double ds = (synth.image.at(x, y, 0) - derived.image.at(x, y, 0)) * w;
            const double dt = (synth.image.at(x, y, 1) - derived.image.at(x, y, 1)) * h;
            sum += ds * ds + dt * dt;
            ++count;
        }
    ASSERT_GT(count, 128 * 128 / 4);
    EXPECT_LT(std::sqrt(sum / count), 1.0);
}

TEST(DeriveFootageMap, EquidistantIdentity)
{
    const auto p = ProjectionParams::spherical(90.0, 0.0);
    const ViewMap v = mapgen::generate_view_map(p, 256, 256, false);
    const FootageMap f = mapgen::derive_footage_map(v, 64);
    for (int y = 4; y < 60; ++y)
        for (int x = 4; x < 60; ++x) {
            ASSERT_EQ(f.image.at(x, y, 3), 1.0f);
            const TexCoord u = pixel_center({x, y}, {64, 64});
            EXPECT_NEAR(f.image.at(x, y, 0), u.s, 1.0 / 256);
            EXPECT_NEAR(f.image.at(x, y, 1), u.t, 1.0 / 256);
        }
}

TEST(DeriveFootageMap, ConstantMapIsEmpty)
{
    ViewMap v{ImageBuffer(64, 64, 2, 0.5f), FovAngle::from_degrees(90), false};
    try {
        mapgen::derive_footage_map(v, 64);
        FAIL();
    }
    catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyMap);
    }
}

TEST(DeriveFootageMap, IndependentOfThreadCount)
{
    const auto p = ProjectionParams::spherical(120.0, -0.5, 1.5);
    const ViewMap v = mapgen::generate_view_map(p, 150, 100, false);
    ::setenv("LDES_THREADS", "1", 1);
    const FootageMap one = mapgen::derive_footage_map(v, 64);
    ::setenv("LDES_THREADS", "7", 1);
    const FootageMap seven = mapgen::derive_footage_map(v, 64);
    ::unsetenv("LDES_THREADS");
    EXPECT_EQ(one.image, seven.image);
}

TEST(FootageMapSize, NextPowerOfTwo)
{
    static_assert(mapgen::default_footage_map_size({1920, 1080}) == 2048);
    static_assert(mapgen::default_footage_map_size({1024, 512}) == 1024);
    static_assert(mapgen::default_footage_map_size({3, 3}) == 4);
}
