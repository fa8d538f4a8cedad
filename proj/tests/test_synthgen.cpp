#include "nslab/errors.hpp"
#include "nslab/nonsmooth.hpp"
#include "nslab/synthgen.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace nslab;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("nslab_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

// Hand shading at a world point, straight from the diffuse formula.
double shade_oracle(double x, double y, Vec3 L) {
    const double a = 2.5, b = 4.0, c = 1.0;
    const double z = c * std::sqrt(1 - x * x / (a * a) - y * y / (b * b));
    double n[3] = {x / (a * a), y / (b * b), z / (c * c)};
    double v[3] = {L.x - x, L.y - y, L.z - z};
    const double nn = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    const double vn = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return std::max(0.0, (n[0] * v[0] + n[1] * v[1] + n[2] * v[2]) / (nn * vn));
}

} // namespace

TEST_SUITE("synthgen") {

TEST_CASE("apex under an overhead light is fully lit") {
    CHECK(shade_point(0.0, 0.0, {0, 0, 20}, {}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(shade_point(3.0, 0.0, {0, 0, 20}, {}) == 0.0); // outside x/a <= 1
}

TEST_CASE("shading matches the diffuse formula at interior points") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1), l(-10, 10);
    for (int i = 0; i < 200; ++i) {
        const double x = 2.4 * u(rng), y = 3.9 * u(rng);
        if (x * x / 6.25 + y * y / 16 > 0.99) continue;
        const Vec3 L{l(rng), l(rng), 20};
        CHECK(shade_point(x, y, L, {}) == doctest::Approx(shade_oracle(x, y, L)).epsilon(1e-12));
    }
}

TEST_CASE("frames are mirror symmetric under mirrored lights") {
    const Image a = render_ellipsoid_frame({3.7, -2.1, 20});
    const Image b = render_ellipsoid_frame({-3.7, -2.1, 20});
    for (std::size_t r = 0; r < a.rows; ++r)
        for (std::size_t c = 0; c < a.cols; ++c) CHECK(a(r, c) == doctest::Approx(b(r, a.cols - 1 - c)).epsilon(1e-12));
}

TEST_CASE("background pixels are zero and frames lie in [0, 1]") {
    const Image img = render_ellipsoid_frame({5, 5, 20});
    CHECK(img(0, 0) == 0.0);
    CHECK(img(27, 27) == 0.0);
    for (double v : img.px) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK_THROWS_AS(render_ellipsoid_frame({0, 0, -1}), ShapeError);
    EllipsoidSpec bad;
    bad.a = 0;
    CHECK_THROWS_AS(render_ellipsoid_frame({0, 0, 20}, bad), ShapeError);
}

TEST_CASE("shading is continuous in the light position") {
    const Image a = render_ellipsoid_frame({1.0, 2.0, 20});
    const Image b = render_ellipsoid_frame({1.01, 2.0, 20});
    for (std::size_t i = 0; i < a.px.size(); ++i) CHECK(std::abs(a.px[i] - b.px[i]) < 0.05);
}

TEST_CASE("light positions are uniform on (-10, 10) and seeded") {
    const auto p = sample_light_positions(10000, 42);
    double mx = 0;
    for (const auto& v : p) {
        CHECK(v.z == kLightHeight);
        CHECK(std::abs(v.x) < 10.0);
        mx += v.x;
    }
    CHECK(std::abs(mx / 10000) < 0.35);
    CHECK(generate_ellipsoid_dataset(5, 3) == generate_ellipsoid_dataset(5, 3));
    CHECK(generate_ellipsoid_dataset(5, 3) != generate_ellipsoid_dataset(5, 4));
}

TEST_CASE("light path frame counts") {
    LightPath p;
    CHECK(p.frame_count() == 256); // 18*sqrt(2)/0.1 = 254.6 -> 255 intervals
    p.step = 0.05;
    CHECK(p.frame_count() == 510);
    const VideoSequence v = generate_light_path_video(LightPath{});
    CHECK(v.frames.size() == 256);
    CHECK(v.frames.size() - 2 == 254);

    LightPath still{{1, 1, 20}, {1, 1, 20}, 0.1, 0};
    CHECK_THROWS_AS(still.frame_count(), ShapeError);
    still.min_frames = 5;
    const VideoSequence c = generate_light_path_video(still);
    CHECK(c.frames.size() == 5);
    CHECK(ave_nonsmooth(c) == 0.0);
    LightPath neg;
    neg.step = -1;
    CHECK_THROWS_AS(neg.frame_count(), ShapeError);
}

TEST_CASE("rotation identities") {
    const Image t = procedural_seven(28, 5);
    CHECK(rotate_image(t, 0.0) == t);
    const Image full = rotate_image(t, 360.0);
    for (std::size_t i = 0; i < t.px.size(); ++i) CHECK(std::abs(full.px[i] - t.px[i]) < 1e-12);
    for (double ang : {7.0, -18.0, 29.0}) {
        const Image back = rotate_image(rotate_image(t, ang), -ang);
        // Bilinear resampling blurs stroke edges slightly on the way out and back.
        double worst = 0.0, total = 0.0;
        for (std::size_t i = 0; i < t.px.size(); ++i) {
            worst = std::max(worst, std::abs(back.px[i] - t.px[i]));
            total += std::abs(back.px[i] - t.px[i]);
        }
        CHECK(worst < 0.2);
        CHECK(total / static_cast<double>(t.px.size()) < 0.02);
    }
}

TEST_CASE("rotation by 90 degrees turns the image counter-clockwise") {
    Image img(3, 3);
    img(0, 2) = 1.0; // top-right
    const Image r = rotate_image(img, 90.0);
    CHECK(r(0, 0) == doctest::Approx(1.0)); // ends at top-left
    CHECK(r(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("rotation dataset size") {
    const ImageSet t = procedural_sevens(3, 28, 9);
    CHECK(generate_rotation_dataset(t, 60, 1).size() == 180);
}

TEST_CASE("noise trajectory videos are affine in t") {
    CHECK(noise_alpha(1) == doctest::Approx(-0.0098).epsilon(1e-15));
    CHECK(noise_alpha(100) == doctest::Approx(0.01).epsilon(1e-15));
    const VideoSequence v = generate_noise_trajectory_video(procedural_seven(28, 1), 77);
    REQUIRE(v.frames.size() == 100);
    CHECK(ave_nonsmooth(v) < 1e-15);
    for (std::size_t px : {0u, 300u, 783u}) {
        std::vector<double> s;
        for (const auto& f : v.frames) s.push_back(f.px[px]);
        for (double d : second_order_difference(s)) CHECK(std::abs(d) < 1e-15);
    }
    const VideoSequence flat = generate_noise_trajectory_video(Image(4, 4, 0.0), 1);
    CHECK(flat.frames.front().px.size() == 16);
}

TEST_CASE("procedural templates differ by seed and stay in [0, 1]") {
    const ImageSet s = procedural_sevens(4, 28, 2);
    CHECK(s[0] != s[1]);
    for (const auto& img : s)
        for (double v : img.px) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
}

TEST_CASE("IDX round trip and digit filter") {
    std::mt19937_64 rng(8);
    ImageSet imgs(6, Image(4, 5));
    for (auto& im : imgs)
        for (auto& v : im.px) v = static_cast<double>(rng() % 256) / 255.0;
    std::ostringstream os;
    write_idx_images(os, imgs);
    std::istringstream is(os.str());
    const ImageSet back = read_idx_images(is);
    CHECK(back == imgs);
    std::ostringstream os2;
    write_idx_images(os2, back);
    CHECK(os2.str() == os.str());

    const auto dir = scratch("idx");
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "img.idx", std::ios::binary);
        f << os.str();
        std::ofstream l(dir / "lbl.idx", std::ios::binary);
        write_idx_labels(l, {7, 1, 7, 7, 0, 2});
    }
    CHECK(load_idx_images(dir / "img.idx").size() == 6);
    const ImageSet sevens = load_idx_images(dir / "img.idx", dir / "lbl.idx", 7);
    REQUIRE(sevens.size() == 3);
    CHECK(sevens[1] == imgs[2]);
    std::filesystem::remove_all(dir);
}

TEST_CASE("IDX format errors") {
    std::istringstream bad(std::string("\x00\x00\x08\x01\x00\x00\x00\x01", 8));
    CHECK_THROWS_AS(read_idx_images(bad), FormatError);

    std::ostringstream os;
    write_idx_images(os, ImageSet(2, Image(3, 3, 0.5)));
    const std::string s = os.str();
    std::istringstream cut(s.substr(0, s.size() - 4));
    try {
        read_idx_images(cut);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.offset() >= 16);
    }
}

TEST_CASE("video and image-set persistence is bit exact") {
    const auto dir = scratch("video");
    LightPath p;
    p.step = 1.0;
    const VideoSequence v = generate_light_path_video(p);
    save_video(dir, v);
    const VideoSequence back = load_video(dir);
    CHECK(back.frames == v.frames);
    CHECK(back.delta == v.delta);

    const ImageSet set = generate_ellipsoid_dataset(4, 1);
    save_image_set(dir / "s.nsis", set);
    CHECK(load_image_set(dir / "s.nsis") == set);
    CHECK_THROWS_AS(load_video(dir / "missing"), MissingInputError);
    std::filesystem::remove_all(dir);
}

} // TEST_SUITE
