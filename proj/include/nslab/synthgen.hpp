#pragma once

// Smooth synthetic inputs: diffuse-shaded half ellipsoids under a point light,
// rotated digit templates, and affine noise-trajectory videos.

#include "nslab/image.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace nslab {

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

struct EllipsoidSpec {
    double a = 2.5;
    double b = 4.0;
    double c = 1.0;
    std::size_t resolution = 28;
    double half_width = 4.5; // pixels cover [-half_width, half_width]^2

    void validate() const;
};

/// Diffuse intensity max(v.n, 0) at world point (x, y) of the upper half
/// ellipsoid, viewed orthographically from +z; 0 off the footprint.
double shade_point(double x, double y, const Vec3& light, const EllipsoidSpec& spec);

/// Pixel (r, c) samples the world point at its center; row 0 is +y.
Image render_ellipsoid_frame(const Vec3& light, const EllipsoidSpec& spec = {});

constexpr double kLightHeight = 20.0;

/// Light positions (x, y, 20) with x, y iid U(-10, 10).
std::vector<Vec3> sample_light_positions(std::size_t n, std::uint64_t seed);
ImageSet generate_ellipsoid_dataset(std::size_t n, std::uint64_t seed, const EllipsoidSpec& spec = {});

struct LightPath {
    Vec3 start{-9, -9, kLightHeight};
    Vec3 end{9, 9, kLightHeight};
    double step = 0.1;          // world units per frame (nominal)
    std::size_t min_frames = 0; // frame count floor; lets a zero-length path render a constant video

    /// round(length / step) + 1 frames, spaced uniformly from start to end.
    std::size_t frame_count() const;
};

LightPath random_light_path(std::uint64_t seed, double step = 0.1);

struct VideoSequence {
    std::vector<Image> frames;
    double delta = 1.0;

    std::size_t rows() const { return frames.empty() ? 0 : frames.front().rows; }
    std::size_t cols() const { return frames.empty() ? 0 : frames.front().cols; }
};

VideoSequence generate_light_path_video(const LightPath& path, const EllipsoidSpec& spec = {});

/// Bilinear rotation about the image center; samples outside read as 0.
/// Positive angles rotate counter-clockwise as displayed.
Image rotate_image(const Image& img, double degrees);

/// Every template rotated by `angles` iid U(-30, 30) degree draws.
ImageSet generate_rotation_dataset(const ImageSet& templates, std::size_t angles, std::uint64_t seed);

/// alpha(t) = 1e-2 (0.02 t - 1), t = 1..100.
double noise_alpha(int t);

/// I(t) = I0 + alpha(t) Ie for t = 1..100 with Ie iid N(0, 1). Every pixel
/// series is affine in t; frames are not clamped.
VideoSequence generate_noise_trajectory_video(const Image& templ, std::uint64_t seed);

/// Anti-aliased two-stroke "7" used when no IDX file is supplied. `seed`
/// jitters stroke endpoints so distinct seeds give distinct templates.
Image procedural_seven(std::size_t size, std::uint64_t seed);
ImageSet procedural_sevens(std::size_t count, std::size_t size, std::uint64_t seed);

// IDX (big-endian) image/label files.
constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

ImageSet read_idx_images(std::istream& is);
std::vector<std::uint8_t> read_idx_labels(std::istream& is);
void write_idx_images(std::ostream& os, const ImageSet& images);
void write_idx_labels(std::ostream& os, const std::vector<std::uint8_t>& labels);

/// Images scaled to [0,1]. With `labels_path` and `digit`, keeps only that digit.
ImageSet load_idx_images(const std::filesystem::path& path,
                         const std::optional<std::filesystem::path>& labels_path = std::nullopt,
                         std::optional<int> digit = std::nullopt);

// Video directory: manifest.txt plus one raw little-endian f64 dump per frame.
void save_video(const std::filesystem::path& dir, const VideoSequence& video);
VideoSequence load_video(const std::filesystem::path& dir);

// Image set as one binary file: "NSIS", u32 count, rows, cols, f64 pixels.
void save_image_set(const std::filesystem::path& path, const ImageSet& images);
ImageSet load_image_set(const std::filesystem::path& path);

} // namespace nslab
