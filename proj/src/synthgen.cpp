#include "nslab/synthgen.hpp"

#include "nslab/binio.hpp"
#include "nslab/errors.hpp"
#include "nslab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace nslab {

void EllipsoidSpec::validate() const {
    if (!(a > 0 && b > 0 && c > 0)) throw ShapeError("ellipsoid: semi-axes must be positive");
    if (resolution == 0 || !(half_width > 0)) throw ShapeError("ellipsoid: bad resolution or window");
}

double shade_point(double x, double y, const Vec3& light, const EllipsoidSpec& spec) {
    const double q = 1.0 - (x * x) / (spec.a * spec.a) - (y * y) / (spec.b * spec.b);
    if (q < 0.0) return 0.0;
    const double z = spec.c * std::sqrt(q);
    double nx = x / (spec.a * spec.a), ny = y / (spec.b * spec.b), nz = z / (spec.c * spec.c);
    const double nn = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (nn == 0.0) return 0.0;
    double vx = light.x - x, vy = light.y - y, vz = light.z - z;
    const double vn = std::sqrt(vx * vx + vy * vy + vz * vz);
    if (vn == 0.0) return 0.0;
    const double i = (vx * nx + vy * ny + vz * nz) / (vn * nn);
    return std::clamp(i, 0.0, 1.0);
}

Image render_ellipsoid_frame(const Vec3& light, const EllipsoidSpec& spec) {
    spec.validate();
    if (!(light.z > 0)) throw ShapeError("render: light must be above the xy-plane");
    const std::size_t R = spec.resolution;
    const double px = 2.0 * spec.half_width / static_cast<double>(R);
    Image img(R, R);
    for (std::size_t r = 0; r < R; ++r) {
        const double y = spec.half_width - (static_cast<double>(r) + 0.5) * px;
        for (std::size_t c = 0; c < R; ++c) {
            const double x = -spec.half_width + (static_cast<double>(c) + 0.5) * px;
            img(r, c) = shade_point(x, y, light, spec);
        }
    }
    return img;
}

std::vector<Vec3> sample_light_positions(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::vector<Vec3> out(n);
    for (auto& p : out) {
        p.x = u(rng);
        p.y = u(rng);
        p.z = kLightHeight;
    }
    return out;
}

ImageSet generate_ellipsoid_dataset(std::size_t n, std::uint64_t seed, const EllipsoidSpec& spec) {
    ImageSet out;
    out.reserve(n);
    for (const auto& l : sample_light_positions(n, seed)) out.push_back(render_ellipsoid_frame(l, spec));
    return out;
}

std::size_t LightPath::frame_count() const {
    if (!(step > 0)) throw ShapeError("light path: step must be positive");
    const double len = std::hypot(end.x - start.x, end.y - start.y, end.z - start.z);
    const auto n = static_cast<std::size_t>(std::llround(len / step)) + 1;
    if (n < 2 && min_frames < 3) throw ShapeError("light path: zero-length path");
    return std::max(n, min_frames);
}

LightPath random_light_path(std::uint64_t seed, double step) {
    auto pts = sample_light_positions(2, seed);
    LightPath p;
    p.start = pts[0];
    p.end = pts[1];
    p.step = step;
    p.min_frames = 3;
    return p;
}

VideoSequence generate_light_path_video(const LightPath& path, const EllipsoidSpec& spec) {
    const std::size_t n = path.frame_count();
    VideoSequence v;
    v.delta = path.step;
    v.frames.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
        Vec3 l{path.start.x + t * (path.end.x - path.start.x), path.start.y + t * (path.end.y - path.start.y),
               path.start.z + t * (path.end.z - path.start.z)};
        v.frames.push_back(render_ellipsoid_frame(l, spec));
    }
    return v;
}

Image rotate_image(const Image& img, double degrees) {
    const double th = degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(th), sn = std::sin(th);
    const double cy = (static_cast<double>(img.rows) - 1.0) / 2.0;
    const double cx = (static_cast<double>(img.cols) - 1.0) / 2.0;
    const auto H = static_cast<long>(img.rows), W = static_cast<long>(img.cols);
    auto sample = [&](long r, long c) { return (r < 0 || c < 0 || r >= H || c >= W) ? 0.0 : img(r, c); };
    Image out(img.rows, img.cols);
    for (std::size_t r = 0; r < img.rows; ++r) {
        for (std::size_t c = 0; c < img.cols; ++c) {
            // Display y grows upward, so row offsets are negated.
            const double x = static_cast<double>(c) - cx;
            const double y = cy - static_cast<double>(r);
            // Inverse rotation gives the source point.
            const double sx = cs * x + sn * y;
            const double sy = -sn * x + cs * y;
            const double fc = sx + cx;
            const double fr = cy - sy;
            const double r0f = std::floor(fr), c0f = std::floor(fc);
            const double dr = fr - r0f, dc = fc - c0f;
            const auto r0 = static_cast<long>(r0f), c0 = static_cast<long>(c0f);
            out(r, c) = (1 - dr) * ((1 - dc) * sample(r0, c0) + dc * sample(r0, c0 + 1)) +
                        dr * ((1 - dc) * sample(r0 + 1, c0) + dc * sample(r0 + 1, c0 + 1));
        }
    }
    return out;
}

ImageSet generate_rotation_dataset(const ImageSet& templates, std::size_t angles, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    ImageSet out;
    out.reserve(templates.size() * angles);
    for (const auto& t : templates)
        for (std::size_t i = 0; i < angles; ++i) out.push_back(rotate_image(t, u(rng)));
    return out;
}

double noise_alpha(int t) { return 1e-2 * (0.02 * t - 1.0); }

VideoSequence generate_noise_trajectory_video(const Image& templ, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Image noise(templ.rows, templ.cols);
    for (auto& v : noise.px) v = g(rng);
    VideoSequence v;
    v.delta = 1.0;
    v.frames.reserve(100);
    for (int t = 1; t <= 100; ++t) {
        Image f = templ;
        const double a = noise_alpha(t);
        for (std::size_t i = 0; i < f.px.size(); ++i) f.px[i] += a * noise.px[i];
        v.frames.push_back(std::move(f));
    }
    return v;
}

namespace {
double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}
} // namespace

Image procedural_seven(std::size_t size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jit(-1.5, 1.5);
    const double s = static_cast<double>(size) / 28.0;
    // (col, row) in a 28-pixel frame.
    const double x0 = 7 + jit(rng), y0 = 7 + jit(rng);
    const double x1 = 20 + jit(rng), y1 = 6.5 + jit(rng);
    const double x2 = 12 + jit(rng), y2 = 22 + jit(rng);
    const double width = 1.6 * s;
    Image img(size, size);
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
            const double px = (static_cast<double>(c) + 0.5) / s, py = (static_cast<double>(r) + 0.5) / s;
            const double d = std::min(segment_distance(px, py, x0, y0, x1, y1),
                                      segment_distance(px, py, x1, y1, x2, y2)) * s;
            img(r, c) = std::exp(-0.5 * (d / width) * (d / width));
        }
    return img;
}

ImageSet procedural_sevens(std::size_t count, std::size_t size, std::uint64_t seed) {
    ImageSet out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(procedural_seven(size, derive_seed(seed, {i})));
    return out;
}

ImageSet read_idx_images(std::istream& is) {
    binio::Reader r(is, "idx images");
    const auto magic = r.be<std::uint32_t>();
    if (magic != kIdxImageMagic) throw FormatError("idx images: bad magic", 0);
    const auto n = r.be<std::uint32_t>();
    const auto rows = r.be<std::uint32_t>();
    const auto cols = r.be<std::uint32_t>();
    ImageSet out;
    out.reserve(n);
    std::vector<char> buf(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < n; ++i) {
        r.bytes(buf.data(), buf.size());
        Image img(rows, cols);
        for (std::size_t k = 0; k < buf.size(); ++k) img.px[k] = static_cast<unsigned char>(buf[k]) / 255.0;
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<std::uint8_t> read_idx_labels(std::istream& is) {
    binio::Reader r(is, "idx labels");
    const auto magic = r.be<std::uint32_t>();
    if (magic != kIdxLabelMagic) throw FormatError("idx labels: bad magic", 0);
    const auto n = r.be<std::uint32_t>();
    std::vector<char> buf(n);
    r.bytes(buf.data(), n);
    return {buf.begin(), buf.end()};
}

void write_idx_images(std::ostream& os, const ImageSet& images) {
    const std::uint32_t rows = images.empty() ? 0 : static_cast<std::uint32_t>(images.front().rows);
    const std::uint32_t cols = images.empty() ? 0 : static_cast<std::uint32_t>(images.front().cols);
    binio::put_be<std::uint32_t>(os, kIdxImageMagic);
    binio::put_be<std::uint32_t>(os, static_cast<std::uint32_t>(images.size()));
    binio::put_be<std::uint32_t>(os, rows);
    binio::put_be<std::uint32_t>(os, cols);
    for (const auto& img : images) {
        if (img.rows != rows || img.cols != cols) throw ShapeError("write_idx_images: mixed image sizes");
        for (double v : img.px) os.put(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
}

void write_idx_labels(std::ostream& os, const std::vector<std::uint8_t>& labels) {
    binio::put_be<std::uint32_t>(os, kIdxLabelMagic);
    binio::put_be<std::uint32_t>(os, static_cast<std::uint32_t>(labels.size()));
    os.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

ImageSet load_idx_images(const std::filesystem::path& path, const std::optional<std::filesystem::path>& labels_path,
                         std::optional<int> digit) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingInputError("cannot open IDX file " + path.string());
    ImageSet images = read_idx_images(is);
    if (!digit) return images;
    if (!labels_path) throw ConfigError("IDX digit filter requires a label file");
    std::ifstream ls(*labels_path, std::ios::binary);
    if (!ls) throw MissingInputError("cannot open IDX label file " + labels_path->string());
    const auto labels = read_idx_labels(ls);
    if (labels.size() != images.size()) throw FormatError("IDX label count does not match image count");
    ImageSet out;
    for (std::size_t i = 0; i < images.size(); ++i)
        if (labels[i] == *digit) out.push_back(std::move(images[i]));
    return out;
}

void save_video(const std::filesystem::path& dir, const VideoSequence& video) {
    std::filesystem::create_directories(dir);
    std::ofstream man(dir / "manifest.txt");
    if (!man) throw MissingInputError("cannot write " + (dir / "manifest.txt").string());
    man << "rows=" << video.rows() << "\ncols=" << video.cols() << "\ncount=" << video.frames.size()
        << "\ndelta=" << std::setprecision(17) << video.delta << "\n";
    for (std::size_t i = 0; i < video.frames.size(); ++i) {
        std::ostringstream name;
        name << "frame_" << std::setw(5) << std::setfill('0') << i << ".f64";
        std::ofstream os(dir / name.str(), std::ios::binary);
        binio::put_f64s(os, video.frames[i].px);
    }
}

VideoSequence load_video(const std::filesystem::path& dir) {
    std::ifstream man(dir / "manifest.txt");
    if (!man) throw MissingInputError("missing video manifest in " + dir.string());
    std::map<std::string, std::string> kv;
    for (std::string line; std::getline(man, line);) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    for (const char* k : {"rows", "cols", "count", "delta"})
        if (!kv.count(k)) throw FormatError("video manifest missing key '" + std::string(k) + "'");
    const std::size_t rows = std::stoul(kv["rows"]), cols = std::stoul(kv["cols"]), count = std::stoul(kv["count"]);
    VideoSequence v;
    v.delta = std::stod(kv["delta"]);
    for (std::size_t i = 0; i < count; ++i) {
        std::ostringstream name;
        name << "frame_" << std::setw(5) << std::setfill('0') << i << ".f64";
        std::ifstream is(dir / name.str(), std::ios::binary);
        if (!is) throw MissingInputError("missing video frame " + (dir / name.str()).string());
        binio::Reader r(is, name.str());
        Image img(rows, cols);
        img.px = r.f64s(rows * cols);
        v.frames.push_back(std::move(img));
    }
    return v;
}

void save_image_set(const std::filesystem::path& path, const ImageSet& images) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw MissingInputError("cannot write " + path.string());
    os.write("NSIS", 4);
    binio::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(images.size()));
    binio::put_le<std::uint32_t>(os, images.empty() ? 0u : static_cast<std::uint32_t>(images.front().rows));
    binio::put_le<std::uint32_t>(os, images.empty() ? 0u : static_cast<std::uint32_t>(images.front().cols));
    for (const auto& img : images) binio::put_f64s(os, img.px);
}

ImageSet load_image_set(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingInputError("cannot open image set " + path.string());
    binio::Reader r(is, path.filename().string());
    char magic[4];
    r.bytes(magic, 4);
    if (std::string(magic, 4) != "NSIS") throw FormatError("image set: bad magic", 0);
    const auto n = r.le<std::uint32_t>();
    const auto rows = r.le<std::uint32_t>();
    const auto cols = r.le<std::uint32_t>();
    ImageSet out(n);
    for (auto& img : out) {
        img = Image(rows, cols);
        img.px = r.f64s(static_cast<std::size_t>(rows) * cols);
    }
    return out;
}

} // namespace nslab
