#ifndef PANICLE_TYPES_HPP
#define PANICLE_TYPES_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace panicle {

// Invalid arguments or configuration; maps to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable or malformed input data; maps to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A processing stage failed on valid input (degenerate geometry, empty
// result, unusable scene); maps to exit code 3.
class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    double& operator[](int i) { return (&x)[i]; }
    double operator[](int i) const { return (&x)[i]; }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double squaredNorm() const { return dot(*this); }
    double norm() const { return std::sqrt(squaredNorm()); }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? *this / n : Vec3{0, 0, 0};
    }
    bool isFinite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

struct Rgb8 {
    std::uint8_t r = 0, g = 0, b = 0;
};

// Central currency of the pipeline: positions with optional per-point
// normals and colors (parallel arrays).
struct PointCloud {
    std::vector<Vec3> points;
    std::optional<std::vector<Vec3>> normals;
    std::optional<std::vector<Rgb8>> colors;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    bool hasNormals() const { return normals.has_value(); }
    bool hasColors() const { return colors.has_value(); }

    // Throws UsageError if parallel arrays disagree or values are not finite.
    void validate() const;
};

struct CameraPose {
    Vec3 position;
    Vec3 view_dir;  // unit length
};

// Row-major foreground bitmap; a pixel is foreground iff bits[y*width+x] != 0.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill) {}

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    bool inBounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    std::size_t area() const;       // foreground pixel count
    bool emptyMask() const { return area() == 0; }
};

// Interleaved 8-bit raster, channels in {1 (gray), 3 (RGB), 4 (RGBA)}.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, int c)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, 0) {}

    std::uint8_t* pixel(int x, int y) {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
    }
    const std::uint8_t* pixel(int x, int y) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
    }
};

// Scalar field sampled on a regular lattice. value(ix,iy,iz) is stored at
// index (ix*ny + iy)*nz + iz (row-major in (nx,ny,nz) order).
struct DensityGrid {
    std::array<int, 3> dims{0, 0, 0};
    Vec3 origin;
    Vec3 spacing{1, 1, 1};
    std::vector<float> values;

    std::size_t index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(ix) * dims[1] + iy) * dims[2] + iz;
    }
    float value(int ix, int iy, int iz) const { return values[index(ix, iy, iz)]; }
    float& value(int ix, int iy, int iz) { return values[index(ix, iy, iz)]; }

    Vec3 worldPos(int ix, int iy, int iz) const {
        return {origin.x + ix * spacing.x,
                origin.y + iy * spacing.y,
                origin.z + iz * spacing.z};
    }

    void validate() const;
};

// Box with orthonormal axes; half_extents sorted descending and paired
// with axes[0..2] accordingly.
struct OrientedBoundingBox {
    Vec3 center;
    std::array<Vec3, 3> axes;
    std::array<double, 3> half_extents{0, 0, 0};
};

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;

    bool empty() const { return triangles.empty(); }
};

}  // namespace panicle

#endif
