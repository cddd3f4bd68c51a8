#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace aae {

/// Single-channel float image; rows = height, cols = width, row-major so that
/// data() walks scanlines.
using ImageF = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Depth map in millimetres; 0 marks pixels without a surface.
using DepthImage = ImageF;

/// Planar multi-channel image with values in [0, 1].
using Planes = std::vector<ImageF>;

/// Axis-aligned box in continuous pixel coordinates: covers [x, x+w) x [y, y+h).
struct BBox {
  double x = 0, y = 0, w = 0, h = 0;

  double diagonal() const;
  double center_x() const { return x + w / 2; }
  double center_y() const { return y + h / 2; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

/// 16-bit grayscale PNG; values are rounded and clamped to [0, 65535].
void write_png16(const std::filesystem::path& path, const ImageF& img);
ImageF read_png16(const std::filesystem::path& path);

/// 8-bit PNG of [0, 1] planes (1 = gray, 3 = RGB).
void write_png8(const std::filesystem::path& path, const Planes& planes);
Planes read_png8(const std::filesystem::path& path);

/// Raw depth dump: u32 width, u32 height, then width*height little-endian f32
/// in row-major order.
void write_depth_raw(const std::filesystem::path& path, const DepthImage& d);
DepthImage read_depth_raw(const std::filesystem::path& path);

}  // namespace aae
