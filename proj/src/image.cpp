#include "aae/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>

#include "aae/binary_io.hpp"
#include "aae/error.hpp"

namespace aae {

double BBox::diagonal() const { return std::sqrt(w * w + h * h); }

namespace io {

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<char>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

}  // namespace io

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return f;
}

void png_warn(png_structp, png_const_charp) {}

// Writes `rows` scanlines of already-packed big-endian PNG samples.
void write_png(const std::filesystem::path& path, int width, int height,
               int bit_depth, int color_type,
               const std::vector<std::vector<png_byte>>& rows) {
  auto f = open(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "png encoding failed: " + path.string());
  }
  {
    png_init_io(png, f.get());
    png_set_IHDR(png, info, width, height, bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (const auto& r : rows) png_write_row(png, r.data());
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
}

struct PngData {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<std::vector<png_byte>> rows;
};

PngData read_png(const std::filesystem::path& path) {
  auto f = open(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn);
  png_infop info = png_create_info_struct(png);
  PngData out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kFormat, "png decoding failed: " + path.string());
  }
  {
    png_init_io(png, f.get());
    png_read_info(png, info);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const auto stride = png_get_rowbytes(png, info);
    out.rows.assign(out.height, std::vector<png_byte>(stride));
    for (auto& r : out.rows) png_read_row(png, r.data(), nullptr);
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

void write_png16(const std::filesystem::path& path, const ImageF& img) {
  std::vector<std::vector<png_byte>> rows(img.rows(),
                                          std::vector<png_byte>(img.cols() * 2));
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const double v = std::clamp<double>(std::round(img(r, c)), 0.0, 65535.0);
      const auto u = static_cast<unsigned>(v);
      rows[r][2 * c] = static_cast<png_byte>(u >> 8);
      rows[r][2 * c + 1] = static_cast<png_byte>(u & 0xff);
    }
  }
  write_png(path, static_cast<int>(img.cols()), static_cast<int>(img.rows()), 16,
            PNG_COLOR_TYPE_GRAY, rows);
}

ImageF read_png16(const std::filesystem::path& path) {
  const PngData p = read_png(path);
  if (p.channels != 1 || p.bit_depth != 16) {
    throw Error(ErrorCode::kFormat, "expected 16-bit grayscale png: " + path.string());
  }
  ImageF img(p.height, p.width);
  for (int r = 0; r < p.height; ++r) {
    for (int c = 0; c < p.width; ++c) {
      img(r, c) = static_cast<float>((p.rows[r][2 * c] << 8) | p.rows[r][2 * c + 1]);
    }
  }
  return img;
}

void write_png8(const std::filesystem::path& path, const Planes& planes) {
  if (planes.size() != 1 && planes.size() != 3) {
    throw Error(ErrorCode::kDimension, "png8 expects 1 or 3 planes");
  }
  const auto h = planes[0].rows(), w = planes[0].cols();
  const auto nc = static_cast<Eigen::Index>(planes.size());
  std::vector<std::vector<png_byte>> rows(h, std::vector<png_byte>(w * nc));
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      for (Eigen::Index k = 0; k < nc; ++k) {
        const float v = std::clamp(planes[k](r, c), 0.0f, 1.0f);
        rows[r][c * nc + k] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
    }
  }
  write_png(path, static_cast<int>(w), static_cast<int>(h), 8,
            nc == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, rows);
}

Planes read_png8(const std::filesystem::path& path) {
  const PngData p = read_png(path);
  if (p.bit_depth != 8) {
    throw Error(ErrorCode::kFormat, "expected 8-bit png: " + path.string());
  }
  Planes planes(p.channels, ImageF(p.height, p.width));
  for (int r = 0; r < p.height; ++r) {
    for (int c = 0; c < p.width; ++c) {
      for (int k = 0; k < p.channels; ++k) {
        planes[k](r, c) = p.rows[r][c * p.channels + k] / 255.0f;
      }
    }
  }
  return planes;
}

void write_depth_raw(const std::filesystem::path& path, const DepthImage& d) {
  io::Writer w;
  w.u32(static_cast<std::uint32_t>(d.cols()));
  w.u32(static_cast<std::uint32_t>(d.rows()));
  for (Eigen::Index i = 0; i < d.size(); ++i) w.f32(d.data()[i]);
  io::write_file(path.string(), w.buffer());
}

DepthImage read_depth_raw(const std::filesystem::path& path) {
  const auto buf = io::read_file(path.string());
  io::Reader r(buf);
  const auto w = r.u32();
  const auto h = r.u32();
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) {
    throw FormatError(ErrorCode::kFormat, "implausible depth image size", 0);
  }
  DepthImage d(h, w);
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = r.f32();
  if (r.remaining() != 0) {
    throw FormatError(ErrorCode::kFormat, "trailing bytes", r.offset());
  }
  return d;
}

}  // namespace aae
