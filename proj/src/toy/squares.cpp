#include "aae/toy/squares.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "aae/error.hpp"

namespace aae::toy {

namespace {

// Largest half-extent of the square over all rotations.
double max_half_extent(double side) { return side * std::numbers::sqrt2 / 2.0; }

}  // namespace

void validate(const SquareSpec& spec, int size) {
  if (size <= 0) throw Error(ErrorCode::kBounds, "canvas size must be positive");
  if (!(spec.s > 0 && spec.s <= 1)) throw Error(ErrorCode::kBounds, "square scale must be in (0, 1]");
  if (!(std::abs(spec.tx) <= 1 && std::abs(spec.ty) <= 1) || !std::isfinite(spec.r)) {
    throw Error(ErrorCode::kBounds, "square translation must be in [-1, 1]");
  }
  const double half = spec.s * size / 2.0;
  const double extent = half * (std::abs(std::cos(spec.r)) + std::abs(std::sin(spec.r)));
  const double cx = size / 2.0 + spec.tx * size;
  const double cy = size / 2.0 + spec.ty * size;
  constexpr double kSlack = 1e-9;
  if (cx - extent < -kSlack || cx + extent > size + kSlack || cy - extent < -kSlack ||
      cy + extent > size + kSlack) {
    throw Error(ErrorCode::kBounds, "square exceeds the canvas");
  }
}

ImageF draw_square(const SquareSpec& spec, int size) {
  validate(spec, size);
  const double half = spec.s * size / 2.0;
  const double cx = size / 2.0 + spec.tx * size;
  const double cy = size / 2.0 + spec.ty * size;
  const double c = std::cos(spec.r), s = std::sin(spec.r);
  ImageF img = ImageF::Zero(size, size);
  for (int row = 0; row < size; ++row) {
    const double dy = row + 0.5 - cy;
    for (int col = 0; col < size; ++col) {
      const double dx = col + 0.5 - cx;
      const double u = c * dx + s * dy;
      const double v = -s * dx + c * dy;
      if (std::abs(u) <= half && std::abs(v) <= half) img(row, col) = 1.0f;
    }
  }
  return img;
}

Distribution parse_distribution(std::string_view name) {
  if (name == "a") return Distribution::kA;
  if (name == "b") return Distribution::kB;
  if (name == "c") return Distribution::kC;
  if (name == "d") return Distribution::kD;
  throw Error(ErrorCode::kConfig, "unknown square distribution '" + std::string(name) + "'");
}

char distribution_name(Distribution d) { return static_cast<char>('a' + static_cast<int>(d)); }

SquareSpec sample_distribution(Distribution d, Rng& rng) {
  const double r = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return sample_distribution(d, r, rng);
}

SquareSpec sample_distribution(Distribution d, double r, Rng& rng) {
  SquareSpec spec;
  spec.r = r;
  double scale = 1.0;
  bool shifted = false;
  switch (d) {
    case Distribution::kA: break;
    case Distribution::kB: scale = 0.6; break;
    case Distribution::kC: shifted = true; break;
    case Distribution::kD:
      scale = rng.uniform(0.5, 1.0);
      shifted = true;
      break;
  }
  spec.s = 0.5 * scale;
  if (shifted) {
    const double margin = 0.5 - max_half_extent(spec.s);
    spec.tx = rng.uniform(-1.0, 1.0) * margin;
    spec.ty = rng.uniform(-1.0, 1.0) * margin;
  }
  return spec;
}

}  // namespace aae::toy
