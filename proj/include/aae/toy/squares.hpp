#pragma once

#include <string_view>

#include "aae/image.hpp"
#include "aae/rng.hpp"

namespace aae::toy {

inline constexpr int kCanvasSize = 64;

/// A filled square: side = s * canvas, centre = canvas/2 + t * canvas.
struct SquareSpec {
  double s = 0.5;
  double tx = 0;
  double ty = 0;
  double r = 0;  // radians
};

/// Throws kBounds unless s in (0, 1], |t| <= 1 and the rotated square lies
/// inside the canvas.
void validate(const SquareSpec& spec, int size = kCanvasSize);

/// Pixel is 1 iff its centre lies inside the rotated square.
ImageF draw_square(const SquareSpec& spec, int size = kCanvasSize);

/// The four distributions of the rotating-square experiment:
///   a: s = 1,          t = 0
///   b: s = 0.6,        t = 0
///   c: s = 1,          t ~ U(-1, 1)
///   d: s ~ U(0.5, 1),  t ~ U(-1, 1)
/// with r ~ U(0, 2 pi). A distribution scale of 1 is half the canvas, and t
/// spans whatever margin remains once the square is rotated, so every draw
/// fits.
enum class Distribution { kA, kB, kC, kD };

Distribution parse_distribution(std::string_view name);
char distribution_name(Distribution d);

SquareSpec sample_distribution(Distribution d, Rng& rng);
/// Same as above with the rotation fixed.
SquareSpec sample_distribution(Distribution d, double r, Rng& rng);

}  // namespace aae::toy
