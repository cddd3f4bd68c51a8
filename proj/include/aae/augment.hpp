#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "aae/error.hpp"
#include "aae/image.hpp"
#include "aae/rng.hpp"

namespace aae {

using Range = std::pair<double, double>;

/// Domain-randomization settings. A color op draws one shared value for all
/// channels with `op_probability`; independently, each channel draws its own
/// value with `channel_probability`, overriding the shared one.
struct AugmentConfig {
  double op_probability = 0.5;
  double channel_probability = 0.3;
  Range add_range{-0.1, 0.1};
  Range contrast_range{0.4, 2.3};
  Range multiply_range{0.6, 1.4};
  bool invert_enabled = true;
  Range blur_sigma_range{0.0, 1.2};
  double occlusion_fraction_max = 0.25;
  Range scale_range{0.8, 1.2};
  Range translation_range{-0.15, 0.15};

  /// Every probability zero: augment() becomes the identity.
  static AugmentConfig Disabled();
  void validate() const;
};

struct AddOp { std::vector<float> delta; };
struct ContrastOp { std::vector<float> factor; };
struct MultiplyOp { std::vector<float> factor; };
struct InvertOp { std::vector<bool> channels; };
struct BlurOp { double sigma = 0; };
/// Scale about the image centre, then shift by (tx, ty) image fractions.
struct GeometricOp { double scale = 1, tx = 0, ty = 0; };
struct Rect { int x = 0, y = 0, w = 0, h = 0; };
struct OcclusionOp { std::vector<Rect> rects; };

using AppliedOp = std::variant<AddOp, ContrastOp, MultiplyOp, InvertOp, BlurOp,
                               GeometricOp, OcclusionOp>;

const char* op_name(const AppliedOp& op);

// Deterministic single-op kernels. All clamp their output to [0, 1].
Planes apply_add(const Planes& img, const std::vector<float>& delta);
/// (p - 0.5) * c + 0.5 per channel.
Planes apply_contrast(const Planes& img, const std::vector<float>& factor);
Planes apply_multiply(const Planes& img, const std::vector<float>& factor);
Planes apply_invert(const Planes& img, const std::vector<bool>& channels);
/// Separable Gaussian truncated at 3 sigma, edge pixels replicated.
Planes apply_blur(const Planes& img, double sigma);
/// Nearest-neighbour resample; pixels mapped from outside become 0.
Planes apply_geometric(const Planes& img, const GeometricOp& op);
Planes apply_occlusion(const Planes& img, const std::vector<Rect>& rects);
Planes apply_op(const Planes& img, const AppliedOp& op);

/// Replays a log produced by augment().
Planes replay(const Planes& img, const std::vector<AppliedOp>& log);

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Pixels where any channel is non-zero.
Mask object_mask(const Planes& img);

struct OcclusionResult {
  Planes image;
  std::vector<Rect> rects;
};

/// Zeroes one rectangle covering at most `fraction` of the mask area. Draws
/// are retried up to 10 times, then the last rectangle is shrunk until it
/// fits. An empty mask or zero fraction leaves the image unchanged.
OcclusionResult occlude(const Planes& img, const Mask& mask, double fraction, Rng& rng);

/// Object pixels from `img`, the rest from `background`.
Planes composite_background(const Planes& img, const Mask& mask, const Planes& background);

/// Blocky uniform noise, one random value per `cell`-sized square.
Planes noise_background(Eigen::Index height, Eigen::Index width, std::size_t channels,
                        int cell, Rng& rng);

struct AugmentResult {
  Planes image;
  std::vector<AppliedOp> log;
};

/// Applies, in order: add, contrast, multiply, invert, blur, geometric,
/// occlusion. The occlusion mask is taken from the input image.
AugmentResult augment(const Planes& img, const AugmentConfig& cfg, Rng& rng);

}  // namespace aae
