#include "aae/augment.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "aae/error.hpp"

namespace aae {

AugmentConfig AugmentConfig::Disabled() {
  AugmentConfig cfg;
  cfg.op_probability = 0;
  cfg.channel_probability = 0;
  return cfg;
}

void AugmentConfig::validate() const {
  auto prob = [](double p) { return p >= 0 && p <= 1; };
  auto ordered = [](const Range& r) {
    return std::isfinite(r.first) && std::isfinite(r.second) && r.first <= r.second;
  };
  if (!prob(op_probability) || !prob(channel_probability)) {
    throw Error(ErrorCode::kConfig, "augment probabilities must be in [0, 1]");
  }
  if (!ordered(add_range) || !ordered(contrast_range) || !ordered(multiply_range) ||
      !ordered(blur_sigma_range) || !ordered(scale_range) || !ordered(translation_range)) {
    throw Error(ErrorCode::kConfig, "augment ranges must be finite and ordered");
  }
  if (blur_sigma_range.first < 0 || scale_range.first <= 0) {
    throw Error(ErrorCode::kConfig, "blur sigma must be >= 0 and scale > 0");
  }
  if (!prob(occlusion_fraction_max)) {
    throw Error(ErrorCode::kConfig, "occlusion fraction must be in [0, 1]");
  }
}

const char* op_name(const AppliedOp& op) {
  constexpr const char* kNames[] = {"add", "contrast", "multiply", "invert",
                                    "blur", "geometric", "occlusion"};
  return kNames[op.index()];
}

namespace {

void check_channels(const Planes& img, std::size_t n) {
  if (img.empty() || n != img.size()) {
    throw Error(ErrorCode::kDimension, "per-channel parameter count does not match image");
  }
}

template <typename F>
Planes per_channel(const Planes& img, F&& f) {
  Planes out(img.size());
  for (std::size_t c = 0; c < img.size(); ++c) {
    out[c] = f(img[c], c).cwiseMax(0.0f).cwiseMin(1.0f);
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

ImageF blur_rows(const ImageF& img, const std::vector<double>& k) {
  const int radius = static_cast<int>(k.size() / 2);
  const auto w = img.cols();
  ImageF out(img.rows(), w);
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) {
        const auto cc = std::clamp<Eigen::Index>(c + i, 0, w - 1);
        acc += k[i + radius] * img(r, cc);
      }
      out(r, c) = static_cast<float>(acc);
    }
  }
  return out;
}

int count_in(const Mask& mask, const Rect& r) {
  if (r.w <= 0 || r.h <= 0) return 0;
  return static_cast<int>(mask.block(r.y, r.x, r.h, r.w).count());
}

Rect clip(Rect r, Eigen::Index width, Eigen::Index height) {
  const int x1 = std::min<int>(r.x + r.w, static_cast<int>(width));
  const int y1 = std::min<int>(r.y + r.h, static_cast<int>(height));
  r.x = std::max(r.x, 0);
  r.y = std::max(r.y, 0);
  r.w = std::max(0, x1 - r.x);
  r.h = std::max(0, y1 - r.y);
  return r;
}

// Joint draw with `op_probability`, then each channel independently gets its
// own draw with `channel_probability`. Untouched channels keep `identity`.
std::optional<std::vector<float>> draw_values(const Range& range, float identity,
                                              std::size_t channels, const AugmentConfig& cfg,
                                              Rng& rng) {
  std::vector<float> v(channels, identity);
  bool any = false;
  if (rng.bernoulli(cfg.op_probability)) {
    std::fill(v.begin(), v.end(), static_cast<float>(rng.uniform(range.first, range.second)));
    any = true;
  }
  for (auto& x : v) {
    if (rng.bernoulli(cfg.channel_probability)) {
      x = static_cast<float>(rng.uniform(range.first, range.second));
      any = true;
    }
  }
  if (!any) return std::nullopt;
  return v;
}

}  // namespace

Planes apply_add(const Planes& img, const std::vector<float>& delta) {
  check_channels(img, delta.size());
  return per_channel(img, [&](const ImageF& p, std::size_t c) -> ImageF { return p + delta[c]; });
}

Planes apply_contrast(const Planes& img, const std::vector<float>& factor) {
  check_channels(img, factor.size());
  return per_channel(img, [&](const ImageF& p, std::size_t c) -> ImageF {
    return (p - 0.5f) * factor[c] + 0.5f;
  });
}

Planes apply_multiply(const Planes& img, const std::vector<float>& factor) {
  check_channels(img, factor.size());
  return per_channel(img, [&](const ImageF& p, std::size_t c) -> ImageF { return p * factor[c]; });
}

Planes apply_invert(const Planes& img, const std::vector<bool>& channels) {
  check_channels(img, channels.size());
  return per_channel(img, [&](const ImageF& p, std::size_t c) -> ImageF {
    return channels[c] ? ImageF(1.0f - p) : p;
  });
}

Planes apply_blur(const Planes& img, double sigma) {
  if (!(sigma >= 0)) throw Error(ErrorCode::kConfig, "blur sigma must be >= 0");
  const auto k = gaussian_kernel(sigma);
  if (k.size() == 1) return img;
  return per_channel(img, [&](const ImageF& p, std::size_t) -> ImageF {
    const ImageF horizontal = blur_rows(p, k);
    const ImageF t = horizontal.transpose();
    return blur_rows(t, k).transpose();
  });
}

Planes apply_geometric(const Planes& img, const GeometricOp& op) {
  if (!(op.scale > 0)) throw Error(ErrorCode::kConfig, "scale must be positive");
  return per_channel(img, [&](const ImageF& p, std::size_t) -> ImageF {
    const auto h = p.rows(), w = p.cols();
    const double cx = w / 2.0, cy = h / 2.0;
    ImageF out = ImageF::Zero(h, w);
    for (Eigen::Index r = 0; r < h; ++r) {
      const double sy = (r + 0.5 - cy - op.ty * h) / op.scale + cy;
      const auto rr = static_cast<Eigen::Index>(std::floor(sy));
      if (rr < 0 || rr >= h) continue;
      for (Eigen::Index c = 0; c < w; ++c) {
        const double sx = (c + 0.5 - cx - op.tx * w) / op.scale + cx;
        const auto cc = static_cast<Eigen::Index>(std::floor(sx));
        if (cc >= 0 && cc < w) out(r, c) = p(rr, cc);
      }
    }
    return out;
  });
}

Planes apply_occlusion(const Planes& img, const std::vector<Rect>& rects) {
  Planes out = img;
  for (auto& p : out) {
    for (const auto& r0 : rects) {
      const Rect r = clip(r0, p.cols(), p.rows());
      if (r.w > 0 && r.h > 0) p.block(r.y, r.x, r.h, r.w).setZero();
    }
  }
  return out;
}

Planes apply_op(const Planes& img, const AppliedOp& op) {
  return std::visit(
      [&](const auto& o) -> Planes {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, AddOp>) return apply_add(img, o.delta);
        if constexpr (std::is_same_v<T, ContrastOp>) return apply_contrast(img, o.factor);
        if constexpr (std::is_same_v<T, MultiplyOp>) return apply_multiply(img, o.factor);
        if constexpr (std::is_same_v<T, InvertOp>) return apply_invert(img, o.channels);
        if constexpr (std::is_same_v<T, BlurOp>) return apply_blur(img, o.sigma);
        if constexpr (std::is_same_v<T, GeometricOp>) return apply_geometric(img, o);
        if constexpr (std::is_same_v<T, OcclusionOp>) return apply_occlusion(img, o.rects);
      },
      op);
}

Planes replay(const Planes& img, const std::vector<AppliedOp>& log) {
  Planes out = img;
  for (const auto& op : log) out = apply_op(out, op);
  return out;
}

Mask object_mask(const Planes& img) {
  if (img.empty()) throw Error(ErrorCode::kDimension, "image has no channels");
  Mask m = img[0] > 0;
  for (std::size_t c = 1; c < img.size(); ++c) m = m || (img[c] > 0);
  return m;
}

OcclusionResult occlude(const Planes& img, const Mask& mask, double fraction, Rng& rng) {
  if (!(fraction >= 0 && fraction <= 1)) {
    throw Error(ErrorCode::kBounds, "occlusion fraction must be in [0, 1]");
  }
  if (img.empty() || mask.rows() != img[0].rows() || mask.cols() != img[0].cols()) {
    throw Error(ErrorCode::kDimension, "mask does not match image");
  }
  const auto area = mask.count();
  const double budget = fraction * static_cast<double>(area);
  if (area == 0 || budget < 1.0) return {img, {}};

  int r0 = static_cast<int>(mask.rows()), r1 = -1, c0 = static_cast<int>(mask.cols()), c1 = -1;
  for (Eigen::Index r = 0; r < mask.rows(); ++r) {
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      if (mask(r, c)) {
        r0 = std::min<int>(r0, static_cast<int>(r));
        r1 = std::max<int>(r1, static_cast<int>(r));
        c0 = std::min<int>(c0, static_cast<int>(c));
        c1 = std::max<int>(c1, static_cast<int>(c));
      }
    }
  }

  Rect rect;
  bool fits = false;
  for (int attempt = 0; attempt < 10 && !fits; ++attempt) {
    const double aspect = rng.uniform(0.5, 2.0);
    const int w = std::max(1, static_cast<int>(std::lround(std::sqrt(budget * aspect))));
    const int h = std::max(1, static_cast<int>(std::lround(std::sqrt(budget / aspect))));
    const int cx = c0 + static_cast<int>(rng.below(static_cast<std::uint32_t>(c1 - c0 + 1)));
    const int cy = r0 + static_cast<int>(rng.below(static_cast<std::uint32_t>(r1 - r0 + 1)));
    rect = clip({cx - w / 2, cy - h / 2, w, h}, mask.cols(), mask.rows());
    fits = count_in(mask, rect) <= budget;
  }
  // Crop the last draw until it fits, alternating sides.
  for (bool shrink_w = true; !fits; shrink_w = !shrink_w) {
    if (shrink_w && rect.w > 0) --rect.w;
    if (!shrink_w && rect.h > 0) --rect.h;
    fits = count_in(mask, rect) <= budget;
  }
  if (rect.w == 0 || rect.h == 0) return {img, {}};
  return {apply_occlusion(img, {rect}), {rect}};
}

Planes composite_background(const Planes& img, const Mask& mask, const Planes& background) {
  if (img.size() != background.size() || img.empty()) {
    throw Error(ErrorCode::kDimension, "background channel count differs");
  }
  Planes out(img.size());
  for (std::size_t c = 0; c < img.size(); ++c) {
    if (background[c].rows() != img[c].rows() || background[c].cols() != img[c].cols() ||
        mask.rows() != img[c].rows() || mask.cols() != img[c].cols()) {
      throw Error(ErrorCode::kDimension, "background size differs");
    }
    out[c] = mask.select(img[c], background[c]);
  }
  return out;
}

Planes noise_background(Eigen::Index height, Eigen::Index width, std::size_t channels,
                        int cell, Rng& rng) {
  if (height <= 0 || width <= 0 || channels == 0 || cell <= 0) {
    throw Error(ErrorCode::kBounds, "noise background needs positive size");
  }
  Planes out(channels, ImageF(height, width));
  for (auto& p : out) {
    const Eigen::Index gh = (height + cell - 1) / cell, gw = (width + cell - 1) / cell;
    ImageF grid(gh, gw);
    for (Eigen::Index i = 0; i < grid.size(); ++i) grid(i) = static_cast<float>(rng.uniform());
    for (Eigen::Index r = 0; r < height; ++r) {
      for (Eigen::Index c = 0; c < width; ++c) p(r, c) = grid(r / cell, c / cell);
    }
  }
  return out;
}

AugmentResult augment(const Planes& img, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  if (img.empty()) throw Error(ErrorCode::kDimension, "image has no channels");
  const std::size_t nc = img.size();
  AugmentResult out{img, {}};
  auto run = [&](AppliedOp op) {
    out.image = apply_op(out.image, op);
    out.log.push_back(std::move(op));
  };

  if (auto v = draw_values(cfg.add_range, 0.0f, nc, cfg, rng)) run(AddOp{*v});
  if (auto v = draw_values(cfg.contrast_range, 1.0f, nc, cfg, rng)) run(ContrastOp{*v});
  if (auto v = draw_values(cfg.multiply_range, 1.0f, nc, cfg, rng)) run(MultiplyOp{*v});
  if (cfg.invert_enabled) {
    std::vector<bool> ch(nc, rng.bernoulli(cfg.op_probability));
    for (std::size_t c = 0; c < nc; ++c) {
      if (rng.bernoulli(cfg.channel_probability)) ch[c] = true;
    }
    if (std::find(ch.begin(), ch.end(), true) != ch.end()) run(InvertOp{ch});
  }
  if (rng.bernoulli(cfg.op_probability)) {
    run(BlurOp{rng.uniform(cfg.blur_sigma_range.first, cfg.blur_sigma_range.second)});
  }
  if (rng.bernoulli(cfg.op_probability)) {
    GeometricOp g;
    g.scale = rng.uniform(cfg.scale_range.first, cfg.scale_range.second);
    g.tx = rng.uniform(cfg.translation_range.first, cfg.translation_range.second);
    g.ty = rng.uniform(cfg.translation_range.first, cfg.translation_range.second);
    run(g);
  }
  if (rng.bernoulli(cfg.op_probability)) {
    const double fraction = rng.uniform(0.0, cfg.occlusion_fraction_max);
    auto occ = occlude(out.image, object_mask(img), fraction, rng);
    if (!occ.rects.empty()) {
      out.image = std::move(occ.image);
      out.log.push_back(OcclusionOp{std::move(occ.rects)});
    }
  }
  return out;
}

}  // namespace aae
