#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "aae/augment.hpp"

using namespace aae;

namespace {

// Three-channel test card: a gradient background with a bright object block.
// Values are multiples of 1/256 so float round trips are exact.
Planes test_card(int h = 48, int w = 64) {
  Planes p(3, ImageF(h, w));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const bool obj = r >= 12 && r < 36 && c >= 20 && c < 50;
      p[0](r, c) = obj ? 0.8f : static_cast<float>(c) / w;
      p[1](r, c) = obj ? 0.3f + 0.01f * (r - 12) : 0.0f;
      p[2](r, c) = obj ? 0.6f : static_cast<float>(r) / (2 * h);
    }
  }
  for (auto& ch : p) ch = (ch * 256.0f).round() / 256.0f;
  return p;
}

// Object-only card: zero outside the object.
Planes object_card() {
  Planes p(3, ImageF::Zero(48, 64));
  for (auto& c : p) c.block(10, 16, 20, 30).setConstant(0.7f);
  return p;
}

bool equal(const Planes& a, const Planes& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (a[c].rows() != b[c].rows() || a[c].cols() != b[c].cols() || !(a[c] == b[c]).all()) {
      return false;
    }
  }
  return true;
}

bool in_unit_range(const Planes& p) {
  for (const auto& c : p) {
    if (!(c >= 0.0f).all() || !(c <= 1.0f).all()) return false;
  }
  return true;
}

AugmentConfig always() {
  AugmentConfig cfg;
  cfg.op_probability = 1.0;
  return cfg;
}

}  // namespace

TEST(AugmentOps, IdentityParameters) {
  const Planes img = test_card();
  EXPECT_TRUE(equal(apply_add(img, {0, 0, 0}), img));
  EXPECT_TRUE(equal(apply_contrast(img, {1, 1, 1}), img));
  EXPECT_TRUE(equal(apply_multiply(img, {1, 1, 1}), img));
  EXPECT_TRUE(equal(apply_invert(img, {false, false, false}), img));
  EXPECT_TRUE(equal(apply_blur(img, 0.0), img));
  EXPECT_TRUE(equal(apply_geometric(img, {1, 0, 0}), img));
  EXPECT_TRUE(equal(apply_occlusion(img, {}), img));
  Rng rng(1);
  const auto r = augment(img, AugmentConfig::Disabled(), rng);
  EXPECT_TRUE(r.log.empty());
  EXPECT_TRUE(equal(r.image, img));
}

TEST(AugmentOps, KnownValues) {
  Planes p(1, ImageF::Constant(2, 2, 0.25f));
  EXPECT_FLOAT_EQ(apply_add(p, {0.1f})[0](0, 0), 0.35f);
  EXPECT_FLOAT_EQ(apply_contrast(p, {2.0f})[0](0, 0), 0.0f);
  EXPECT_FLOAT_EQ(apply_contrast(p, {0.5f})[0](0, 0), 0.375f);
  EXPECT_FLOAT_EQ(apply_multiply(p, {1.4f})[0](0, 0), 0.35f);
  EXPECT_FLOAT_EQ(apply_invert(p, {true})[0](0, 0), 0.75f);
  EXPECT_FLOAT_EQ(apply_add(p, {0.9f})[0](0, 0), 1.0f);
  EXPECT_THROW(apply_add(p, {0.1f, 0.2f}), Error);
  EXPECT_THROW(apply_blur(p, -1), Error);
  EXPECT_THROW(apply_geometric(p, {0, 0, 0}), Error);
}

TEST(AugmentOps, InvertIsAnInvolution) {
  const Planes img = test_card();
  for (std::vector<bool> ch : {std::vector<bool>{true, false, true}, std::vector<bool>{true, true, true}}) {
    EXPECT_TRUE(equal(apply_invert(apply_invert(img, ch), ch), img));
  }
}

TEST(AugmentOps, BlurPreservesConstantsAndMass) {
  Planes flat(1, ImageF::Constant(20, 20, 0.4f));
  const auto b = apply_blur(flat, 1.1);
  EXPECT_LT((b[0] - 0.4f).abs().maxCoeff(), 1e-6f);
  Planes dot(1, ImageF::Zero(21, 21));
  dot[0](10, 10) = 1.0f;
  const auto bd = apply_blur(dot, 1.0);
  EXPECT_NEAR(bd[0].cast<double>().sum(), 1.0, 1e-5);
  EXPECT_LT(bd[0](10, 10), 1.0f);
  EXPECT_NEAR(bd[0](10, 9), bd[0](9, 10), 1e-7);
}

TEST(AugmentOps, GeometricShiftMovesContent) {
  const Planes img = test_card(40, 40);
  const auto s = apply_geometric(img, {1.0, 0.25, 0.0});  // 10 px to the right
  for (int r = 0; r < 40; ++r) {
    for (int c = 10; c < 40; ++c) EXPECT_EQ(s[0](r, c), img[0](r, c - 10));
    for (int c = 0; c < 10; ++c) EXPECT_EQ(s[0](r, c), 0.0f);
  }
}

TEST(Augment, ReplayIsBitExact) {
  const Planes img = test_card();
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto r = augment(img, t % 2 ? always() : AugmentConfig{}, rng);
    EXPECT_TRUE(equal(replay(img, r.log), r.image));
    EXPECT_TRUE(in_unit_range(r.image));
  }
}

TEST(Augment, SameSeedSameResult) {
  const Planes img = test_card();
  Rng a(9), b(9);
  for (int t = 0; t < 20; ++t) EXPECT_TRUE(equal(augment(img, {}, a).image, augment(img, {}, b).image));
}

TEST(Augment, OpOrderAndRanges) {
  const Planes img = test_card();
  const AugmentConfig cfg = always();
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto r = augment(img, cfg, rng);
    std::size_t prev = 0;
    for (const auto& op : r.log) {
      EXPECT_GE(op.index(), prev);
      prev = op.index() + 1;
      if (auto* a = std::get_if<AddOp>(&op)) {
        for (float d : a->delta) EXPECT_TRUE(d >= -0.1f && d <= 0.1f);
      }
      if (auto* c = std::get_if<ContrastOp>(&op)) {
        for (float f : c->factor) EXPECT_TRUE(f >= 0.4f && f <= 2.3f);
      }
      if (auto* g = std::get_if<GeometricOp>(&op)) {
        EXPECT_TRUE(g->scale >= 0.8 && g->scale <= 1.2);
        EXPECT_TRUE(std::abs(g->tx) <= 0.15 && std::abs(g->ty) <= 0.15);
      }
      if (auto* b = std::get_if<BlurOp>(&op)) {
        EXPECT_TRUE(b->sigma >= 0 && b->sigma <= 1.2);
      }
    }
    // op_probability 1 fires every op except possibly a too-small occlusion
    EXPECT_GE(r.log.size(), 6u);
  }
}

TEST(Augment, ChannelOverridesAreIndependent) {
  // With only channel draws enabled, some logs hold mixed identity values.
  AugmentConfig cfg;
  cfg.op_probability = 0;
  cfg.channel_probability = 0.5;
  const Planes img = test_card();
  Rng rng(5);
  int mixed = 0;
  for (int t = 0; t < 200; ++t) {
    for (const auto& op : augment(img, cfg, rng).log) {
      if (auto* a = std::get_if<AddOp>(&op)) mixed += std::count(a->delta.begin(), a->delta.end(), 0.0f) > 0;
    }
  }
  EXPECT_GT(mixed, 20);
}

TEST(Occlusion, RespectsBudgetAndStaysInside) {
  const Planes img = object_card();
  const Mask mask = object_mask(img);
  ASSERT_EQ(mask.count(), 600);
  Rng rng(6);
  for (int t = 0; t < 500; ++t) {
    const double f = rng.uniform(0, 0.5);
    const auto occ = occlude(img, mask, f, rng);
    ASSERT_LE(occ.rects.size(), 1u);
    long covered = 0;
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
      covered += mask.data()[i] && occ.image[0].data()[i] == 0.0f;
    }
    EXPECT_LE(covered, f * 600 + 1e-9);
    for (const auto& r : occ.rects) {
      EXPECT_GE(r.x, 0);
      EXPECT_GE(r.y, 0);
      EXPECT_LE(r.x + r.w, 64);
      EXPECT_LE(r.y + r.h, 48);
    }
  }
  EXPECT_TRUE(occlude(img, mask, 0.0, rng).rects.empty());
  EXPECT_TRUE(occlude(img, Mask::Zero(48, 64), 0.2, rng).rects.empty());
  EXPECT_THROW(occlude(img, mask, 1.5, rng), Error);
  EXPECT_THROW(occlude(img, mask, -0.1, rng), Error);
}

TEST(Occlusion, UsesMostOfTheBudget) {
  const Planes img = object_card();
  const Mask mask = object_mask(img);
  Rng rng(7);
  double sum = 0;
  const int n = 300;
  for (int t = 0; t < n; ++t) {
    const auto occ = occlude(img, mask, 0.2, rng);
    long covered = 0;
    for (Eigen::Index i = 0; i < mask.size(); ++i) covered += mask.data()[i] && occ.image[0].data()[i] == 0.0f;
    sum += covered / 120.0;
  }
  EXPECT_GT(sum / n, 0.5);
}

TEST(Background, CompositeAndNoise) {
  const Planes img = object_card();
  Rng rng(8);
  const Planes bg = noise_background(48, 64, 3, 8, rng);
  EXPECT_TRUE(in_unit_range(bg));
  EXPECT_EQ(bg[1](0, 0), bg[1](7, 7));
  const Mask m = object_mask(img);
  const Planes out = composite_background(img, m, bg);
  EXPECT_EQ(out[2](15, 20), 0.7f);
  EXPECT_EQ(out[2](0, 0), bg[2](0, 0));
  EXPECT_THROW(noise_background(0, 4, 1, 1, rng), Error);
  EXPECT_THROW(composite_background(img, m, Planes(2, ImageF::Zero(48, 64))), Error);
}

TEST(AugmentConfig, Validation) {
  AugmentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.op_probability = 1.2;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.contrast_range = {2, 1};
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.scale_range = {0, 1};
  EXPECT_THROW(c.validate(), Error);
}

TEST(Augment, GoldenImage) {
  const Planes img = test_card();
  Rng rng(2024);
  Planes out = augment(img, always(), rng).image;
  out = augment(out, AugmentConfig{}, rng).image;
  const auto path = std::filesystem::path(AAE_GOLDEN_DIR) / "augment_golden.png";
  if (std::getenv("AAE_UPDATE_GOLDEN")) write_png8(path, out);
  ASSERT_TRUE(std::filesystem::exists(path));
  const Planes golden = read_png8(path);
  ASSERT_EQ(golden.size(), out.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    EXPECT_LE((golden[c] - out[c]).abs().maxCoeff(), 0.5f / 255 + 1e-6f) << "channel " << c;
  }
}
