#include <gtest/gtest.h>

#include "aae/pipeline.hpp"
#include "aae/render.hpp"
#include "support.hpp"

using namespace aae;

namespace {

const Intrinsicsd kSyn(572.4, 573.6, 64, 64, 128, 128);
const Intrinsicsd kReal(572.4, 573.6, 325.3, 242.0, 640, 480);

// Naive crop: for each output pixel find the source pixel whose cell contains
// the sample point, computed directly from the window corners.
ImageF crop_oracle(const ImageF& img, const BBox& b, double padding, int n) {
  const double side = std::max(b.w, b.h) * padding;
  const double x0 = b.x + b.w / 2 - side / 2, y0 = b.y + b.h / 2 - side / 2;
  ImageF out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double sx = x0 + side * (j + 0.5) / n, sy = y0 + side * (i + 0.5) / n;
      const long c = std::lround(std::floor(sx)), r = std::lround(std::floor(sy));
      out(i, j) = (r >= 0 && r < img.rows() && c >= 0 && c < img.cols()) ? img(r, c) : 0.0f;
    }
  }
  return out;
}

ImageF ramp(int h, int w) {
  ImageF img(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) img(r, c) = static_cast<float>(r * w + c + 1);
  }
  return img;
}

// Homogeneous 4x4 route: back-project both centres as camera-frame
// points and add their difference to the synthetic object position.
Vec3d translation_oracle(const DistanceContext& ctx, double tz, const Vec2d& real_c, const Vec2d& syn_c) {
  Eigen::Matrix4d kr = Eigen::Matrix4d::Identity(), ks = Eigen::Matrix4d::Identity();
  kr.topLeftCorner<3, 3>() = ctx.k_real.matrix();
  ks.topLeftCorner<3, 3>() = ctx.k_syn.matrix();
  const Eigen::Vector4d pr = kr.inverse() * Eigen::Vector4d(real_c.x() * tz, real_c.y() * tz, tz, 1);
  const Eigen::Vector4d ps =
      ks.inverse() * Eigen::Vector4d(syn_c.x() * ctx.t_syn_z, syn_c.y() * ctx.t_syn_z, ctx.t_syn_z, 1);
  return Vec3d(0, 0, ctx.t_syn_z) + (pr - ps).head<3>();
}

}  // namespace

TEST(Crop, IdentityCrop) {
  const ImageF img = ramp(64, 64);
  const ImageF out = square_crop(img, BBox{0, 0, 64, 64}, 1.0, 64);
  EXPECT_TRUE((out == img).all());
}

TEST(Crop, WindowGeometry) {
  const BBox w = crop_window(BBox{10, 10, 40, 20}, 1.2);
  EXPECT_DOUBLE_EQ(w.w, 48.0);
  EXPECT_DOUBLE_EQ(w.h, 48.0);
  EXPECT_DOUBLE_EQ(w.center_x(), 30.0);
  EXPECT_DOUBLE_EQ(w.center_y(), 20.0);
}

TEST(Crop, MatchesNaiveLoopIncludingBorders) {
  const ImageF img = ramp(48, 64);
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const BBox b{rng.uniform(-30, 60), rng.uniform(-30, 40), rng.uniform(1, 50), rng.uniform(1, 50)};
    const double pad = rng.uniform(1.0, 1.5);
    const int n = 1 + static_cast<int>(rng.below(40));
    EXPECT_TRUE((square_crop(img, b, pad, n) == crop_oracle(img, b, pad, n)).all());
  }
  const ImageF corner = square_crop(img, BBox{-10, -10, 20, 20}, 1.2, 24);
  EXPECT_EQ(corner(0, 0), 0.0f);
  EXPECT_GT(corner(23, 23), 0.0f);
}

TEST(Crop, InvalidArguments) {
  const ImageF img = ramp(8, 8);
  EXPECT_THROW(square_crop(img, BBox{0, 0, 0, 4}, 1.2, 8), Error);
  EXPECT_THROW(square_crop(img, BBox{0, 0, 4, 4}, 0.9, 8), Error);
  EXPECT_THROW(square_crop(img, BBox{0, 0, 4, 4}, 1.2, 0), Error);
}

TEST(Distance, KnownValues) {
  const DistanceContext same{700, kReal, kReal};
  EXPECT_DOUBLE_EQ(estimate_distance(same, 80, 80), 700.0);
  EXPECT_DOUBLE_EQ(estimate_distance(same, 40, 80), 1400.0);
  EXPECT_THROW(estimate_distance(same, 0, 80), Error);
  EXPECT_THROW(estimate_distance(same, 80, 0), Error);
}

TEST(Distance, HomogeneityAndFocalRatio) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const double f = rng.uniform(300, 900);
    const Intrinsicsd ks(f, f * rng.uniform(0.9, 1.1), 64, 64, 128, 128);
    const DistanceContext ctx{rng.uniform(300, 1000), ks, kReal};
    const double real = rng.uniform(10, 200), syn = rng.uniform(10, 200), s = rng.uniform(0.2, 5);
    const double base = estimate_distance(ctx, real, syn);
    EXPECT_NEAR(estimate_distance(ctx, real * s, syn), base / s, 1e-9 * base);
    DistanceContext scaled = ctx;
    scaled.t_syn_z *= s;
    EXPECT_NEAR(estimate_distance(scaled, real, syn), base * s, 1e-9 * base * s);
    DistanceContext doubled = ctx;
    doubled.k_real = Intrinsicsd(2 * kReal.fx(), 2 * kReal.fy(), kReal.cx(), kReal.cy(), 640, 480);
    EXPECT_NEAR(estimate_distance(doubled, real, syn), 2 * base, 1e-9 * base);
  }
}

TEST(Translation, KnownValues) {
  const Intrinsicsd k(500, 500, 320, 240, 640, 480);
  const DistanceContext ctx{700, k, k};
  EXPECT_TRUE(estimate_translation(ctx, 700, {320, 240}, {320, 240}).isApprox(Vec3d(0, 0, 700)));
  EXPECT_TRUE(estimate_translation(ctx, 1000, {420, 240}, {320, 240}).isApprox(Vec3d(200, 0, 1000)));
  EXPECT_THROW(estimate_translation(ctx, 0, {320, 240}, {320, 240}), Error);
}

TEST(Translation, MatchesHomogeneousOracle) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const DistanceContext ctx{rng.uniform(400, 900), kSyn, kReal};
    const double tz = rng.uniform(300, 2000);
    const Vec2d rc(rng.uniform(0, 640), rng.uniform(0, 480)), sc(rng.uniform(40, 90), rng.uniform(40, 90));
    const Vec3d t = estimate_translation(ctx, tz, rc, sc);
    EXPECT_LT((t - translation_oracle(ctx, tz, rc, sc)).norm(), 1e-6);
    EXPECT_NEAR(t.z(), tz, 1e-9);
  }
}

TEST(Correction, AnglesAndIdentity) {
  const auto a = perspective_angles(Vec3d(0, 500, 500));
  EXPECT_NEAR(a.about_x, -std::numbers::pi / 4, 1e-12);
  EXPECT_NEAR(a.about_y, 0.0, 1e-12);
  Rng rng(4);
  const auto r = aae::testing::random_rotation(rng);
  EXPECT_EQ(perspective_correction(r, Vec3d(0, 0, 800)), r);
  EXPECT_THROW(perspective_correction(r, Vec3d(10, 0, 0)), Error);
  for (int i = 0; i < 100; ++i) {
    const Vec3d t(rng.uniform(-400, 400), rng.uniform(-400, 400), rng.uniform(200, 2000));
    EXPECT_TRUE(Rotation3d::is_rotation(perspective_correction(r, t).matrix()));
  }
}

TEST(Correction, RotatesOpticalAxisTowardTranslation) {
  // The composed correction points the camera z axis approximately at t.
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec3d t(rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(600, 1200));
    const Vec3d z = perspective_correction(Rotation3d(), t) * Vec3d::UnitZ();
    EXPECT_GT(z.dot(t.normalized()), std::cos(radians(1.0)));
  }
}

TEST(Encoder, DepthCropIsDistanceInvariant) {
  ImageF crop = ImageF::Zero(4, 4);
  crop(1, 1) = 700;
  crop(1, 2) = 750;
  ImageF far = crop;
  far(1, 1) = 900;
  far(1, 2) = 950;
  EXPECT_TRUE(DepthCropEncoder{}(crop).isApprox(DepthCropEncoder{}(far)));
  EXPECT_FLOAT_EQ(DepthCropEncoder{}(crop)(5), 1.0f);
  EXPECT_FLOAT_EQ(DepthCropEncoder{}(crop)(6), 0.75f);
  EXPECT_EQ(DepthCropEncoder{}(crop)(0), 0.0f);
}

TEST(EstimatePose, SelfMatchAndDeterminism) {
  const auto mesh = merge({make_box(60, 40, 30), make_box(20, 20, 40)}, {Vec3d::Zero(), Vec3d(20, 10, 25)});
  const auto views = generate_codebook_views(mesh, subdivide_icosahedron(1), 12, kSyn, 700);
  std::vector<CodebookView> cv;
  for (const auto& v : views) cv.push_back({v.depth, v.rotation, *v.bbox});
  const DepthCropEncoder enc;
  const auto cb = build_codebook(crop_then_encode(enc, 1.2, 16), cv);

  const DistanceContext ctx{700, kSyn, kSyn};
  for (std::size_t i : {0u, 17u, 101u, 400u}) {
    const Detection det{*views[i].bbox, "obj", 1.0};
    const auto est = estimate_pose(views[i].depth, det, enc, cb, ctx, {1.2, 16, 3, true});
    EXPECT_EQ(est.neighbors.size(), 3u);
    EXPECT_NEAR(est.similarity, 1.0, 1e-6);
    EXPECT_LT(geodesic_distance(est.centered_rotation, views[i].rotation), 1e-5);
    // the stored box diagonal is f32
    EXPECT_NEAR(est.pose.translation.z(), 700.0, 1e-3);
    const auto again = estimate_pose(views[i].depth, det, enc, cb, ctx, {1.2, 16, 3, true});
    EXPECT_EQ(again.pose.rotation, est.pose.rotation);
    EXPECT_EQ(again.pose.translation, est.pose.translation);
  }
}

TEST(EstimatePose, ClosedLoopWithinCodebookSpacing) {
  const auto mesh = merge({make_box(60, 40, 30), make_box(20, 20, 40)}, {Vec3d::Zero(), Vec3d(20, 10, 25)});
  const auto sphere = subdivide_icosahedron(2);
  std::vector<CodebookView> cv;
  for_each_codebook_view(mesh, sphere, 36, kSyn, 700, [&](std::size_t, const RenderedView& v) {
    cv.push_back({v.depth, v.rotation, *v.bbox});
  });
  const DepthCropEncoder enc;
  const auto cb = build_codebook(crop_then_encode(enc, 1.2, 16), cv);
  const DistanceContext ctx{700, kSyn, kReal};
  Rng rng(6);
  int within = 0;
  const int trials = 10;
  for (int t = 0; t < trials; ++t) {
    const std::size_t i = rng.below(static_cast<std::uint32_t>(cb.size()));
    const Posed gt(cb.entry(i).orientation(), Vec3d(0, 0, 900));
    const DepthImage scene = render_depth(mesh, gt, kReal);
    const Detection det{*silhouette_bbox(scene), "obj", 1.0};
    const auto est = estimate_pose(scene, det, enc, cb, ctx);
    // level-2 viewpoints are ~15 deg apart; in-plane steps are 10 deg
    within += degrees(geodesic_distance(est.pose.rotation, gt.rotation)) <= 25.0;
    EXPECT_NEAR(est.pose.translation.z(), 900.0, 900 * 0.05);
  }
  EXPECT_GE(within, trials - 1);
}

TEST(EstimatePose, EmptyCodebookRejected) {
  const ImageF img = ImageF::Ones(8, 8);
  EXPECT_THROW(estimate_pose(img, Detection{BBox{0, 0, 4, 4}, "x", 1}, flatten_encoder, Codebook(),
                             DistanceContext{700, kSyn, kSyn}),
               Error);
}
