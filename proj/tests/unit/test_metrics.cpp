#include <gtest/gtest.h>

#include "aae/metrics.hpp"
#include "aae/render.hpp"
#include "support.hpp"

using namespace aae;

namespace {

// Per-pixel loop straight from the definition.
VsdResult vsd_oracle(const DepthImage& est, const DepthImage& gt, const DepthImage& scene,
                     double tau, double delta) {
  long uni = 0, match = 0, vis_gt = 0, sil_gt = 0;
  for (Eigen::Index r = 0; r < scene.rows(); ++r) {
    for (Eigen::Index c = 0; c < scene.cols(); ++c) {
      const double s = scene(r, c), e = est(r, c), g = gt(r, c);
      const bool ve = e > 0 && (s <= 0 || e <= s + delta);
      const bool vg = g > 0 && (s <= 0 || g <= s + delta);
      sil_gt += g > 0;
      vis_gt += vg;
      uni += ve || vg;
      match += ve && vg && std::abs(e - g) < tau;
    }
  }
  VsdResult out;
  out.visibility = static_cast<double>(vis_gt) / static_cast<double>(sil_gt);
  out.error = uni == 0 ? 1.0 : 1.0 - static_cast<double>(match) / static_cast<double>(uni);
  return out;
}

DepthImage random_depth(int h, int w, double fill, Rng& rng) {
  DepthImage d(h, w);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    d.data()[i] = rng.bernoulli(fill) ? static_cast<float>(rng.uniform(500, 600)) : 0.0f;
  }
  return d;
}

EvalRecord record(std::optional<double> err, double visibility = 1.0) {
  EvalRecord r;
  r.err_vsd = err;
  r.visibility = visibility;
  return r;
}

const Intrinsicsd kCam(500, 500, 80, 60, 160, 120);

}  // namespace

TEST(Vsd, MatchesPerPixelOracle) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const DepthImage gt = random_depth(20, 30, 0.6, rng);
    if ((gt > 0).count() == 0) continue;
    const DepthImage est = random_depth(20, 30, 0.6, rng);
    const DepthImage scene = random_depth(20, 30, 0.7, rng);
    const VsdParams p{rng.uniform(5, 40), rng.uniform(0, 30)};
    const auto got = vsd_from_renders(est, gt, scene, p);
    const auto want = vsd_oracle(est, gt, scene, p.tau, p.delta);
    EXPECT_DOUBLE_EQ(got.error, want.error);
    EXPECT_DOUBLE_EQ(got.visibility, want.visibility);
    EXPECT_GE(got.error, 0.0);
    EXPECT_LE(got.error, 1.0);
  }
}

TEST(Vsd, IdenticalPoseIsZeroAndDisjointIsOne) {
  const auto mesh = make_box(60, 40, 30);
  const Posed gt(Rotation3d::AboutY(0.3), Vec3d(0, 0, 600));
  const DepthImage scene = render_depth(mesh, gt, kCam);
  EXPECT_EQ(vsd_error(mesh, gt, gt, scene, kCam).error, 0.0);
  EXPECT_DOUBLE_EQ(vsd_error(mesh, gt, gt, scene, kCam).visibility, 1.0);
  // far off to the side: no overlap at all
  const Posed away(gt.rotation, Vec3d(120, 0, 600));
  const DepthImage empty = DepthImage::Zero(kCam.height(), kCam.width());
  EXPECT_EQ(vsd_error(mesh, away, gt, empty, kCam).error, 1.0);
}

TEST(Vsd, DepthShiftBelowTauIsCorrect) {
  const auto mesh = make_box(60, 40, 30);
  const Posed gt(Rotation3d(), Vec3d(0, 0, 600));
  const DepthImage d = render_depth(mesh, gt, kCam);
  DepthImage shifted = d;
  for (Eigen::Index i = 0; i < shifted.size(); ++i) {
    if (shifted.data()[i] > 0) shifted.data()[i] += 10;
  }
  const DepthImage empty = DepthImage::Zero(d.rows(), d.cols());
  EXPECT_EQ(vsd_from_renders(shifted, d, empty, {20, 15}).error, 0.0);
  EXPECT_EQ(vsd_from_renders(shifted, d, empty, {5, 15}).error, 1.0);
}

TEST(Vsd, ErrorsOnBadInput) {
  const DepthImage a = DepthImage::Constant(4, 4, 500), z = DepthImage::Zero(4, 4);
  EXPECT_THROW(vsd_from_renders(a, z, z, {}), Error);
  EXPECT_THROW(vsd_from_renders(a, a, DepthImage::Zero(3, 4), {}), Error);
  EXPECT_THROW(vsd_from_renders(a, a, z, {0, 15}), Error);
  EXPECT_THROW(vsd_from_renders(a, a, z, {20, 15, 1.5}), Error);
}

TEST(Add, KnownTranslation) {
  const auto mesh = make_box(10, 10, 10);
  const Posed gt(Rotation3d(), Vec3d(0, 0, 500));
  const Posed est(Rotation3d(), Vec3d(3, 4, 500));
  EXPECT_NEAR(add_error(mesh, est, gt), 5.0, 1e-12);
  EXPECT_NEAR(adi_error(mesh, gt, gt), 0.0, 1e-12);
  EXPECT_TRUE(add_correct(5.0, 51.0));
  EXPECT_FALSE(add_correct(5.2, 51.0));
  EXPECT_THROW(add_correct(1.0, 0.0), Error);
}

TEST(Adi, SymmetricPoseScoresZero) {
  // a box rotated by 180 deg about z is the same point set
  const auto mesh = make_box(60, 40, 30);
  const Posed gt(Rotation3d(), Vec3d(0, 0, 500));
  const Posed flipped(Rotation3d::AboutZ(std::numbers::pi), gt.translation);
  EXPECT_NEAR(adi_error(mesh, flipped, gt), 0.0, 1e-9);
  EXPECT_GT(add_error(mesh, flipped, gt), 10.0);
}

TEST(Adi, NeverExceedsAdd) {
  Rng rng(2);
  Eigen::Matrix3Xd pts(3, 300);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) pts.col(i) = aae::testing::random_unit(rng) * 50;
  for (int t = 0; t < 50; ++t) {
    const Posed gt(aae::testing::random_rotation(rng), Vec3d(0, 0, 600));
    const Posed est(aae::testing::random_rotation(rng), Vec3d(rng.normal(), rng.normal(), 600 + rng.normal()) * 1.0);
    EXPECT_LE(adi_error(pts, est, gt), add_error(pts, est, gt) + 1e-9);
  }
  EXPECT_THROW(add_error(Eigen::Matrix3Xd(3, 0), Posed(), Posed()), Error);
}

TEST(Recall, KnownValues) {
  const std::vector<EvalRecord> rs = {record(0.1), record(0.5), record(0.9)};
  EXPECT_DOUBLE_EQ(recall_at(rs, 0.3), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(auc_vsd(rs), 0.5);
  EXPECT_DOUBLE_EQ(recall_at({record(std::nullopt), record(0.0)}, 0.3), 0.5);
  EXPECT_THROW(recall_at({}, 0.3), Error);
  EXPECT_THROW(auc_vsd({}), Error);
}

TEST(Recall, MonotoneInThresholdAndAucMatchesIntegral) {
  Rng rng(3);
  std::vector<EvalRecord> rs;
  for (int i = 0; i < 200; ++i) rs.push_back(record(rng.uniform()));
  double prev = 0, riemann = 0;
  const int steps = 20000;
  for (int s = 0; s <= steps; ++s) {
    const double e = static_cast<double>(s) / steps;
    const double r = recall_at(rs, e);
    EXPECT_GE(r, prev);
    prev = r;
    if (s > 0) riemann += r / steps;
  }
  EXPECT_NEAR(auc_vsd(rs), riemann, 2e-3);
}

TEST(Recall, VisibilityFilter) {
  const std::vector<EvalRecord> rs = {record(0.1, 0.05), record(0.1, 0.1), record(0.2, 0.5)};
  const auto kept = filter_visible(rs, 0.1);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(*kept[0].err_vsd, 0.2);
}
