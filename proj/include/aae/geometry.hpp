#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <vector>

#include "aae/error.hpp"

namespace aae {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;

template <typename Scalar>
constexpr Scalar rotation_tolerance() {
  if constexpr (sizeof(Scalar) >= sizeof(double)) {
    return Scalar(1e-9);
  } else {
    return Scalar(1e-5);
  }
}

/// Proper rotation matrix. Every constructor either validates its input or
/// produces an orthonormal matrix by construction.
template <typename Scalar>
class Rotation3 {
 public:
  using Matrix = Mat3<Scalar>;
  using Vector = Vec3<Scalar>;

  Rotation3() : m_(Matrix::Identity()) {}

  static Rotation3 Identity() { return Rotation3(); }

  /// Throws kDegenerate when `m` is not orthonormal with det +1 within `tol`.
  static Rotation3 FromMatrix(const Matrix& m,
                              Scalar tol = rotation_tolerance<Scalar>()) {
    if (!m.allFinite() || !is_rotation(m, tol)) {
      throw Error(ErrorCode::kDegenerate, "matrix is not a proper rotation");
    }
    return Rotation3(m);
  }

  /// Nearest rotation in the Frobenius sense (SVD projection).
  static Rotation3 Orthonormalized(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix u = svd.matrixU();
    const Matrix& v = svd.matrixV();
    if ((u * v.transpose()).determinant() < Scalar(0)) u.col(2) *= Scalar(-1);
    return Rotation3(u * v.transpose());
  }

  static Rotation3 AboutAxis(const Vector& axis, Scalar angle) {
    return Rotation3(
        Eigen::AngleAxis<Scalar>(angle, axis.normalized()).toRotationMatrix());
  }
  static Rotation3 AboutX(Scalar a) { return AboutAxis(Vector::UnitX(), a); }
  static Rotation3 AboutY(Scalar a) { return AboutAxis(Vector::UnitY(), a); }
  static Rotation3 AboutZ(Scalar a) { return AboutAxis(Vector::UnitZ(), a); }

  /// Exponential map of a rotation vector.
  static Rotation3 Exp(const Vector& omega) {
    const Scalar angle = omega.norm();
    if (angle == Scalar(0)) return Rotation3();
    return AboutAxis(omega / angle, angle);
  }

  static bool is_rotation(const Matrix& m,
                          Scalar tol = rotation_tolerance<Scalar>()) {
    return (m.transpose() * m - Matrix::Identity()).cwiseAbs().maxCoeff() <=
               tol &&
           std::abs(m.determinant() - Scalar(1)) <= tol;
  }

  const Matrix& matrix() const { return m_; }
  Scalar operator()(int r, int c) const { return m_(r, c); }

  Rotation3 inverse() const { return Rotation3(m_.transpose()); }

  template <typename Other>
  Rotation3<Other> cast() const {
    return Rotation3<Other>::Orthonormalized(m_.template cast<Other>());
  }

  friend Rotation3 operator*(const Rotation3& a, const Rotation3& b) {
    return Rotation3(a.m_ * b.m_);
  }
  friend Vector operator*(const Rotation3& r, const Vector& v) {
    return r.m_ * v;
  }
  friend bool operator==(const Rotation3& a, const Rotation3& b) {
    return a.m_ == b.m_;
  }

 private:
  explicit Rotation3(const Matrix& m) : m_(m) {}
  Matrix m_;
};

/// Rigid object-to-camera transform; translation in millimetres.
template <typename Scalar>
struct Pose {
  Rotation3<Scalar> rotation;
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  Pose() = default;
  Pose(const Rotation3<Scalar>& r, const Vec3<Scalar>& t)
      : rotation(r), translation(t) {
    if (!t.allFinite()) {
      throw Error(ErrorCode::kDegenerate, "pose translation is not finite");
    }
  }

  Vec3<Scalar> operator*(const Vec3<Scalar>& x) const {
    return rotation * x + translation;
  }
  friend Pose operator*(const Pose& a, const Pose& b) {
    return Pose(a.rotation * b.rotation, a.rotation * b.translation + a.translation);
  }
  Pose inverse() const {
    const auto rt = rotation.inverse();
    return Pose(rt, -(rt * translation));
  }
  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> h = Eigen::Matrix<Scalar, 4, 4>::Identity();
    h.template topLeftCorner<3, 3>() = rotation.matrix();
    h.template topRightCorner<3, 1>() = translation;
    return h;
  }
};

/// Pinhole intrinsics. Pixel (col, row) covers [col, col+1) x [row, row+1);
/// its centre is at (col + 0.5, row + 0.5). +z looks into the scene, y points
/// down in the image.
template <typename Scalar>
class CameraIntrinsics {
 public:
  CameraIntrinsics() = default;
  CameraIntrinsics(Scalar fx, Scalar fy, Scalar cx, Scalar cy, int width,
                   int height)
      : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height) {
    if (!(fx > 0) || !(fy > 0) || !std::isfinite(fx) || !std::isfinite(fy)) {
      throw Error(ErrorCode::kIntrinsics, "focal lengths must be positive");
    }
    if (width <= 0 || height <= 0 || !(cx >= 0) || !(cx < width) ||
        !(cy >= 0) || !(cy < height)) {
      throw Error(ErrorCode::kIntrinsics,
                  "principal point must lie inside the image");
    }
  }

  Scalar fx() const { return fx_; }
  Scalar fy() const { return fy_; }
  Scalar cx() const { return cx_; }
  Scalar cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }

  /// Scalar focal length used for size ratios: geometric mean of fx and fy.
  Scalar focal() const { return std::sqrt(fx_ * fy_); }

  Mat3<Scalar> matrix() const {
    Mat3<Scalar> k;
    k << fx_, 0, cx_, 0, fy_, cy_, 0, 0, 1;
    return k;
  }
  Mat3<Scalar> inverse_matrix() const {
    Mat3<Scalar> k;
    k << 1 / fx_, 0, -cx_ / fx_, 0, 1 / fy_, -cy_ / fy_, 0, 0, 1;
    return k;
  }

  friend bool operator==(const CameraIntrinsics&,
                         const CameraIntrinsics&) = default;

 private:
  Scalar fx_ = 1, fy_ = 1, cx_ = 0, cy_ = 0;
  int width_ = 1, height_ = 1;
};

using Rotation3d = Rotation3<double>;
using Posed = Pose<double>;
using Intrinsicsd = CameraIntrinsics<double>;

template <typename Scalar>
Vec2<Scalar> project(const CameraIntrinsics<Scalar>& k, const Vec3<Scalar>& p) {
  if (!(p.z() > 0)) {
    throw Error(ErrorCode::kBehindCamera, "point is not in front of the camera");
  }
  return {k.fx() * p.x() / p.z() + k.cx(), k.fy() * p.y() / p.z() + k.cy()};
}

/// Inverse of project() at a known depth.
template <typename Scalar>
Vec3<Scalar> backproject(const CameraIntrinsics<Scalar>& k,
                         const Vec2<Scalar>& uv, Scalar z) {
  return {(uv.x() - k.cx()) * z / k.fx(), (uv.y() - k.cy()) * z / k.fy(), z};
}

/// Angle of the relative rotation a^T b, in [0, pi].
template <typename Scalar>
Scalar geodesic_distance(const Rotation3<Scalar>& a, const Rotation3<Scalar>& b) {
  const Mat3<Scalar> rel = a.matrix().transpose() * b.matrix();
  const Vec3<Scalar> axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0),
                          rel(1, 0) - rel(0, 1));
  // atan2 form of arccos((tr - 1) / 2); stays accurate near 0 and pi.
  return std::atan2(axis.norm() / 2, (rel.trace() - 1) / 2);
}

template <typename Scalar>
Scalar degrees(Scalar radians) {
  return radians * Scalar(180) / std::numbers::pi_v<Scalar>;
}
template <typename Scalar>
Scalar radians(Scalar degrees) {
  return degrees * std::numbers::pi_v<Scalar> / Scalar(180);
}

struct ViewSphere {
  int subdivision_level = 0;
  std::vector<Vec3d> viewpoints;
};

constexpr int kMaxSubdivisionLevel = 6;

/// Vertex count of a level-`level` refined icosahedron: 10 * 4^level + 2.
constexpr std::size_t icosphere_vertex_count(int level) {
  return 10 * (std::size_t{1} << (2 * level)) + 2;
}

/// Unit vertices of the icosahedron refined `level` times by edge-midpoint
/// splitting. Vertices of level n are a prefix of level n + 1.
ViewSphere subdivide_icosahedron(int level);

/// Object-to-camera rotation of a camera placed along `viewpoint`, looking at
/// the origin. Row 2 (camera z) is -viewpoint; row 1 (camera y) is the
/// projection of `up_hint` orthogonal to it. When `viewpoint` and `up_hint`
/// are parallel the hint is replaced by +x, or +z if +x is parallel too.
Rotation3d viewpoint_to_rotation(const Vec3d& viewpoint,
                                 const Vec3d& up_hint = Vec3d::UnitY());

/// Rotations about the camera z axis by 2*pi*k/n, k = 0..n-1.
std::vector<Rotation3d> inplane_rotations(int n);

}  // namespace aae
