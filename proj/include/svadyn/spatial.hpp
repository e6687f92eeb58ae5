#pragma once

// 6-D spatial vector algebra: motion/force vectors in Plücker coordinates
// (angular components first), coordinate transforms, spatial inertia,
// momentum and kinetic energy of a single rigid body.

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace svadyn {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

namespace tol {
inline constexpr double orthonormality = 1e-12;
inline constexpr double symmetry = 1e-9;
}  // namespace tol

/// skew(a) * b == a x b
inline Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return s;
}

/// Spatial velocity: [wx, wy, wz, vx, vy, vz]^T.
struct SpatialMotion {
  Vec3 angular = Vec3::Zero();  // [rad/s]
  Vec3 linear = Vec3::Zero();   // [m/s]

  SpatialMotion() = default;
  SpatialMotion(const Vec3& w, const Vec3& v) : angular(w), linear(v) {}
  explicit SpatialMotion(const Vec6& v) : angular(v.head<3>()), linear(v.tail<3>()) {}

  Vec6 vec() const {
    Vec6 v;
    v << angular, linear;
    return v;
  }
};

/// Spatial force: [tx, ty, tz, fx, fy, fz]^T (moment first).
struct SpatialForce {
  Vec3 moment = Vec3::Zero();  // [N*m]
  Vec3 force = Vec3::Zero();   // [N]

  SpatialForce() = default;
  SpatialForce(const Vec3& m, const Vec3& f) : moment(m), force(f) {}
  explicit SpatialForce(const Vec6& v) : moment(v.head<3>()), force(v.tail<3>()) {}

  Vec6 vec() const {
    Vec6 v;
    v << moment, force;
    return v;
  }
};

/// Coordinate transform for spatial vectors. Maps quantities expressed at
/// frame O into a frame P whose origin sits at `translation` (in O
/// coordinates); the translation to P is applied first, then `rotation`.
struct PluckerTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static PluckerTransform identity() { return {}; }

  bool is_valid(double eps = tol::orthonormality) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    if (((rotation * rotation.transpose()) - Mat3::Identity()).cwiseAbs().maxCoeff() > eps)
      return false;
    return std::abs(rotation.determinant() - 1.0) <= eps;
  }

  void validate(double eps = tol::orthonormality) const {
    if (!is_valid(eps)) throw std::invalid_argument("PluckerTransform: rotation is not a proper orthonormal matrix");
  }

  /// 6x6 matrix acting on motion vectors: [nu, 0; -nu*rx, nu].
  Mat6 motion_matrix() const {
    Mat6 m = Mat6::Zero();
    m.topLeftCorner<3, 3>() = rotation;
    m.bottomLeftCorner<3, 3>() = -rotation * skew(translation);
    m.bottomRightCorner<3, 3>() = rotation;
    return m;
  }

  /// 6x6 matrix acting on force vectors: [nu, -nu*rx; 0, nu].
  Mat6 force_matrix() const {
    Mat6 m = Mat6::Zero();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 3>() = -rotation * skew(translation);
    m.bottomRightCorner<3, 3>() = rotation;
    return m;
  }
};

/// v_P = [nu*w ; nu*(v - r x w)]
inline SpatialMotion motion_transform(const PluckerTransform& X, const SpatialMotion& v) {
  return {X.rotation * v.angular,
          X.rotation * (v.linear - X.translation.cross(v.angular))};
}

/// f_P = [nu*(tau - r x f) ; nu*f]
inline SpatialForce force_transform(const PluckerTransform& X, const SpatialForce& f) {
  return {X.rotation * (f.moment - X.translation.cross(f.force)),
          X.rotation * f.force};
}

/// Raw 6-vector variants used by the kinematics inner loops.
inline Vec6 motion_transform(const PluckerTransform& X, const Vec6& v) {
  Vec6 out;
  out.head<3>() = X.rotation * v.head<3>();
  out.tail<3>() = X.rotation * (v.tail<3>() - X.translation.cross(Vec3(v.head<3>())));
  return out;
}

/// Applies the transpose of the motion matrix: M^T (x;y) = (nu^T x + r x (nu^T y); nu^T y).
inline Vec6 motion_transform_transpose(const PluckerTransform& X, const Vec6& v) {
  Vec6 out;
  const Vec3 ry = X.rotation.transpose() * v.tail<3>();
  out.head<3>() = X.rotation.transpose() * v.head<3>() + X.translation.cross(ry);
  out.tail<3>() = ry;
  return out;
}

/// compose(X1, X2) applies X2 first, then X1.
inline PluckerTransform compose(const PluckerTransform& X1, const PluckerTransform& X2) {
  return {X1.rotation * X2.rotation,
          X2.rotation.transpose() * X1.translation + X2.translation};
}

inline PluckerTransform inverse(const PluckerTransform& X) {
  return {X.rotation.transpose(), -(X.rotation * X.translation)};
}

/// 6x6 spatial inertia about a frame origin O. Blocks:
///   [ I_C + m cx cx^T , m cx ;
///     m cx^T          , m 1  ]
struct SpatialInertia {
  Mat6 matrix = Mat6::Zero();

  SpatialInertia() = default;
  explicit SpatialInertia(const Mat6& m) : matrix(m) {}
};

inline SpatialInertia spatial_inertia_from_params(double mass, const Vec3& com,
                                                  const Mat3& inertia_com,
                                                  double sym_eps = tol::symmetry) {
  if (mass < 0.0) throw std::invalid_argument("spatial_inertia_from_params: mass < 0");
  if ((inertia_com - inertia_com.transpose()).cwiseAbs().maxCoeff() > sym_eps)
    throw std::invalid_argument("spatial_inertia_from_params: inertia matrix is not symmetric");
  const Mat3 cx = skew(com);
  Mat6 m;
  m.topLeftCorner<3, 3>() = inertia_com + mass * cx * cx.transpose();
  m.topRightCorner<3, 3>() = mass * cx;
  m.bottomLeftCorner<3, 3>() = mass * cx.transpose();
  m.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
  return SpatialInertia{m};
}

/// h = I * v
inline SpatialForce momentum(const SpatialInertia& inertia, const SpatialMotion& v) {
  return SpatialForce{Vec6(inertia.matrix * v.vec())};
}

/// T = 1/2 v^T I v
inline double kinetic_energy(const SpatialInertia& inertia, const SpatialMotion& v) {
  const Vec6 vv = v.vec();
  return 0.5 * vv.dot(inertia.matrix * vv);
}

/// Change-of-coordinates for spatial inertia: momenta transform like forces,
/// so I' = F I F^T with F the force matrix of X.
inline SpatialInertia transform_inertia(const PluckerTransform& X, const SpatialInertia& inertia) {
  const Mat6 f = X.force_matrix();
  return SpatialInertia{f * inertia.matrix * f.transpose()};
}

}  // namespace svadyn
