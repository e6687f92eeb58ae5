#pragma once

// Shared kinematic quantities for a chain at a given configuration: per-joint
// transforms, all inter-frame transforms, body Jacobian columns, world-frame
// poses, and the stable central-difference primitives used by both the
// Coriolis matrix and the regressor. Keeping one implementation of these
// pieces is what makes Y*Theta and the assembled equations of motion agree to
// round-off rather than to finite-difference noise.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "svadyn/model.hpp"
#include "svadyn/spatial.hpp"

namespace svadyn {

struct ChainKinematics {
  Eigen::Index n = 0;
  std::vector<PluckerTransform> joint_X;  // X[i]: frame i <- parent frame
  std::vector<PluckerTransform> pair_X;   // triangular: X_{i <- l}, l <= i
  std::vector<Vec6> jac_cols;             // triangular: body Jacobian column s_{l,i}
  std::vector<Mat3> world_R;              // link frame -> world rotation
  std::vector<Vec3> world_p;              // joint origin in world [m]
  std::vector<Vec3> world_axis;           // joint axis in world

  static std::size_t tri(Eigen::Index i, Eigen::Index l) {
    return static_cast<std::size_t>(i) * (static_cast<std::size_t>(i) + 1) / 2 +
           static_cast<std::size_t>(l);
  }

  /// Transform taking frame-l coordinates into frame-i coordinates (l <= i).
  const PluckerTransform& from_frame(Eigen::Index i, Eigen::Index l) const {
    return pair_X[tri(i, l)];
  }

  /// Column l of the body Jacobian of link i (l <= i).
  const Vec6& jac_col(Eigen::Index i, Eigen::Index l) const { return jac_cols[tri(i, l)]; }

  static ChainKinematics compute(const ChainModel& model, const VecX& q) {
    check_model(model);
    const auto n = static_cast<Eigen::Index>(model.dof());
    if (q.size() != n) throw std::invalid_argument("ChainKinematics: q length mismatch");

    ChainKinematics kin;
    kin.n = n;
    kin.joint_X.reserve(static_cast<std::size_t>(n));
    kin.pair_X.resize(tri(n - 1, n - 1) + 1);
    kin.jac_cols.resize(kin.pair_X.size());
    kin.world_R.resize(static_cast<std::size_t>(n));
    kin.world_p.resize(static_cast<std::size_t>(n));
    kin.world_axis.resize(static_cast<std::size_t>(n));

    Mat3 parent_R = Mat3::Identity();
    Vec3 parent_p = Vec3::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& spec = model.links[static_cast<std::size_t>(i)];
      kin.joint_X.push_back(joint_transform(spec, q[i]));

      kin.world_axis[static_cast<std::size_t>(i)] = parent_R * spec.joint_axis;
      kin.world_p[static_cast<std::size_t>(i)] = parent_p + parent_R * spec.offset;
      kin.world_R[static_cast<std::size_t>(i)] =
          parent_R * Eigen::AngleAxisd(q[i], spec.joint_axis).toRotationMatrix();
      parent_R = kin.world_R[static_cast<std::size_t>(i)];
      parent_p = kin.world_p[static_cast<std::size_t>(i)];

      // Inter-frame transforms and Jacobian columns, built incrementally.
      kin.pair_X[tri(i, i)] = PluckerTransform::identity();
      Vec6 own = Vec6::Zero();
      own.head<3>() = spec.joint_axis;
      kin.jac_cols[tri(i, i)] = own;
      for (Eigen::Index l = 0; l < i; ++l) {
        kin.pair_X[tri(i, l)] = compose(kin.joint_X.back(), kin.pair_X[tri(i - 1, l)]);
        kin.jac_cols[tri(i, l)] = motion_transform(kin.joint_X.back(), kin.jac_cols[tri(i - 1, l)]);
      }
    }
    return kin;
  }

  /// Per-link J_i * rates via the serial recursion (body coordinates).
  std::vector<Vec6> propagate(const VecX& rates) const {
    if (rates.size() != n) throw std::invalid_argument("ChainKinematics: rates length mismatch");
    std::vector<Vec6> out(static_cast<std::size_t>(n));
    Vec6 prev = Vec6::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
      Vec6 v = motion_transform(joint_X[static_cast<std::size_t>(i)], prev);
      v += jac_cols[tri(i, i)] * rates[i];
      out[static_cast<std::size_t>(i)] = v;
      prev = v;
    }
    return out;
  }

  /// Dense 6 x n body Jacobian of link i; columns beyond i are zero.
  MatX jacobian(Eigen::Index i) const {
    if (i < 0 || i >= n) throw std::out_of_range("ChainKinematics: link index out of range");
    MatX j = MatX::Zero(6, n);
    for (Eigen::Index l = 0; l <= i; ++l) j.col(l) = jac_col(i, l);
    return j;
  }
};

// ---------------------------------------------------------------------------
// Central-difference support. The finite-difference step enters only through
// R(axis, +-h) - 1, which is formed from sin(h) and 2 sin^2(h/2) so that the
// perturbed-minus-nominal quantities carry no catastrophic cancellation.

inline constexpr double kDefaultFdStep = 1e-6;  // [rad]

/// R(a, delta) - 1 = sin(delta) ax + 2 sin^2(delta/2) ax^2
inline Mat3 rotation_increment(const Vec3& axis, double delta) {
  const Mat3 ax = skew(axis);
  const double s = std::sin(delta);
  const double v = 2.0 * std::sin(0.5 * delta) * std::sin(0.5 * delta);
  return s * ax + v * (ax * ax);
}

/// nu(q +- h) - nu(q) for every joint, with nu the parent->link rotation.
struct FdJointDeltas {
  double h = kDefaultFdStep;
  std::vector<Mat3> dnu_plus;
  std::vector<Mat3> dnu_minus;

  static FdJointDeltas compute(const ChainModel& model, const ChainKinematics& kin, double h) {
    FdJointDeltas d;
    d.h = h;
    d.dnu_plus.resize(static_cast<std::size_t>(kin.n));
    d.dnu_minus.resize(static_cast<std::size_t>(kin.n));
    for (Eigen::Index k = 0; k < kin.n; ++k) {
      const auto& spec = model.links[static_cast<std::size_t>(k)];
      const Mat3& nu = kin.joint_X[static_cast<std::size_t>(k)].rotation;
      // nu(q+h) = R(a,-h) nu  =>  dnu = (R(a,-h) - 1) nu
      d.dnu_plus[static_cast<std::size_t>(k)] = rotation_increment(spec.joint_axis, -h) * nu;
      d.dnu_minus[static_cast<std::size_t>(k)] = rotation_increment(spec.joint_axis, h) * nu;
    }
    return d;
  }
};

/// Applies the motion-matrix increment [dnu, 0; -dnu rx, dnu] to a 6-vector.
inline Vec6 delta_motion_apply(const Mat3& dnu, const Vec3& r, const Vec6& v) {
  Vec6 out;
  out.head<3>() = dnu * v.head<3>();
  out.tail<3>() = dnu * (v.tail<3>() - r.cross(Vec3(v.head<3>())));
  return out;
}

/// Transpose of the increment: (dnu^T x + r x (dnu^T y); dnu^T y).
inline Vec6 delta_motion_apply_transpose(const Mat3& dnu, const Vec3& r, const Vec6& v) {
  Vec6 out;
  const Vec3 ry = dnu.transpose() * v.tail<3>();
  out.head<3>() = dnu.transpose() * v.head<3>() + r.cross(ry);
  out.tail<3>() = ry;
  return out;
}

// ---------------------------------------------------------------------------
// Gravity geometry. Potential energy is V = sum_i g * (theta_i10 * h_Oi +
// kappa_i . (m c)_i) with h_Oi the height of joint origin i along the
// vertical axis and kappa_i = vert^T R_i. Both gradients reduce to the
// world-frame triple products below.

/// d h_Oi / d q_l  =  (p_i - p_l) . (vert x w_l),  l <= i
inline double gravity_dh(const ChainKinematics& kin, const Vec3& vert, Eigen::Index i,
                         Eigen::Index l) {
  const Vec3 cx = vert.cross(kin.world_axis[static_cast<std::size_t>(l)]);
  return (kin.world_p[static_cast<std::size_t>(i)] - kin.world_p[static_cast<std::size_t>(l)])
      .dot(cx);
}

/// d kappa_i / d q_l as a link-frame 3-vector: R_i^T (vert x w_l),  l <= i
inline Vec3 gravity_dkappa(const ChainKinematics& kin, const Vec3& vert, Eigen::Index i,
                           Eigen::Index l) {
  const Vec3 cx = vert.cross(kin.world_axis[static_cast<std::size_t>(l)]);
  return kin.world_R[static_cast<std::size_t>(i)].transpose() * cx;
}

}  // namespace svadyn
