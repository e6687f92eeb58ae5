#pragma once

// Fixed-base serial revolute chain: known geometry (joint axes, inter-joint
// offsets) plus the 10 unknown inertial parameters per link, and the exact
// correspondence between that 10-vector and the 6x6 spatial inertia tensor.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "svadyn/spatial.hpp"

namespace svadyn {

inline constexpr int kParamsPerLink = 10;

/// Known geometry of one link: revolute axis and origin of its joint frame,
/// both expressed in the parent joint frame. At zero joint angle the link
/// frame is the parent frame translated by `offset`.
struct LinkSpec {
  std::string name;
  Vec3 joint_axis = Vec3::UnitZ();
  Vec3 offset = Vec3::Zero();  // [m]
};

/// Per-link parameter 10-vector theta[0..9] laid out so the spatial inertia
/// about the joint frame reads
///   [ t1 t2 t3 |   0 -t4  t5 ]
///   [ t2 t6 t7 |  t4   0 -t8 ]
///   [ t3 t7 t9 | -t5  t8   0 ]
///   [  0  t4 -t5 | t10  0   0 ]
///   [ -t4  0  t8 |  0  t10  0 ]
///   [ t5 -t8  0 |  0   0  t10 ]
/// i.e. t1,t2,t3,t6,t7,t9 are the six entries of I_C + m cx cx^T, the first
/// moments are t4 = m*cz, t5 = m*cy, t8 = m*cx, and t10 is the mass.
struct LinkParams {
  Eigen::Matrix<double, kParamsPerLink, 1> theta =
      Eigen::Matrix<double, kParamsPerLink, 1>::Zero();

  double mass() const { return theta[9]; }
  /// First moment m*c in link coordinates.
  Vec3 first_moment() const { return {theta[7], theta[4], theta[3]}; }
};

/// Stacked parameter vector, link-major: theta of link 0, then link 1, ...
struct ThetaVector {
  VecX values;

  ThetaVector() = default;
  explicit ThetaVector(VecX v) : values(std::move(v)) {}

  Eigen::Index size() const { return values.size(); }
};

struct ChainModel {
  Vec3 base_gravity = Vec3(0, 0, -9.81);  // [m/s^2]
  Vec3 vertical_axis = Vec3::UnitZ();     // direction used for potential height
  std::vector<LinkSpec> links;
  std::vector<LinkParams> params;

  std::size_t dof() const { return links.size(); }
  double gravity_magnitude() const { return base_gravity.norm(); }
};

inline SpatialInertia params_to_tensor(const LinkParams& p) {
  const auto& t = p.theta;
  Mat6 m;
  // clang-format off
  m << t[0],  t[1],  t[2],   0.0, -t[3],  t[4],
       t[1],  t[5],  t[6],  t[3],   0.0, -t[7],
       t[2],  t[6],  t[8], -t[4],  t[7],   0.0,
        0.0,  t[3], -t[4],  t[9],   0.0,   0.0,
      -t[3],   0.0,  t[7],   0.0,  t[9],   0.0,
       t[4], -t[7],   0.0,   0.0,   0.0,  t[9];
  // clang-format on
  return SpatialInertia{m};
}

/// Inverse of the tensor assignment for physically described links.
inline LinkParams params_from_physical(double mass, const Vec3& com, const Mat3& inertia_com,
                                       double sym_eps = tol::symmetry) {
  if (mass < 0.0) throw std::invalid_argument("params_from_physical: mass < 0");
  if ((inertia_com - inertia_com.transpose()).cwiseAbs().maxCoeff() > sym_eps)
    throw std::invalid_argument("params_from_physical: inertia matrix is not symmetric");
  const Mat3 cx = skew(com);
  const Mat3 j = inertia_com + mass * cx * cx.transpose();
  LinkParams p;
  p.theta << j(0, 0), j(0, 1), j(0, 2), mass * com.z(), mass * com.y(),
      j(1, 1), j(1, 2), mass * com.x(), j(2, 2), mass;
  return p;
}

/// Transform from the parent joint frame into this link's joint frame at
/// joint angle q: translate by the fixed offset, then rotate. A vector given
/// in parent coordinates is re-expressed in link coordinates by R(axis,q)^T.
inline PluckerTransform joint_transform(const LinkSpec& spec, double q) {
  const Mat3 rot = Eigen::AngleAxisd(q, spec.joint_axis).toRotationMatrix();
  return {rot.transpose(), spec.offset};
}

inline ThetaVector theta_from_model(const ChainModel& model) {
  VecX v(static_cast<Eigen::Index>(model.dof()) * kParamsPerLink);
  for (std::size_t i = 0; i < model.dof(); ++i)
    v.segment<kParamsPerLink>(static_cast<Eigen::Index>(i) * kParamsPerLink) =
        model.params[i].theta;
  return ThetaVector{std::move(v)};
}

inline ChainModel model_with_theta(const ChainModel& model, const ThetaVector& theta) {
  if (theta.size() != static_cast<Eigen::Index>(model.dof()) * kParamsPerLink)
    throw std::invalid_argument("model_with_theta: theta length does not match chain");
  ChainModel out = model;
  for (std::size_t i = 0; i < model.dof(); ++i)
    out.params[i].theta =
        theta.values.segment<kParamsPerLink>(static_cast<Eigen::Index>(i) * kParamsPerLink);
  return out;
}

inline void check_model(const ChainModel& model) {
  if (model.links.empty()) throw std::invalid_argument("ChainModel: needs at least one link");
  if (model.links.size() != model.params.size())
    throw std::invalid_argument("ChainModel: links/params size mismatch");
  for (const auto& link : model.links) {
    if (std::abs(link.joint_axis.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("ChainModel: joint axis of '" + link.name + "' is not unit length");
    if (!link.offset.allFinite())
      throw std::invalid_argument("ChainModel: offset of '" + link.name + "' is not finite");
  }
}

}  // namespace svadyn
