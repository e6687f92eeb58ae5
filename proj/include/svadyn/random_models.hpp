#pragma once

// Random chain/state generators shared by the verification command, the
// regressor benchmark, and the property tests.

#include <cstdint>
#include <random>
#include <string>

#include "svadyn/dynamics.hpp"
#include "svadyn/model.hpp"

namespace svadyn {

inline Vec3 random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(gauss(rng), gauss(rng), gauss(rng));
  } while (v.norm() < 1e-3);
  return v.normalized();
}

/// Physically consistent random link: positive mass, center of mass inside a
/// desk-scale envelope, positive-definite rotational inertia about the com.
inline LinkParams random_physical_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mass_dist(0.4, 3.0);
  std::uniform_real_distribution<double> com_dist(-0.2, 0.2);
  std::uniform_real_distribution<double> eig_dist(0.005, 0.05);
  const double mass = mass_dist(rng);
  const Vec3 com(com_dist(rng), com_dist(rng), com_dist(rng));
  const Mat3 basis = Eigen::Quaterniond(Eigen::Vector4d::NullaryExpr(4, [&](Eigen::Index) {
                       return std::normal_distribution<double>(0.0, 1.0)(rng);
                     }).normalized())
                         .toRotationMatrix();
  const Vec3 eigs(eig_dist(rng), eig_dist(rng), eig_dist(rng));
  const Mat3 inertia = basis * eigs.asDiagonal() * basis.transpose();
  return params_from_physical(mass, com, inertia);
}

inline ChainModel random_chain(std::mt19937_64& rng, std::size_t links) {
  std::uniform_real_distribution<double> off_dist(-0.3, 0.3);
  ChainModel model;
  model.base_gravity = Vec3(0, 0, -9.81);
  model.vertical_axis = Vec3::UnitZ();
  for (std::size_t i = 0; i < links; ++i) {
    LinkSpec spec;
    spec.name = "link" + std::to_string(i + 1);
    spec.joint_axis = random_unit_vector(rng);
    spec.offset = (i == 0) ? Vec3::Zero() : Vec3(off_dist(rng), off_dist(rng), off_dist(rng));
    model.links.push_back(std::move(spec));
    model.params.push_back(random_physical_params(rng));
  }
  return model;
}

inline JointState random_state(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> q_dist(-3.0, 3.0);
  std::uniform_real_distribution<double> dq_dist(-2.0, 2.0);
  std::uniform_real_distribution<double> ddq_dist(-3.0, 3.0);
  JointState s;
  s.q = VecX::NullaryExpr(n, [&](Eigen::Index) { return q_dist(rng); });
  s.dq = VecX::NullaryExpr(n, [&](Eigen::Index) { return dq_dist(rng); });
  s.ddq = VecX::NullaryExpr(n, [&](Eigen::Index) { return ddq_dist(rng); });
  return s;
}

/// Random non-physical parameter vector; the regressor identity holds for any
/// theta, physical or not.
inline ThetaVector random_theta(std::mt19937_64& rng, std::size_t links) {
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  VecX v = VecX::NullaryExpr(static_cast<Eigen::Index>(links) * kParamsPerLink,
                             [&](Eigen::Index) { return dist(rng); });
  return ThetaVector{std::move(v)};
}

}  // namespace svadyn
