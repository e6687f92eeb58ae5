#pragma once

// Equations of motion for a chain: mass matrix, Christoffel Coriolis matrix
// (central differences of D), gravity vector, inverse and forward dynamics,
// total energy. Every term is linear in the stacked parameter vector.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "svadyn/kinematics.hpp"
#include "svadyn/model.hpp"

namespace svadyn {

struct JointState {
  VecX q;    // [rad]
  VecX dq;   // [rad/s]
  VecX ddq;  // [rad/s^2]
};

struct DynamicsTerms {
  MatX D;  // n x n [kg*m^2]
  MatX C;  // n x n
  VecX G;  // n [N*m]
};

class SingularDynamicsError : public std::runtime_error {
 public:
  SingularDynamicsError(const std::string& what, double condition)
      : std::runtime_error(what), condition_estimate(condition) {}
  double condition_estimate;
};

inline void check_state_sizes(const ChainModel& model, const VecX& v, const char* name) {
  if (v.size() != static_cast<Eigen::Index>(model.dof()))
    throw std::invalid_argument(std::string("dynamics: ") + name + " length mismatch");
}

/// Body Jacobian of link i: v_Oi = J_i(q) qdot, expressed in the link frame.
inline MatX body_jacobian(const ChainModel& model, const VecX& q, Eigen::Index i) {
  const auto kin = ChainKinematics::compute(model, q);
  return kin.jacobian(i);
}

namespace detail {

inline MatX mass_matrix_from_kin(const ChainModel& model, const ChainKinematics& kin) {
  const Eigen::Index n = kin.n;
  MatX d = MatX::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Mat6 inertia = params_to_tensor(model.params[static_cast<std::size_t>(i)]).matrix;
    for (Eigen::Index m = 0; m <= i; ++m) {
      const Vec6 w = inertia * kin.jac_col(i, m);
      for (Eigen::Index l = 0; l <= i; ++l) d(l, m) += kin.jac_col(i, l).dot(w);
    }
  }
  return d;
}

/// Central-difference partial dD/dq_k, assembled from the cancellation-free
/// perturbed-minus-nominal Jacobian columns.
inline MatX mass_matrix_partial(const ChainModel& model, const ChainKinematics& kin,
                                const FdJointDeltas& fd, Eigen::Index k) {
  const Eigen::Index n = kin.n;
  MatX dd = MatX::Zero(n, n);
  if (k == 0) return dd;  // base frame is fixed; D has no q_0 dependence

  const Vec3& r = model.links[static_cast<std::size_t>(k)].offset;
  const Mat3& dnu_p = fd.dnu_plus[static_cast<std::size_t>(k)];
  const Mat3& dnu_m = fd.dnu_minus[static_cast<std::size_t>(k)];

  std::vector<Vec6> dsp(static_cast<std::size_t>(k));
  std::vector<Vec6> dsm(static_cast<std::size_t>(k));
  for (Eigen::Index i = k; i < n; ++i) {
    const Mat6 inertia = params_to_tensor(model.params[static_cast<std::size_t>(i)]).matrix;
    const PluckerTransform& lift = kin.from_frame(i, k);
    for (Eigen::Index m = 0; m < k; ++m) {
      const Vec6& base = kin.jac_col(k - 1, m);
      dsp[static_cast<std::size_t>(m)] =
          motion_transform(lift, delta_motion_apply(dnu_p, r, base));
      dsm[static_cast<std::size_t>(m)] =
          motion_transform(lift, delta_motion_apply(dnu_m, r, base));
    }
    for (Eigen::Index m = 0; m < k; ++m) {
      const Vec6 w =
          inertia * (dsp[static_cast<std::size_t>(m)] - dsm[static_cast<std::size_t>(m)]);
      for (Eigen::Index l = 0; l <= i; ++l) {
        const double a = kin.jac_col(i, l).dot(w);
        dd(l, m) += a;
        dd(m, l) += a;
      }
    }
    // quadratic-in-delta part (both indices perturbed)
    for (Eigen::Index l = 0; l < k; ++l) {
      const Vec6 wp = inertia * dsp[static_cast<std::size_t>(l)];
      const Vec6 wm = inertia * dsm[static_cast<std::size_t>(l)];
      for (Eigen::Index m = 0; m < k; ++m)
        dd(l, m) += dsp[static_cast<std::size_t>(m)].dot(wp) -
                    dsm[static_cast<std::size_t>(m)].dot(wm);
    }
  }
  dd /= 2.0 * fd.h;
  return dd;
}

inline MatX coriolis_from_kin(const ChainModel& model, const ChainKinematics& kin,
                              const VecX& dq, double h) {
  const Eigen::Index n = kin.n;
  const auto fd = FdJointDeltas::compute(model, kin, h);
  std::vector<MatX> partial;
  partial.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) partial.push_back(mass_matrix_partial(model, kin, fd, k));

  MatX c = MatX::Zero(n, n);
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < n; ++k)
        acc += 0.5 *
               (partial[static_cast<std::size_t>(k)](l, j) +
                partial[static_cast<std::size_t>(j)](l, k) -
                partial[static_cast<std::size_t>(l)](j, k)) *
               dq[k];
      c(l, j) = acc;
    }
  return c;
}

inline VecX gravity_from_kin(const ChainModel& model, const ChainKinematics& kin) {
  const Eigen::Index n = kin.n;
  const double g = model.gravity_magnitude();
  const Vec3& vert = model.vertical_axis;
  VecX out = VecX::Zero(n);
  if (g == 0.0) return out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = model.params[static_cast<std::size_t>(i)];
    const double mass = p.mass();
    const Vec3 mc = p.first_moment();
    for (Eigen::Index l = 0; l <= i; ++l)
      out[l] += g * (mass * gravity_dh(kin, vert, i, l) + mc.dot(gravity_dkappa(kin, vert, i, l)));
  }
  return out;
}

}  // namespace detail

inline MatX mass_matrix(const ChainModel& model, const VecX& q) {
  return detail::mass_matrix_from_kin(model, ChainKinematics::compute(model, q));
}

/// C(q, qdot) from the Christoffel symbols of D, with dD/dq by central
/// differences of step h.
inline MatX coriolis_matrix(const ChainModel& model, const VecX& q, const VecX& dq,
                            double h = kDefaultFdStep) {
  check_state_sizes(model, dq, "dq");
  return detail::coriolis_from_kin(model, ChainKinematics::compute(model, q), dq, h);
}

inline VecX gravity_vector(const ChainModel& model, const VecX& q) {
  return detail::gravity_from_kin(model, ChainKinematics::compute(model, q));
}

inline DynamicsTerms dynamics_terms(const ChainModel& model, const VecX& q, const VecX& dq,
                                    double h = kDefaultFdStep) {
  check_state_sizes(model, dq, "dq");
  const auto kin = ChainKinematics::compute(model, q);
  return {detail::mass_matrix_from_kin(model, kin), detail::coriolis_from_kin(model, kin, dq, h),
          detail::gravity_from_kin(model, kin)};
}

/// K(q, qdot, qddot) = D qddot + C qdot + G; the joint torque for B = 1.
inline VecX inverse_dynamics(const ChainModel& model, const JointState& state,
                             double h = kDefaultFdStep) {
  check_state_sizes(model, state.ddq, "ddq");
  const auto terms = dynamics_terms(model, state.q, state.dq, h);
  return terms.D * state.ddq + terms.C * state.dq + terms.G;
}

/// qddot = D^-1 (u - C qdot - G). Rejects ill-conditioned mass matrices.
inline VecX forward_dynamics(const ChainModel& model, const VecX& q, const VecX& dq,
                             const VecX& u, double h = kDefaultFdStep,
                             double condition_bound = 1e12) {
  check_state_sizes(model, u, "u");
  const auto terms = dynamics_terms(model, q, dq, h);
  Eigen::SelfAdjointEigenSolver<MatX> eig(terms.D);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > condition_bound) {
    const double cond = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
    throw SingularDynamicsError("forward_dynamics: mass matrix singular or ill-conditioned", cond);
  }
  const VecX rhs = u - terms.C * dq - terms.G;
  return eig.eigenvectors() *
         (eig.eigenvectors().transpose() * rhs).cwiseQuotient(eig.eigenvalues());
}

/// T + V, with heights measured from the world origin along the vertical axis.
inline double total_energy(const ChainModel& model, const VecX& q, const VecX& dq) {
  check_state_sizes(model, dq, "dq");
  const auto kin = ChainKinematics::compute(model, q);
  const auto vel = kin.propagate(dq);
  const double g = model.gravity_magnitude();
  const Vec3& vert = model.vertical_axis;
  double e = 0.0;
  for (Eigen::Index i = 0; i < kin.n; ++i) {
    const auto& p = model.params[static_cast<std::size_t>(i)];
    const Vec6& v = vel[static_cast<std::size_t>(i)];
    e += 0.5 * v.dot(params_to_tensor(p).matrix * v);
    if (g != 0.0) {
      const double h_joint = vert.dot(kin.world_p[static_cast<std::size_t>(i)]);
      const Vec3 kappa = kin.world_R[static_cast<std::size_t>(i)].transpose() * vert;
      e += g * (p.mass() * h_joint + kappa.dot(p.first_moment()));
    }
  }
  return e;
}

}  // namespace svadyn
