#pragma once

// Parameter-linear regressor Y(q, qdot, qddot): an n x 10b matrix with
// Y * Theta equal to the inverse dynamics torque for every Theta. Columns are
// built by toggling one tensor entry at a time; the kinetic columns reuse the
// same central-difference primitives as the Coriolis matrix, restructured so
// each column costs O(n) and the whole regressor costs O(n^2).

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "svadyn/dynamics.hpp"
#include "svadyn/kinematics.hpp"
#include "svadyn/model.hpp"

namespace svadyn {

struct Regressor {
  MatX matrix;  // n x (10 b)
  JointState state;
};

namespace detail {

/// The ten single-parameter spatial inertia tensors E_j = tensor(e_j).
inline const std::array<Mat6, kParamsPerLink>& basis_tensors() {
  static const std::array<Mat6, kParamsPerLink> basis = [] {
    std::array<Mat6, kParamsPerLink> b;
    for (int j = 0; j < kParamsPerLink; ++j) {
      LinkParams p;
      p.theta[j] = 1.0;
      b[static_cast<std::size_t>(j)] = params_to_tensor(p).matrix;
    }
    return b;
  }();
  return basis;
}

}  // namespace detail

inline Regressor compute_regressor(const ChainModel& model, const JointState& state,
                                   double h = kDefaultFdStep) {
  check_state_sizes(model, state.dq, "dq");
  check_state_sizes(model, state.ddq, "ddq");
  const auto kin = ChainKinematics::compute(model, state.q);
  const Eigen::Index n = kin.n;
  const auto fd = FdJointDeltas::compute(model, kin, h);
  const auto& basis = detail::basis_tensors();

  const auto vel = kin.propagate(state.dq);
  const auto acc = kin.propagate(state.ddq);

  // dv[i][k] = v_i(q +- h e_k) - v_i(q), nonzero for 1 <= k <= i.
  std::vector<Vec6> dv_p(kin.jac_cols.size(), Vec6::Zero());
  std::vector<Vec6> dv_m(kin.jac_cols.size(), Vec6::Zero());
  std::vector<Vec6> gsum(static_cast<std::size_t>(n), Vec6::Zero());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 1; k <= i; ++k) {
      const Vec3& r = model.links[static_cast<std::size_t>(k)].offset;
      const Vec6& v_parent = vel[static_cast<std::size_t>(k - 1)];
      const auto& lift = kin.from_frame(i, k);
      const Vec6 dp = motion_transform(
          lift, delta_motion_apply(fd.dnu_plus[static_cast<std::size_t>(k)], r, v_parent));
      const Vec6 dm = motion_transform(
          lift, delta_motion_apply(fd.dnu_minus[static_cast<std::size_t>(k)], r, v_parent));
      dv_p[ChainKinematics::tri(i, k)] = dp;
      dv_m[ChainKinematics::tri(i, k)] = dm;
      gsum[static_cast<std::size_t>(i)] += state.dq[k] * (dp - dm);
    }
  }

  const double g = model.gravity_magnitude();
  const Vec3& vert = model.vertical_axis;
  const double inv2h = 1.0 / (2.0 * h);

  Regressor out;
  out.state = state;
  out.matrix = MatX::Zero(n, n * kParamsPerLink);
  std::vector<Vec6> z(static_cast<std::size_t>(n));

  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < kParamsPerLink; ++j) {
      const Mat6& e = basis[static_cast<std::size_t>(j)];
      auto col = out.matrix.col(i * kParamsPerLink + j);

      // Mass-matrix part plus the velocity-sum piece of the Coriolis term.
      const Vec6 w = e * acc[static_cast<std::size_t>(i)] +
                     inv2h * (e * gsum[static_cast<std::size_t>(i)]);
      for (Eigen::Index l = 0; l <= i; ++l) col[l] += kin.jac_col(i, l).dot(w);

      // Perturbed-Jacobian piece: z_k collapses the k-sum into one backward
      // sweep over ancestor joints.
      for (Eigen::Index k = 1; k <= i; ++k) {
        const Vec3& r = model.links[static_cast<std::size_t>(k)].offset;
        const Vec6 vp = vel[static_cast<std::size_t>(i)] + dv_p[ChainKinematics::tri(i, k)];
        const Vec6 vm = vel[static_cast<std::size_t>(i)] + dv_m[ChainKinematics::tri(i, k)];
        const auto& lift = kin.from_frame(i, k);
        z[static_cast<std::size_t>(k)] =
            (state.dq[k] * inv2h) *
            (delta_motion_apply_transpose(fd.dnu_plus[static_cast<std::size_t>(k)], r,
                                          motion_transform_transpose(lift, e * vp)) -
             delta_motion_apply_transpose(fd.dnu_minus[static_cast<std::size_t>(k)], r,
                                          motion_transform_transpose(lift, e * vm)));
      }
      Vec6 back = Vec6::Zero();
      for (Eigen::Index l = i - 1; l >= 0; --l) {
        back = z[static_cast<std::size_t>(l + 1)] +
               motion_transform_transpose(kin.joint_X[static_cast<std::size_t>(l + 1)], back);
        col[l] += model.links[static_cast<std::size_t>(l)].joint_axis.dot(back.head<3>());
      }

      // -1/2 d(qdot^T D qdot)/dq_l, expanded around the nominal velocity.
      for (Eigen::Index l = 1; l <= i; ++l) {
        const Vec6& dp = dv_p[ChainKinematics::tri(i, l)];
        const Vec6& dm = dv_m[ChainKinematics::tri(i, l)];
        const Vec6& v = vel[static_cast<std::size_t>(i)];
        const double diff = 2.0 * v.dot(e * (dp - dm)) + dp.dot(e * dp) - dm.dot(e * dm);
        col[l] -= 0.5 * inv2h * diff;
      }

      // Gravity columns.
      if (g != 0.0) {
        if (j == 9) {
          for (Eigen::Index l = 0; l <= i; ++l) col[l] += g * gravity_dh(kin, vert, i, l);
        } else if (j == 3 || j == 4 || j == 7) {
          const int comp = (j == 7) ? 0 : (j == 4) ? 1 : 2;  // mc = (t8, t5, t4)
          for (Eigen::Index l = 0; l <= i; ++l)
            col[l] += g * gravity_dkappa(kin, vert, i, l)[comp];
        }
      }
    }
  }
  return out;
}

/// Literal toggle loop: set theta_ij = 1 with all other parameters zero and
/// evaluate the assembled equations of motion. Slow; kept as the reference
/// for differential tests against compute_regressor.
inline Regressor compute_regressor_reference(const ChainModel& model, const JointState& state,
                                             double h = kDefaultFdStep) {
  const auto n = static_cast<Eigen::Index>(model.dof());
  ChainModel scratch = model;
  for (auto& p : scratch.params) p.theta.setZero();
  Regressor out;
  out.state = state;
  out.matrix = MatX::Zero(n, n * kParamsPerLink);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < kParamsPerLink; ++j) {
      scratch.params[static_cast<std::size_t>(i)].theta[j] = 1.0;
      out.matrix.col(i * kParamsPerLink + j) = inverse_dynamics(scratch, state, h);
      scratch.params[static_cast<std::size_t>(i)].theta[j] = 0.0;
    }
  }
  return out;
}

/// Greedy identifiable-column selection over a batch of states: a column is
/// kept when its component outside the span of the previously kept columns
/// exceeds threshold * sigma_max of the stacked regressor.
inline std::vector<Eigen::Index> identifiable_columns(const ChainModel& model,
                                                      const std::vector<JointState>& states,
                                                      double threshold = 1e-8,
                                                      double h = kDefaultFdStep) {
  if (states.empty()) throw std::invalid_argument("identifiable_columns: empty state list");
  const auto n = static_cast<Eigen::Index>(model.dof());
  const Eigen::Index cols = n * kParamsPerLink;
  MatX stacked(static_cast<Eigen::Index>(states.size()) * n, cols);
  for (std::size_t s = 0; s < states.size(); ++s)
    stacked.middleRows(static_cast<Eigen::Index>(s) * n, n) =
        compute_regressor(model, states[s], h).matrix;

  const double sigma_max = stacked.jacobiSvd().singularValues()(0);
  const double cut = threshold * sigma_max;

  std::vector<Eigen::Index> kept;
  MatX basis(stacked.rows(), cols);
  Eigen::Index rank = 0;
  for (Eigen::Index c = 0; c < cols; ++c) {
    VecX y = stacked.col(c);
    for (int pass = 0; pass < 2; ++pass)
      if (rank > 0) y -= basis.leftCols(rank) * (basis.leftCols(rank).transpose() * y);
    if (y.norm() > cut) {
      basis.col(rank++) = y / y.norm();
      kept.push_back(c);
    }
  }
  return kept;
}

}  // namespace svadyn
