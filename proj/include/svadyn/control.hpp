#pragma once

// Computed-torque control: U_cmd = Y(q, qdot, qddot_cmd) theta_hat, an outer
// PD loop producing commanded accelerations, and a validity-gated switch
// between the nominal and the identified parameter vector.

#include <memory>
#include <stdexcept>

#include "svadyn/identify.hpp"
#include "svadyn/model.hpp"
#include "svadyn/regressor.hpp"

namespace svadyn {

struct ControllerConfig {
  VecX kp;             // [1/s^2]
  VecX kd;             // [1/s]
  VecX torque_limits;  // [N*m]; empty disables clamping
  double r2_threshold = 0.95;
};

struct TrajectoryPoint {
  VecX q_des;
  VecX dq_des;
  VecX ddq_des;
};

struct TorqueCommand {
  VecX u;
  bool saturated = false;
};

enum class ModelSource { nominal, identified };

struct ControlStep {
  TorqueCommand cmd;
  ModelSource model_used = ModelSource::nominal;
  VecX ddq_cmd;
};

inline TorqueCommand clamp_torque(VecX u, const VecX& limits) {
  TorqueCommand cmd;
  if (limits.size() != 0) {
    if (limits.size() != u.size())
      throw std::invalid_argument("clamp_torque: limits length mismatch");
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (std::abs(u[i]) > limits[i]) {
        u[i] = (u[i] > 0.0 ? limits[i] : -limits[i]);
        cmd.saturated = true;
      }
    }
  }
  cmd.u = std::move(u);
  return cmd;
}

/// U_cmd = Y(q, qdot, qddot_cmd) theta_hat, clamped to the limits if given.
inline TorqueCommand computed_torque(const ChainModel& model, const ThetaVector& theta_hat,
                                     const VecX& q, const VecX& dq, const VecX& ddq_cmd,
                                     const VecX& torque_limits = VecX(),
                                     double h = kDefaultFdStep) {
  if (theta_hat.size() != static_cast<Eigen::Index>(model.dof()) * kParamsPerLink)
    throw std::invalid_argument("computed_torque: theta length mismatch");
  const auto reg = compute_regressor(model, {q, dq, ddq_cmd}, h);
  return clamp_torque(reg.matrix * theta_hat.values, torque_limits);
}

/// qddot_cmd = ddq_des + kd (dq_des - dq) + kp (q_des - q)
inline VecX pd_acceleration(const ControllerConfig& cfg, const TrajectoryPoint& ref, const VecX& q,
                            const VecX& dq) {
  if (cfg.kp.size() != q.size() || cfg.kd.size() != q.size())
    throw std::invalid_argument("pd_acceleration: gain length mismatch");
  return ref.ddq_des + cfg.kd.cwiseProduct(ref.dq_des - dq) + cfg.kp.cwiseProduct(ref.q_des - q);
}

/// One control tick. Uses the estimator snapshot iff it is marked valid,
/// otherwise falls back to the nominal parameters.
inline ControlStep gated_controller_step(const ChainModel& model, const ControllerConfig& cfg,
                                         const ThetaVector& nominal_theta,
                                         const std::shared_ptr<const FitSnapshot>& snapshot,
                                         const TrajectoryPoint& ref, const VecX& q, const VecX& dq,
                                         double h = kDefaultFdStep) {
  ControlStep step;
  step.ddq_cmd = pd_acceleration(cfg, ref, q, dq);
  const bool use_identified = snapshot && snapshot->model_valid;
  const ThetaVector& theta = use_identified ? snapshot->theta_hat : nominal_theta;
  step.model_used = use_identified ? ModelSource::identified : ModelSource::nominal;
  step.cmd = computed_torque(model, theta, q, dq, step.ddq_cmd, cfg.torque_limits, h);
  return step;
}

}  // namespace svadyn
